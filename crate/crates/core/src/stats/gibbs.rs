//! Replicated Gibbs measure `G(k) ∝ exp(beta x_k(t))` and its overlaps.

use serde::{Deserialize, Serialize};

use crate::engine::{mrca, GenealogyTree, ParticleId};
use crate::error::{invalid, Result};
use crate::kernels::RngStream;

/// Critical inverse temperature.
pub const BETA_CRITICAL: f64 = std::f64::consts::SQRT_2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GibbsSample {
    pub beta: f64,
    /// `Q/t` for each sampled pair.
    pub overlaps: Vec<f64>,
    /// `beta <= sqrt(2)`: the two-point limit is not predicted there.
    pub below_critical: bool,
}

/// Cumulative Gibbs weights, shifted by the largest log-weight.
fn cumulative_weights(positions: &[f64], beta: f64) -> Vec<f64> {
    let top = positions.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut acc = 0.0;
    positions
        .iter()
        .map(|x| {
            acc += (beta * (x - top)).exp();
            acc
        })
        .collect()
}

fn draw(cdf: &[f64], rng: &mut RngStream) -> usize {
    let u = rng.uniform() * cdf[cdf.len() - 1];
    cdf.partition_point(|c| *c <= u).min(cdf.len() - 1)
}

/// Indices of `n` independent pairs drawn from the product Gibbs measure on
/// `positions`.
pub fn gibbs_pair_indices(positions: &[f64], beta: f64, n: usize, rng: &mut RngStream) -> Result<Vec<(usize, usize)>> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(invalid(format!("inverse temperature must be positive, got {beta}")));
    }
    if positions.is_empty() {
        return Err(invalid("Gibbs measure needs at least one particle"));
    }
    let cdf = cumulative_weights(positions, beta);
    Ok((0..n).map(|_| (draw(&cdf, rng), draw(&cdf, rng))).collect())
}

pub fn gibbs_overlap_distribution(tree: &GenealogyTree, beta: f64, n_pairs: usize, rng: &mut RngStream) -> Result<GibbsSample> {
    let (xs, ids): (Vec<f64>, Vec<ParticleId>) = tree.leaves().map(|r| (r.death_position, r.id)).unzip();
    gibbs_from_leaves(tree, &xs, &ids, beta, n_pairs, rng)
}

/// Same as [`gibbs_overlap_distribution`] from leaf positions and ids
/// already collected in arena order.
pub fn gibbs_from_leaves(
    tree: &GenealogyTree,
    xs: &[f64],
    ids: &[ParticleId],
    beta: f64,
    n_pairs: usize,
    rng: &mut RngStream,
) -> Result<GibbsSample> {
    if tree.has_pruned() {
        return Err(invalid("Gibbs weights need every leaf; the tree was pruned"));
    }
    let t = tree.horizon();
    let overlaps = gibbs_pair_indices(xs, beta, n_pairs, rng)?
        .into_iter()
        .map(|(a, b)| {
            if a == b {
                1.0
            } else {
                tree.record(mrca(tree, ids[a], ids[b])).death_time / t
            }
        })
        .collect();
    Ok(GibbsSample {
        beta,
        overlaps,
        below_critical: beta <= BETA_CRITICAL,
    })
}

/// Mass of `Q/t` below `lo`, inside `(lo, hi)` and above `hi`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OverlapMasses {
    pub near_zero: f64,
    pub middle: f64,
    pub near_one: f64,
    pub samples: usize,
}

pub fn overlap_masses(overlaps: &[f64], lo: f64, hi: f64) -> OverlapMasses {
    let n = overlaps.len().max(1) as f64;
    let count = |f: &dyn Fn(f64) -> bool| overlaps.iter().filter(|&&q| f(q)).count() as f64 / n;
    OverlapMasses {
        near_zero: count(&|q| q <= lo),
        middle: count(&|q| q > lo && q < hi),
        near_one: count(&|q| q >= hi),
        samples: overlaps.len(),
    }
}
