//! Gaps between the top order statistics, against a Poisson control.

use serde::{Deserialize, Serialize};

use super::inference::MeanEstimate;
use super::summary::SummarySet;
use crate::error::{invalid, Result};
use crate::kernels::RngStream;

const SQRT_2: f64 = std::f64::consts::SQRT_2;

pub const MAX_GAP_RANK: usize = 20;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapRow {
    pub rank: usize,
    pub bbm: MeanEstimate,
    pub poisson: MeanEstimate,
    pub poisson_exact: f64,
    pub inverse_rank: f64,
    /// `1/n - 1/(n log n)`; undefined at `n = 1`.
    pub derrida_brunet: Option<f64>,
}

impl GapRow {
    /// BBM mean below the control by at least `k` combined standard errors.
    pub fn denser_than_poisson(&self, k: f64) -> bool {
        let se = self.bbm.se.hypot(self.poisson.se);
        self.bbm.mean + k * se <= self.poisson.mean
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub rows: Vec<GapRow>,
    pub used: usize,
    pub skipped: usize,
}

/// Mean gap `x_(n) - x_(n+1)` for the top `max_rank + 1` points of a
/// Poisson process with intensity `e^{-sqrt2 x} dx`.
///
/// The points are `-log(sqrt2 G_k)/sqrt2` for the arrival times `G_k` of a
/// unit-rate Poisson process, so each gap is `log(G_{n+1}/G_n)/sqrt2`.
pub fn poisson_control_gaps(max_rank: usize, samples: usize, rng: &mut RngStream) -> Vec<MeanEstimate> {
    let mut gaps = vec![Vec::with_capacity(samples); max_rank];
    for _ in 0..samples {
        let mut g = rng.exp1();
        for bucket in gaps.iter_mut() {
            let next = g + rng.exp1();
            bucket.push((next / g).ln() / SQRT_2);
            g = next;
        }
    }
    gaps.iter().map(|g| MeanEstimate::from_slice(g)).collect()
}

/// Exact mean Poisson gap `1 / (sqrt2 n)`.
pub fn poisson_gap_mean(rank: usize) -> f64 {
    1.0 / (SQRT_2 * rank as f64)
}

pub fn gap_statistics(set: &SummarySet, max_rank: usize, control_samples: usize, rng: &mut RngStream) -> Result<GapReport> {
    if max_rank == 0 || max_rank > MAX_GAP_RANK {
        return Err(invalid(format!("max_rank must lie in 1..={MAX_GAP_RANK}, got {max_rank}")));
    }
    let mut gaps = vec![Vec::new(); max_rank];
    let mut skipped = 0;
    for s in set.replicas() {
        if (s.population as usize) <= max_rank {
            skipped += 1;
            continue;
        }
        if s.top.len() <= max_rank {
            return Err(invalid(format!(
                "summaries keep only {} order statistics; rank {max_rank} needs {}",
                s.top.len(),
                max_rank + 1
            )));
        }
        for (n, bucket) in gaps.iter_mut().enumerate() {
            bucket.push(s.top[n] - s.top[n + 1]);
        }
    }
    let used = set.len() - skipped;
    let control = poisson_control_gaps(max_rank, control_samples, rng);
    let rows = gaps
        .iter()
        .zip(control)
        .enumerate()
        .map(|(i, (g, poisson))| {
            let n = (i + 1) as f64;
            GapRow {
                rank: i + 1,
                bbm: MeanEstimate::from_slice(g),
                poisson,
                poisson_exact: poisson_gap_mean(i + 1),
                inverse_rank: 1.0 / n,
                derrida_brunet: (i > 0).then(|| 1.0 / n - 1.0 / (n * n.ln())),
            }
        })
        .collect();
    Ok(GapReport { rows, used, skipped })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::fixtures::two_leaf_fixture;
    use crate::engine::Window;
    use crate::kernels::RngStream;
    use crate::stats::summary::{summarize, SummaryConfig};

    #[test]
    fn poisson_control_matches_closed_form() {
        let est = poisson_control_gaps(3, 200_000, &mut RngStream::new(1, 0));
        for (i, e) in est.iter().enumerate() {
            assert!(e.z_from(poisson_gap_mean(i + 1)) < 4.0, "rank {}: {e:?}", i + 1);
        }
    }

    #[test]
    fn two_leaf_gap() {
        let tree = two_leaf_fixture(6, 2, [5.0, 3.0]);
        let cfg = SummaryConfig {
            window: Window::new(-100.0, 100.0).unwrap(),
            ..SummaryConfig::default()
        };
        let s = summarize(&tree, &cfg, 0, &RngStream::new(0, 0)).unwrap();
        let set = SummarySet::new(vec![s]).unwrap();
        let r = gap_statistics(&set, 1, 10, &mut RngStream::new(0, 1)).unwrap();
        assert_eq!(r.rows[0].bbm.mean, 2.0);
        assert_eq!(r.used, 1);
        let r = gap_statistics(&set, 2, 10, &mut RngStream::new(0, 1)).unwrap();
        assert_eq!(r.skipped, 1);
        assert!(gap_statistics(&set, 21, 10, &mut RngStream::new(0, 1)).is_err());
    }
}
