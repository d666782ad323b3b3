//! Overlaps of extremal particles and the concentration of their genealogy.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::inference::Rate;
use super::summary::SummarySet;
use crate::engine::{ExtremalSnapshot, GenealogyTree};
use crate::error::{invalid, Result};

/// A distinct extremal pair overlap and the number of pairs sharing it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OverlapCount {
    pub q: f64,
    pub pairs: u64,
}

/// `Q_t(i, j)` over all unordered pairs of distinct particles in the
/// snapshot, grouped by value and sorted by `q`.
///
/// Each pair separates at the branching of its most recent common ancestor,
/// so a node with `n` marked descendants accounts for `C(n, 2)` minus the
/// pairs already split further down. This is linear in the total lineage
/// length rather than quadratic in the snapshot size.
pub fn extremal_pair_overlaps(tree: &GenealogyTree, snapshot: &ExtremalSnapshot) -> Result<Vec<OverlapCount>> {
    let choose2 = |n: u64| n * n.saturating_sub(1) / 2;
    let mut below: HashMap<u32, u64> = HashMap::new();
    for &leaf in &snapshot.ids {
        let mut cur = Some(leaf);
        while let Some(id) = cur {
            *below.entry(id.0).or_default() += 1;
            cur = tree.record(id).parent;
        }
    }
    let mut split: HashMap<u32, u64> = below.iter().map(|(&id, &n)| (id, choose2(n))).collect();
    for (&id, &n) in &below {
        if let Some(p) = tree.record(crate::engine::ParticleId(id)).parent {
            *split.get_mut(&p.0).expect("ancestor counted") -= choose2(n);
        }
    }
    let mut out: Vec<OverlapCount> = split
        .into_iter()
        .filter(|&(_, pairs)| pairs > 0)
        .map(|(id, pairs)| OverlapCount {
            q: tree.record(crate::engine::ParticleId(id)).death_time,
            pairs,
        })
        .collect();
    out.sort_by(|a, b| a.q.total_cmp(&b.q));
    out.dedup_by(|b, a| {
        let same = a.q == b.q;
        if same {
            a.pairs += b.pairs;
        }
        same
    });
    Ok(out)
}

/// Fraction of replicas holding an extremal pair with `Q` in `(r, t - r)`,
/// for any `r`.
pub fn pair_inside_fraction(set: &SummarySet, r: f64) -> Result<Rate> {
    set.horizon()?;
    let hits = set
        .replicas()
        .iter()
        .filter(|s| s.pair_reach().is_some_and(|v| v > r))
        .count();
    Ok(Rate::new(hits as u64, set.len() as u64))
}

/// The same fraction, restricted to the regime `t > 3r`.
pub fn genealogy_concentration(set: &SummarySet, r: f64) -> Result<Rate> {
    let t = set.horizon()?;
    if !(r > 0.0 && t > 3.0 * r) {
        return Err(invalid(format!("genealogy concentration needs t > 3r and r > 0, got t = {t}, r = {r}")));
    }
    pair_inside_fraction(set, r)
}

/// Equal-width histogram on `[lo, hi]`; the last bin is closed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn new(lo: f64, hi: f64, bins: usize, values: impl IntoIterator<Item = f64>) -> Self {
        Self::weighted(lo, hi, bins, values.into_iter().map(|v| (v, 1)))
    }

    /// Histogram of `(value, multiplicity)` pairs.
    pub fn weighted(lo: f64, hi: f64, bins: usize, values: impl IntoIterator<Item = (f64, u64)>) -> Self {
        let mut counts = vec![0u64; bins];
        let width = (hi - lo) / bins as f64;
        for (v, w) in values {
            if v < lo || v > hi {
                continue;
            }
            let b = (((v - lo) / width) as usize).min(bins - 1);
            counts[b] += w;
        }
        Self { lo, hi, counts }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn edges(&self) -> Vec<f64> {
        let n = self.counts.len();
        (0..=n).map(|i| self.lo + (self.hi - self.lo) * i as f64 / n as f64).collect()
    }
}

/// Pooled overlap histogram of extremal pairs on `[0, t]`.
pub fn overlap_histogram(set: &SummarySet, bins: usize) -> Result<Histogram> {
    let t = set.horizon()?;
    Ok(Histogram::weighted(
        0.0,
        t,
        bins,
        set.replicas().iter().flat_map(|s| s.pair_overlaps.iter().map(|o| (o.q, o.pairs))),
    ))
}

/// Share of pooled extremal-pair overlaps strictly inside `(r, t - r)`.
pub fn overlap_mass_inside(set: &SummarySet, r: f64) -> Result<Rate> {
    let t = set.horizon()?;
    let (mut inside, mut total) = (0u64, 0u64);
    for o in set.replicas().iter().flat_map(|s| s.pair_overlaps.iter()) {
        total += o.pairs;
        if o.q > r && o.q < t - r {
            inside += o.pairs;
        }
    }
    Ok(Rate::new(inside, total))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::fixtures::two_level_fixture;
    use crate::engine::{extremal_snapshot, overlap_q, Window};

    #[test]
    fn fixture_pair_overlaps() {
        let tree = two_level_fixture();
        let snap = extremal_snapshot(&tree, Window::new(-1e6, 1e6).unwrap()).unwrap();
        let grouped = extremal_pair_overlaps(&tree, &snap).unwrap();
        let q: Vec<f64> = grouped
            .iter()
            .flat_map(|o| std::iter::repeat_n(o.q, o.pairs as usize))
            .collect();
        assert_eq!(q, vec![1.0, 1.0, 2.5]);
        for (a, &i) in snap.ids.iter().enumerate() {
            for &j in &snap.ids[a + 1..] {
                assert!(q.contains(&overlap_q(&tree, i, j).unwrap()));
            }
        }
    }

    #[test]
    fn grouped_overlaps_match_pairwise_mrca() {
        use crate::engine::{simulate, SimulationConfig};
        use crate::kernels::RngStream;
        let tree = simulate(&SimulationConfig::binary(5.0), &mut RngStream::new(11, 0)).unwrap();
        let snap = extremal_snapshot(&tree, Window::new(-1e6, 1e6).unwrap()).unwrap();
        assert!(snap.ids.len() > 5);
        let mut brute = Vec::new();
        for (a, &i) in snap.ids.iter().enumerate() {
            for &j in &snap.ids[a + 1..] {
                brute.push(overlap_q(&tree, i, j).unwrap());
            }
        }
        brute.sort_by(f64::total_cmp);
        let grouped: Vec<f64> = extremal_pair_overlaps(&tree, &snap)
            .unwrap()
            .iter()
            .flat_map(|o| std::iter::repeat_n(o.q, o.pairs as usize))
            .collect();
        assert_eq!(grouped, brute);
    }

    #[test]
    fn histogram_bins() {
        let h = Histogram::new(0.0, 4.0, 4, [0.0, 0.5, 1.0, 3.9, 4.0, 5.0]);
        assert_eq!(h.counts, vec![2, 1, 0, 2]);
        assert_eq!(h.total(), 5);
        assert_eq!(h.edges(), vec![0.0, 1.0, 2.0, 3.0, 4.0]);
    }
}
