use serde::{Deserialize, Serialize};

use super::tree::{GenealogyTree, ParticleId};
use crate::envelope::front_m;
use crate::error::{invalid, Error, Result};

/// Closed window `[lo, hi]` of positions relative to `m(t)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub lo: f64,
    pub hi: f64,
}

impl Window {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Window(format!("window needs finite lo <= hi, got [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    /// Parses `lo:hi`.
    pub fn parse(s: &str) -> Result<Self> {
        let (lo, hi) = s
            .split_once(':')
            .ok_or_else(|| Error::Window(format!("expected lo:hi, got {s:?}")))?;
        let num = |v: &str| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::Window(format!("bad window bound {v:?}")))
        };
        Self::new(num(lo)?, num(hi)?)
    }

    #[inline]
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    /// `D̄ = sup D`.
    pub fn upper(&self) -> f64 {
        self.hi
    }

    /// `D̲ = inf D`.
    pub fn lower(&self) -> f64 {
        self.lo
    }
}

impl Default for Window {
    fn default() -> Self {
        Self { lo: -2.0, hi: 0.0 }
    }
}

/// Alive leaves whose recentred final position lies in the window, sorted
/// by position descending.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtremalSnapshot {
    pub horizon: f64,
    pub front: f64,
    pub window: Window,
    pub positions: Vec<f64>,
    pub ids: Vec<ParticleId>,
}

impl ExtremalSnapshot {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

/// Checks that pruning cannot have removed any particle that would end in
/// `m(t) + window` at the horizon.
pub fn check_window_against_prune(tree: &GenealogyTree, window: &Window) -> Result<()> {
    let prune = tree.prune_config();
    if prune.enabled && window.lo <= -prune.margin {
        return Err(invalid(format!(
            "window lower edge {} reaches the prune barrier m(t) - {}",
            window.lo, prune.margin
        )));
    }
    Ok(())
}

pub fn extremal_snapshot(tree: &GenealogyTree, window: Window) -> Result<ExtremalSnapshot> {
    let (xs, ids): (Vec<f64>, Vec<ParticleId>) = tree.leaves().map(|r| (r.death_position, r.id)).unzip();
    snapshot_from_leaves(tree, window, &xs, &ids)
}

/// Same as [`extremal_snapshot`] from leaf positions and ids already
/// collected in arena order.
pub fn snapshot_from_leaves(tree: &GenealogyTree, window: Window, xs: &[f64], ids: &[ParticleId]) -> Result<ExtremalSnapshot> {
    check_window_against_prune(tree, &window)?;
    let front = front_m(tree.horizon())?;
    let mut hits: Vec<(f64, ParticleId)> = xs
        .iter()
        .zip(ids)
        .map(|(x, id)| (x - front, *id))
        .filter(|(x, _)| window.contains(*x))
        .collect();
    hits.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    Ok(ExtremalSnapshot {
        horizon: tree.horizon(),
        front,
        window,
        positions: hits.iter().map(|h| h.0).collect(),
        ids: hits.iter().map(|h| h.1).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{simulate, SimulationConfig};
    use crate::kernels::RngStream;

    #[test]
    fn window_parse() {
        assert_eq!(Window::parse("-2:0").unwrap(), Window::default());
        assert!(Window::parse("1:0").is_err());
        assert!(Window::parse("x").is_err());
    }

    #[test]
    fn wide_window_holds_every_leaf() {
        let tree = simulate(&SimulationConfig::binary(6.0), &mut RngStream::new(4, 0)).unwrap();
        let snap = extremal_snapshot(&tree, Window::new(-1e6, 1e6).unwrap()).unwrap();
        assert_eq!(snap.len(), tree.population());
        assert!(snap.positions.windows(2).all(|w| w[0] >= w[1]));
        let top = snap.ids[0];
        assert_eq!(tree.record(top).death_position, tree.max_position().unwrap());
    }

    #[test]
    fn window_above_max_is_empty() {
        let tree = simulate(&SimulationConfig::binary(6.0), &mut RngStream::new(4, 1)).unwrap();
        let top = tree.max_position().unwrap() - front_m(6.0).unwrap();
        let snap = extremal_snapshot(&tree, Window::new(top + 0.1, top + 1.0).unwrap()).unwrap();
        assert!(snap.is_empty());
    }

    #[test]
    fn count_matches_direct() {
        let tree = simulate(&SimulationConfig::binary(7.0), &mut RngStream::new(4, 2)).unwrap();
        let m = front_m(7.0).unwrap();
        let snap = extremal_snapshot(&tree, Window::new(-1.0, 1e6).unwrap()).unwrap();
        let direct = tree.leaves().filter(|r| r.death_position >= m - 1.0).count();
        assert_eq!(snap.len(), direct);
    }
}
