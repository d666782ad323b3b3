//! Small hand-built trees with known genealogy.

use super::tree::{GenealogyTree, ManualParticle};
use crate::kernels::OffspringLaw;

fn particle(parent: Option<usize>, birth: f64, death: f64, checkpoints: &[f64], alive: bool) -> ManualParticle {
    ManualParticle {
        parent,
        birth_time: birth,
        death_time: death,
        checkpoints: checkpoints.to_vec(),
        death_position: *checkpoints.last().unwrap_or(&0.0),
        alive_at_horizon: alive,
    }
}

/// Horizon 4 on a unit grid. The root splits at 1.0, its left child splits
/// again at 2.5; leaves in arena order are left-left, left-right, right.
pub fn two_level_fixture() -> GenealogyTree {
    let mut left = particle(Some(0), 1.0, 2.5, &[1.0], false);
    left.death_position = 1.2;
    let particles = [
        particle(None, 0.0, 1.0, &[0.5], false),
        left,
        particle(Some(1), 2.5, 4.0, &[1.5, 2.0], true),
        particle(Some(1), 2.5, 4.0, &[0.8, 0.3], true),
        particle(Some(0), 1.0, 4.0, &[0.0, -0.5, -1.0], true),
    ];
    GenealogyTree::from_manual(4.0, 1.0, OffspringLaw::binary(), &particles).unwrap()
}

/// Two leaves that separate at `split` (a grid time on the unit grid) and end
/// at the given positions at integer horizon `t`.
pub fn two_leaf_fixture(t: u32, split: u32, ends: [f64; 2]) -> GenealogyTree {
    assert!(0 < split && split < t);
    let root: Vec<f64> = vec![0.0; split as usize];
    let tail = |end: f64| -> Vec<f64> {
        let n = (t - split) as usize;
        (1..=n).map(|k| end * k as f64 / n as f64).collect()
    };
    let particles = [
        particle(None, 0.0, split as f64, &root, false),
        particle(Some(0), split as f64, t as f64, &tail(ends[0]), true),
        particle(Some(0), split as f64, t as f64, &tail(ends[1]), true),
    ];
    GenealogyTree::from_manual(t as f64, 1.0, OffspringLaw::binary(), &particles).unwrap()
}
