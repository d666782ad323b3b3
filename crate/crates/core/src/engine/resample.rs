use super::tree::GenealogyTree;
use crate::kernels::RngStream;

/// Same branching skeleton with fresh Brownian displacements.
///
/// Birth and death times, topology and flags are kept; every checkpoint is
/// redrawn from the parent's new branch position onwards.
pub fn resample_positions_on_skeleton(tree: &GenealogyTree, rng: &mut RngStream) -> GenealogyTree {
    let mut out = tree.clone();
    let dt = tree.grid_dt;
    for i in 0..out.records.len() {
        let start = match out.records[i].parent {
            Some(p) => out.records[p.index()].death_position,
            None => 0.0,
        };
        let r = &mut out.records[i];
        r.birth_position = start;
        let mut now = r.birth_time;
        let mut x = start;
        let cps = &mut out.checkpoints[r.checkpoint_offset..r.checkpoint_offset + r.checkpoint_len as usize];
        for (j, c) in cps.iter_mut().enumerate() {
            let s = (r.first_grid + j as u32) as f64 * dt;
            x += (s - now).sqrt() * rng.normal();
            now = s;
            *c = x;
        }
        if now < r.death_time {
            x += (r.death_time - now).sqrt() * rng.normal();
        }
        r.death_position = x;
    }
    out
}

/// Final positions of the alive leaves under fresh displacements, in arena
/// order, drawing one Gaussian per record.
///
/// Equal in law to reading the leaves of [`resample_positions_on_skeleton`];
/// `scratch` holds one branch position per record.
pub fn resample_leaf_positions(tree: &GenealogyTree, rng: &mut RngStream, scratch: &mut Vec<f64>, leaves: &mut Vec<f64>) {
    scratch.clear();
    leaves.clear();
    for r in &tree.records {
        let start = r.parent.map_or(0.0, |p| scratch[p.index()]);
        let x = start + (r.death_time - r.birth_time).sqrt() * rng.normal();
        scratch.push(x);
        if r.alive_at_horizon {
            leaves.push(x);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{simulate, SimulationConfig};

    #[test]
    fn skeleton_is_preserved() {
        let tree = simulate(&SimulationConfig::binary(4.3), &mut RngStream::new(8, 0)).unwrap();
        let fresh = resample_positions_on_skeleton(&tree, &mut RngStream::new(8, 1));
        fresh.audit().unwrap();
        assert_eq!(tree.len(), fresh.len());
        for (a, b) in tree.records().iter().zip(fresh.records()) {
            assert_eq!(a.birth_time, b.birth_time);
            assert_eq!(a.death_time, b.death_time);
            assert_eq!(a.parent, b.parent);
        }
        assert_ne!(tree.max_position(), fresh.max_position());
    }

    #[test]
    fn leaf_resampler_counts_leaves() {
        let tree = simulate(&SimulationConfig::binary(4.0), &mut RngStream::new(8, 2)).unwrap();
        let (mut scratch, mut leaves) = (Vec::new(), Vec::new());
        resample_leaf_positions(&tree, &mut RngStream::new(1, 1), &mut scratch, &mut leaves);
        assert_eq!(leaves.len(), tree.population());
    }
}
