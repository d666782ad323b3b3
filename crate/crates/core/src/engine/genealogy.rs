use super::tree::{GenealogyTree, ParticleId, ParticleRecord};
use crate::error::{invalid, Result};
use crate::path::ParticlePath;

fn alive_leaf(tree: &GenealogyTree, id: ParticleId) -> Result<&ParticleRecord> {
    let r = tree
        .get(id)
        .ok_or_else(|| invalid(format!("no particle with id {}", id.0)))?;
    if r.pruned {
        return Err(invalid(format!("particle {} was pruned", id.0)));
    }
    if !r.alive_at_horizon {
        return Err(invalid(format!("particle {} is not alive at the horizon", id.0)));
    }
    Ok(r)
}

/// Most recent common ancestor of two records.
pub fn mrca(tree: &GenealogyTree, i: ParticleId, j: ParticleId) -> ParticleId {
    let (mut a, mut b) = (tree.record(i), tree.record(j));
    while a.id != b.id {
        // a parent always has depth one less and a smaller index
        if a.depth >= b.depth {
            a = tree.record(a.parent.expect("root reached before meeting"));
        } else {
            b = tree.record(b.parent.expect("root reached before meeting"));
        }
    }
    a.id
}

/// `Q_t(i, j)`: the time at which the lines of leaves `i` and `j` separate.
pub fn overlap_q(tree: &GenealogyTree, i: ParticleId, j: ParticleId) -> Result<f64> {
    alive_leaf(tree, i)?;
    alive_leaf(tree, j)?;
    if i == j {
        return Ok(tree.horizon());
    }
    Ok(tree.record(mrca(tree, i, j)).death_time)
}

/// Records on the line from the root to `id`, root first.
pub fn lineage(tree: &GenealogyTree, id: ParticleId) -> Vec<ParticleId> {
    let mut line = Vec::with_capacity(tree.record(id).depth as usize + 1);
    let mut cur = Some(id);
    while let Some(c) = cur {
        line.push(c);
        cur = tree.record(c).parent;
    }
    line.reverse();
    line
}

/// Ancestral trajectory of an alive leaf on the grid `k * grid_dt` in
/// `[0, t]`, plus the horizon when it is off the grid.
pub fn ancestral_path(tree: &GenealogyTree, leaf: ParticleId) -> Result<ParticlePath> {
    let r = alive_leaf(tree, leaf)?;
    let n = tree.last_grid_index() as usize + 2;
    let mut times = Vec::with_capacity(n);
    let mut positions = Vec::with_capacity(n);
    times.push(0.0);
    positions.push(0.0);
    for id in lineage(tree, leaf) {
        let rec = tree.record(id);
        for (i, x) in tree.checkpoint_positions(id).iter().enumerate() {
            times.push(tree.grid_time(rec.first_grid + i as u32));
            positions.push(*x);
        }
    }
    if *times.last().unwrap() < tree.horizon() {
        times.push(tree.horizon());
        positions.push(r.death_position);
    }
    ParticlePath::new(times, positions)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::fixtures::two_level_fixture;
    use crate::engine::{simulate, SimulationConfig};
    use crate::kernels::RngStream;

    #[test]
    fn fixture_overlaps() {
        let tree = two_level_fixture();
        let leaves: Vec<_> = tree.leaves().map(|r| r.id).collect();
        assert_eq!(leaves.len(), 3);
        // leaves: left-left, left-right, right
        let (ll, lr, rt) = (leaves[0], leaves[1], leaves[2]);
        assert_eq!(overlap_q(&tree, ll, lr).unwrap(), 2.5);
        assert_eq!(overlap_q(&tree, ll, rt).unwrap(), 1.0);
        assert_eq!(overlap_q(&tree, lr, rt).unwrap(), 1.0);
        assert_eq!(overlap_q(&tree, rt, rt).unwrap(), 4.0);
        assert!(overlap_q(&tree, ParticleId(0), rt).is_err());
        assert!(overlap_q(&tree, ParticleId(99), rt).is_err());
    }

    #[test]
    fn fixture_path_covers_grid() {
        let tree = two_level_fixture();
        let leaf = tree.leaves().next().unwrap().id;
        let path = ancestral_path(&tree, leaf).unwrap();
        assert_eq!(path.times(), &[0.0, 1.0, 2.0, 3.0, 4.0]);
        assert_eq!(path.at(0.0), Some(0.0));
        assert_eq!(path.final_position(), tree.record(leaf).death_position);
    }

    #[test]
    fn simulated_paths_agree_before_split() {
        let cfg = SimulationConfig::binary(5.1);
        let tree = simulate(&cfg, &mut RngStream::new(3, 0)).unwrap();
        let leaves: Vec<_> = tree.leaves().map(|r| r.id).collect();
        assert!(leaves.len() > 5);
        for w in leaves.windows(2).take(50) {
            let q = overlap_q(&tree, w[0], w[1]).unwrap();
            let (p1, p2) = (ancestral_path(&tree, w[0]).unwrap(), ancestral_path(&tree, w[1]).unwrap());
            assert_eq!(p1.len(), p2.len());
            assert_eq!(p1.end(), 5.1);
            assert_eq!(p1.at(0.0), Some(0.0));
            for ((s, x), (_, y)) in p1.iter().zip(p2.iter()) {
                if s <= q {
                    assert_eq!(x, y);
                }
            }
        }
    }
}
