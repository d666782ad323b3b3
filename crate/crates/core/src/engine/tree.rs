use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::kernels::OffspringLaw;

/// Index of a particle record in the tree arena.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ParticleId(pub u32);

impl ParticleId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Envelope pruning: a particle is cut as soon as a checkpoint falls below
/// `(s/t) m(t) - margin`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PruneConfig {
    pub enabled: bool,
    pub margin: f64,
}

/// Smallest margin accepted when pruning is on.
pub const MIN_PRUNE_MARGIN: f64 = 10.0;

impl PruneConfig {
    pub fn disabled() -> Self {
        Self {
            enabled: false,
            margin: f64::INFINITY,
        }
    }

    pub fn with_margin(margin: f64) -> Result<Self> {
        let cfg = Self {
            enabled: true,
            margin,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.enabled && !(self.margin >= MIN_PRUNE_MARGIN && self.margin.is_finite()) {
            return Err(invalid(format!(
                "prune margin must be at least {MIN_PRUNE_MARGIN}, got {}",
                self.margin
            )));
        }
        Ok(())
    }
}

impl Default for PruneConfig {
    fn default() -> Self {
        Self::disabled()
    }
}

/// One particle between its birth and its branching (or the horizon).
///
/// Checkpoints cover the grid times `k * grid_dt` in `(birth_time,
/// death_time]`; the position at `death_time` is always kept, grid or not.
#[derive(Clone, Debug, PartialEq)]
pub struct ParticleRecord {
    pub id: ParticleId,
    pub parent: Option<ParticleId>,
    pub birth_time: f64,
    pub birth_position: f64,
    pub death_time: f64,
    pub death_position: f64,
    pub depth: u32,
    pub alive_at_horizon: bool,
    pub pruned: bool,
    pub(crate) first_grid: u32,
    pub(crate) checkpoint_offset: usize,
    pub(crate) checkpoint_len: u32,
}

impl ParticleRecord {
    pub fn is_leaf_at_horizon(&self) -> bool {
        self.alive_at_horizon
    }

    /// Grid index of the first checkpoint.
    pub fn first_grid_index(&self) -> u32 {
        self.first_grid
    }

    pub fn checkpoint_count(&self) -> usize {
        self.checkpoint_len as usize
    }
}

/// Arena holding one realization of the branching process.
///
/// Parents always precede their children in arena order, so a forward scan
/// visits every line from the root downwards.
#[derive(Clone, Debug, PartialEq)]
pub struct GenealogyTree {
    pub(crate) records: Vec<ParticleRecord>,
    pub(crate) checkpoints: Vec<f64>,
    pub(crate) horizon: f64,
    pub(crate) grid_dt: f64,
    pub(crate) law: OffspringLaw,
    pub(crate) seed: u64,
    pub(crate) stream_id: u64,
    pub(crate) prune: PruneConfig,
}

impl GenealogyTree {
    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn grid_dt(&self) -> f64 {
        self.grid_dt
    }

    pub fn law(&self) -> &OffspringLaw {
        &self.law
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    pub fn prune_config(&self) -> PruneConfig {
        self.prune
    }

    pub fn records(&self) -> &[ParticleRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn record(&self, id: ParticleId) -> &ParticleRecord {
        &self.records[id.index()]
    }

    pub fn get(&self, id: ParticleId) -> Option<&ParticleRecord> {
        self.records.get(id.index())
    }

    #[inline]
    pub fn grid_time(&self, k: u32) -> f64 {
        k as f64 * self.grid_dt
    }

    /// Index of the last grid time not after the horizon.
    pub fn last_grid_index(&self) -> u32 {
        last_grid_index(self.horizon, self.grid_dt)
    }

    /// Checkpoint positions of a record, one per grid time in
    /// `(birth_time, death_time]`.
    pub fn checkpoint_positions(&self, id: ParticleId) -> &[f64] {
        let r = self.record(id);
        &self.checkpoints[r.checkpoint_offset..r.checkpoint_offset + r.checkpoint_len as usize]
    }

    /// `(time, position)` checkpoints of a record, ending with the position at
    /// `death_time` when that is not a grid time.
    pub fn checkpoints(&self, id: ParticleId) -> impl Iterator<Item = (f64, f64)> + '_ {
        let r = self.record(id);
        let grid = self
            .checkpoint_positions(id)
            .iter()
            .enumerate()
            .map(move |(i, x)| (self.grid_time(r.first_grid + i as u32), *x));
        let last_grid = if r.checkpoint_len > 0 {
            Some(self.grid_time(r.first_grid + r.checkpoint_len - 1))
        } else {
            None
        };
        let tail = (last_grid != Some(r.death_time)).then_some((r.death_time, r.death_position));
        grid.chain(tail)
    }

    /// Leaves alive at the horizon, in arena order.
    pub fn leaves(&self) -> impl Iterator<Item = &ParticleRecord> + '_ {
        self.records.iter().filter(|r| r.alive_at_horizon)
    }

    /// `n(t)`, the number of particles alive at the horizon.
    pub fn population(&self) -> usize {
        self.leaves().count()
    }

    pub fn pruned_count(&self) -> usize {
        self.records.iter().filter(|r| r.pruned).count()
    }

    pub fn has_pruned(&self) -> bool {
        self.records.iter().any(|r| r.pruned)
    }

    pub fn max_position(&self) -> Option<f64> {
        self.leaves().map(|r| r.death_position).reduce(f64::max)
    }

    /// Checks every structural invariant of the arena.
    pub fn audit(&self) -> Result<()> {
        let t = self.horizon;
        let root = self
            .records
            .first()
            .ok_or_else(|| invalid("tree has no records"))?;
        if root.parent.is_some() || root.birth_time != 0.0 || root.birth_position != 0.0 {
            return Err(invalid("root must start at time 0 from the origin"));
        }
        let mut alive = 0usize;
        for (i, r) in self.records.iter().enumerate() {
            if r.id.index() != i {
                return Err(invalid(format!("record {i} carries id {}", r.id.0)));
            }
            if !(r.birth_time < r.death_time && r.death_time <= t) {
                return Err(invalid(format!(
                    "record {i}: need birth < death <= t, got {} / {} / {t}",
                    r.birth_time, r.death_time
                )));
            }
            if r.alive_at_horizon && (r.death_time != t || r.pruned) {
                return Err(invalid(format!("record {i}: alive leaf must end at the horizon")));
            }
            alive += r.alive_at_horizon as usize;
            match r.parent {
                None if i != 0 => return Err(invalid(format!("record {i} is a second root"))),
                None => {}
                Some(p) => {
                    if p.index() >= i {
                        return Err(invalid(format!("record {i}: parent {} does not precede it", p.0)));
                    }
                    let parent = &self.records[p.index()];
                    if parent.alive_at_horizon || parent.pruned {
                        return Err(invalid(format!("record {i}: parent {} never branched", p.0)));
                    }
                    if parent.death_time != r.birth_time || parent.death_position != r.birth_position {
                        return Err(invalid(format!(
                            "record {i}: birth does not match parent {} at its branch time",
                            p.0
                        )));
                    }
                    if parent.depth + 1 != r.depth {
                        return Err(invalid(format!("record {i}: depth inconsistent")));
                    }
                }
            }
            if r.checkpoint_offset + r.checkpoint_len as usize > self.checkpoints.len() {
                return Err(invalid(format!("record {i}: checkpoints out of range")));
            }
            for (j, _) in self.checkpoint_positions(r.id).iter().enumerate() {
                let s = self.grid_time(r.first_grid + j as u32);
                if !(s > r.birth_time && s <= r.death_time) {
                    return Err(invalid(format!("record {i}: checkpoint at {s} outside its lifetime")));
                }
            }
            let expected_first = first_grid_after(r.birth_time, self.grid_dt);
            let expected_len = grid_count_through(r.death_time, self.grid_dt, expected_first);
            if r.first_grid != expected_first || r.checkpoint_len != expected_len {
                return Err(invalid(format!("record {i}: checkpoint grid incomplete")));
            }
        }
        if !self.prune.enabled && alive == 0 {
            return Err(invalid("unpruned tree has no particle alive at the horizon"));
        }
        Ok(())
    }
}

/// Hand-specified particle for building fixture trees.
///
/// `checkpoints` lists the positions at the grid times in `(birth_time,
/// death_time]`; births are taken from the parent's death.
#[derive(Clone, Debug, PartialEq)]
pub struct ManualParticle {
    pub parent: Option<usize>,
    pub birth_time: f64,
    pub death_time: f64,
    pub checkpoints: Vec<f64>,
    pub death_position: f64,
    pub alive_at_horizon: bool,
}

impl GenealogyTree {
    /// Builds and audits a tree from hand-specified particles given in arena
    /// order.
    pub fn from_manual(horizon: f64, grid_dt: f64, law: OffspringLaw, particles: &[ManualParticle]) -> Result<Self> {
        let mut tree = GenealogyTree {
            records: Vec::with_capacity(particles.len()),
            checkpoints: Vec::new(),
            horizon,
            grid_dt,
            law,
            seed: 0,
            stream_id: 0,
            prune: PruneConfig::disabled(),
        };
        for (i, p) in particles.iter().enumerate() {
            let (birth_position, depth) = match p.parent {
                None => (0.0, 0),
                Some(q) if q < i => (tree.records[q].death_position, tree.records[q].depth + 1),
                Some(q) => return Err(invalid(format!("particle {i}: parent {q} must come first"))),
            };
            let first_grid = first_grid_after(p.birth_time, grid_dt);
            tree.records.push(ParticleRecord {
                id: ParticleId(i as u32),
                parent: p.parent.map(|q| ParticleId(q as u32)),
                birth_time: p.birth_time,
                birth_position,
                death_time: p.death_time,
                death_position: p.death_position,
                depth,
                alive_at_horizon: p.alive_at_horizon,
                pruned: false,
                first_grid,
                checkpoint_offset: tree.checkpoints.len(),
                checkpoint_len: p.checkpoints.len() as u32,
            });
            tree.checkpoints.extend_from_slice(&p.checkpoints);
        }
        tree.audit()?;
        Ok(tree)
    }

    /// Single particle that never branches, ending at `position`.
    pub fn single_leaf(horizon: f64, position: f64) -> Result<Self> {
        let grid_dt = horizon.min(1.0);
        let n = grid_count_through(horizon, grid_dt, 1) as usize;
        let checkpoints = (1..=n).map(|k| position * (k as f64 * grid_dt) / horizon).collect();
        Self::from_manual(
            horizon,
            grid_dt,
            OffspringLaw::binary(),
            &[ManualParticle {
                parent: None,
                birth_time: 0.0,
                death_time: horizon,
                checkpoints,
                death_position: position,
                alive_at_horizon: true,
            }],
        )
    }
}

/// Smallest `k` with `k * dt > time`.
pub(crate) fn first_grid_after(time: f64, dt: f64) -> u32 {
    let mut k = (time / dt).floor().max(0.0) as u32 + 1;
    while k > 0 && (k - 1) as f64 * dt > time {
        k -= 1;
    }
    while (k as f64) * dt <= time {
        k += 1;
    }
    k
}

/// Number of grid times `k * dt` with `k >= first` and `k * dt <= time`.
pub(crate) fn grid_count_through(time: f64, dt: f64, first: u32) -> u32 {
    let mut k = first;
    while (k as f64) * dt <= time {
        k += 1;
    }
    k - first
}

pub(crate) fn last_grid_index(horizon: f64, dt: f64) -> u32 {
    let mut k = (horizon / dt).floor() as u32;
    while (k as f64) * dt > horizon {
        k -= 1;
    }
    while ((k + 1) as f64) * dt <= horizon {
        k += 1;
    }
    k
}
