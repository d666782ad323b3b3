use serde::{Deserialize, Serialize};

use super::tree::{first_grid_after, last_grid_index, GenealogyTree, ParticleId, ParticleRecord, PruneConfig};
use crate::envelope::front_m;
use crate::error::{invalid, Error, Result};
use crate::kernels::{sample_offspring, OffspringLaw, RngStream};

pub const DEFAULT_GRID_DT: f64 = 0.25;
pub const DEFAULT_MAX_PARTICLES: usize = 50_000_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub horizon: f64,
    pub grid_dt: f64,
    pub law: OffspringLaw,
    pub prune: PruneConfig,
    pub max_particles: usize,
}

impl SimulationConfig {
    pub fn new(horizon: f64, law: OffspringLaw) -> Self {
        Self {
            horizon,
            grid_dt: DEFAULT_GRID_DT,
            law,
            prune: PruneConfig::disabled(),
            max_particles: DEFAULT_MAX_PARTICLES,
        }
    }

    pub fn binary(horizon: f64) -> Self {
        Self::new(horizon, OffspringLaw::binary())
    }

    pub fn with_grid(mut self, grid_dt: f64) -> Self {
        self.grid_dt = grid_dt;
        self
    }

    pub fn with_prune(mut self, prune: PruneConfig) -> Self {
        self.prune = prune;
        self
    }

    pub fn with_max_particles(mut self, cap: usize) -> Self {
        self.max_particles = cap;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return Err(invalid(format!("horizon must be positive, got {}", self.horizon)));
        }
        if !(self.grid_dt > 0.0 && self.grid_dt <= 1.0) {
            return Err(invalid(format!("grid_dt must lie in (0, 1], got {}", self.grid_dt)));
        }
        if self.horizon / self.grid_dt > u32::MAX as f64 / 2.0 {
            return Err(invalid("checkpoint grid too fine for this horizon"));
        }
        self.prune.validate()?;
        if self.prune.enabled && self.horizon <= 1.0 {
            return Err(invalid("pruning follows the front line and needs t > 1"));
        }
        if self.max_particles == 0 || self.max_particles > u32::MAX as usize {
            return Err(invalid(format!("particle cap must lie in [1, {}]", u32::MAX)));
        }
        Ok(())
    }
}

struct Birth {
    parent: Option<ParticleId>,
    time: f64,
    position: f64,
    depth: u32,
}

/// Samples one realization up to the horizon.
///
/// Each particle lives an Exp(1) time and moves by exact Gaussian increments
/// between its checkpoints; at death it is replaced by a random number of
/// children at its final position. Particles are processed depth-first, so
/// the arena layout and the draw order are fixed by the stream alone.
pub fn simulate(cfg: &SimulationConfig, rng: &mut RngStream) -> Result<GenealogyTree> {
    let mut tree = GenealogyTree {
        records: Vec::new(),
        checkpoints: Vec::new(),
        horizon: cfg.horizon,
        grid_dt: cfg.grid_dt,
        law: cfg.law.clone(),
        seed: rng.seed(),
        stream_id: rng.stream_id(),
        prune: cfg.prune,
    };
    simulate_into(cfg, rng, &mut tree)?;
    Ok(tree)
}

/// Like [`simulate`], reusing the allocations of `tree`.
pub fn simulate_into(cfg: &SimulationConfig, rng: &mut RngStream, tree: &mut GenealogyTree) -> Result<()> {
    cfg.validate()?;
    tree.records.clear();
    tree.checkpoints.clear();
    tree.horizon = cfg.horizon;
    tree.grid_dt = cfg.grid_dt;
    if tree.law != cfg.law {
        tree.law = cfg.law.clone();
    }
    tree.seed = rng.seed();
    tree.stream_id = rng.stream_id();
    tree.prune = cfg.prune;

    let t = cfg.horizon;
    let dt = cfg.grid_dt;
    let last_grid = last_grid_index(t, dt);
    let sqrt_dt = dt.sqrt();
    let (prune_slope, prune_margin) = if cfg.prune.enabled {
        (front_m(t)? / t, cfg.prune.margin)
    } else {
        (0.0, f64::INFINITY)
    };
    let below_barrier = |s: f64, x: f64| x < prune_slope * s - prune_margin;

    let mut stack = vec![Birth {
        parent: None,
        time: 0.0,
        position: 0.0,
        depth: 0,
    }];
    while let Some(birth) = stack.pop() {
        if tree.records.len() >= cfg.max_particles {
            return Err(Error::Capacity {
                cap: cfg.max_particles,
            });
        }
        let id = ParticleId(tree.records.len() as u32);
        let mut death = birth.time + rng.exp1();
        if death <= birth.time {
            death = birth.time.next_up();
        }
        let mut alive = false;
        if death >= t {
            death = t;
            alive = true;
        }

        let first_grid = first_grid_after(birth.time, dt);
        let offset = tree.checkpoints.len();
        let mut k = first_grid;
        let mut now = birth.time;
        let mut x = birth.position;
        let mut pruned = false;
        while k <= last_grid {
            let s = k as f64 * dt;
            if s > death {
                break;
            }
            let step = s - now;
            let sd = if step == dt { sqrt_dt } else { step.sqrt() };
            x += sd * rng.normal();
            now = s;
            tree.checkpoints.push(x);
            k += 1;
            if below_barrier(s, x) {
                pruned = true;
                death = s;
                alive = false;
                break;
            }
        }
        if !pruned && now < death {
            x += (death - now).sqrt() * rng.normal();
            if below_barrier(death, x) {
                pruned = true;
                alive = false;
            }
        }
        tree.records.push(ParticleRecord {
            id,
            parent: birth.parent,
            birth_time: birth.time,
            birth_position: birth.position,
            death_time: death,
            death_position: x,
            depth: birth.depth,
            alive_at_horizon: alive,
            pruned,
            first_grid,
            checkpoint_offset: offset,
            checkpoint_len: k - first_grid,
        });
        if !alive && !pruned {
            let children = sample_offspring(rng, &cfg.law);
            for _ in 0..children {
                stack.push(Birth {
                    parent: Some(id),
                    time: death,
                    position: x,
                    depth: birth.depth + 1,
                });
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tiny_horizon_single_particle() {
        let cfg = SimulationConfig::binary(1e-6);
        for stream in 0..200 {
            let mut rng = RngStream::new(11, stream);
            let tree = simulate(&cfg, &mut rng).unwrap();
            tree.audit().unwrap();
            assert_eq!(tree.population(), 1);
            assert!(tree.max_position().unwrap().abs() < 0.01);
        }
    }

    #[test]
    fn simulated_trees_pass_audit() {
        for (stream, law) in [(0, "binary"), (1, "1:0.5,3:0.5"), (2, "1:0.2,2:0.6,3:0.2")] {
            let cfg = SimulationConfig::new(5.3, OffspringLaw::parse(law).unwrap());
            let mut rng = RngStream::new(5, stream);
            let tree = simulate(&cfg, &mut rng).unwrap();
            tree.audit().unwrap();
            assert!(tree.population() >= 1);
        }
    }

    #[test]
    fn deterministic_per_stream() {
        let cfg = SimulationConfig::binary(6.0);
        let a = simulate(&cfg, &mut RngStream::new(1, 3)).unwrap();
        let b = simulate(&cfg, &mut RngStream::new(1, 3)).unwrap();
        let c = simulate(&cfg, &mut RngStream::new(1, 4)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn reuse_matches_fresh() {
        let cfg = SimulationConfig::binary(4.0);
        let fresh = simulate(&cfg, &mut RngStream::new(9, 1)).unwrap();
        let mut reused = simulate(&SimulationConfig::binary(6.0), &mut RngStream::new(9, 0)).unwrap();
        simulate_into(&cfg, &mut RngStream::new(9, 1), &mut reused).unwrap();
        assert_eq!(fresh, reused);
    }

    #[test]
    fn capacity_error_names_cap() {
        let cfg = SimulationConfig::binary(12.0).with_max_particles(1000);
        let err = simulate(&cfg, &mut RngStream::new(1, 0)).unwrap_err();
        assert_eq!(err, Error::Capacity { cap: 1000 });
        assert!(err.to_string().contains("1000"));
    }

    #[test]
    fn config_validation() {
        assert!(SimulationConfig::binary(0.0).validate().is_err());
        assert!(SimulationConfig::binary(5.0).with_grid(1.5).validate().is_err());
        assert!(SimulationConfig::binary(5.0).with_grid(0.0).validate().is_err());
        let pruned = SimulationConfig::binary(0.5).with_prune(PruneConfig::with_margin(10.0).unwrap());
        assert!(pruned.validate().is_err());
    }

    #[test]
    fn pruned_tree_audits_and_marks_tombstones() {
        let cfg = SimulationConfig::binary(12.0).with_prune(PruneConfig::with_margin(10.0).unwrap());
        let tree = simulate(&cfg, &mut RngStream::new(21, 0)).unwrap();
        tree.audit().unwrap();
        assert!(tree.has_pruned());
        let slope = front_m(12.0).unwrap() / 12.0;
        for r in tree.records().iter().filter(|r| r.pruned) {
            assert!(r.death_position < slope * r.death_time - 10.0);
            assert!(!r.alive_at_horizon);
        }
        // every surviving checkpoint stays above the barrier
        for r in tree.records() {
            for (s, x) in tree.checkpoints(r.id) {
                if !(r.pruned && s == r.death_time) {
                    assert!(x >= slope * s - 10.0);
                }
            }
        }
    }
}
