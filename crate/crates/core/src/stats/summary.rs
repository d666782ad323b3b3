//! Per-replica summaries and their order-independent merge.

use serde::{Deserialize, Serialize};

use super::envelopes::{extremal_reaches, upper_violation_reach, EnvelopeTables, ParticleReach};
use super::genealogy::{extremal_pair_overlaps, OverlapCount};
use super::gibbs::gibbs_from_leaves;
use super::martingale::derivative_martingale_from_positions;
use crate::engine::{check_window_against_prune, snapshot_from_leaves, GenealogyTree, Window};
use crate::envelope::{front_m, EnvelopeSpec};
use crate::error::{invalid, Result};
use crate::kernels::RngStream;

/// Gibbs overlap sampling, done on the first `replicas` replicas only.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GibbsConfig {
    pub beta: f64,
    pub pairs: usize,
    pub replicas: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryConfig {
    pub window: Window,
    pub envelope: Option<EnvelopeSpec>,
    /// Levels `y` (relative to `m(t)`) for the counts `N_t[y, inf)`.
    pub count_levels: Vec<f64>,
    /// Absolute levels `x` for the exceedance counts `#{i: x_i(t) > x}`.
    pub exceedance_levels: Vec<f64>,
    /// Number of top order statistics kept.
    pub top: usize,
    pub gibbs: Option<GibbsConfig>,
    pub pair_overlaps: bool,
}

impl Default for SummaryConfig {
    fn default() -> Self {
        Self {
            window: Window::default(),
            envelope: None,
            count_levels: Vec::new(),
            exceedance_levels: Vec::new(),
            top: 21,
            gibbs: None,
            pair_overlaps: true,
        }
    }
}

/// Envelope reaches of one replica.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeSummary {
    pub upper: Option<f64>,
    /// One entry per extremal particle, in snapshot order.
    pub extremal: Vec<ParticleReach>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplicaSummary {
    pub replica: u64,
    pub seed: u64,
    pub horizon: f64,
    pub population: u64,
    pub pruned: u64,
    pub max_position: Option<f64>,
    /// Recentred positions in `m(t) + D`, descending.
    pub extremal: Vec<f64>,
    /// `Q_t(i, j)` over unordered pairs of distinct extremal particles,
    /// grouped by value.
    pub pair_overlaps: Vec<OverlapCount>,
    pub envelope: Option<EnvelopeSummary>,
    pub derivative_martingale: Option<f64>,
    pub counts_above: Vec<u64>,
    pub exceedances: Vec<u64>,
    /// Largest final positions, descending.
    pub top: Vec<f64>,
    /// Sampled `Q/t` under the replicated Gibbs measure.
    pub gibbs: Vec<f64>,
}

impl ReplicaSummary {
    /// Largest `min(Q, t - Q)` over extremal pairs.
    pub fn pair_reach(&self) -> Option<f64> {
        self.pair_overlaps
            .iter()
            .map(|o| o.q.min(self.horizon - o.q))
            .reduce(f64::max)
    }
}

/// Label of the sub-stream used for Gibbs sampling.
pub const GIBBS_STREAM: u64 = 0x6962_6273;

/// Reduces one tree to everything the estimators need.
///
/// Gibbs sampling draws from a sub-stream derived from `rng`'s seed and
/// stream id, so it never perturbs the tree draws.
pub fn summarize(tree: &GenealogyTree, cfg: &SummaryConfig, replica: u64, rng: &RngStream) -> Result<ReplicaSummary> {
    let t = tree.horizon();
    let m = front_m(t)?;
    check_window_against_prune(tree, &cfg.window)?;

    // one pass over the arena; everything below works on the leaves
    let mut xs = Vec::new();
    let mut ids = Vec::new();
    let mut pruned = 0u64;
    for r in tree.records() {
        if r.alive_at_horizon {
            xs.push(r.death_position);
            ids.push(r.id);
        }
        pruned += r.pruned as u64;
    }
    let snapshot = snapshot_from_leaves(tree, cfg.window, &xs, &ids)?;
    let counts_above = cfg
        .count_levels
        .iter()
        .map(|y| xs.iter().filter(|&&x| x - m >= *y).count() as u64)
        .collect();
    let exceedances = cfg
        .exceedance_levels
        .iter()
        .map(|l| xs.iter().filter(|&&x| x > *l).count() as u64)
        .collect();
    let derivative_martingale = (pruned == 0).then(|| derivative_martingale_from_positions(t, xs.iter().copied()));

    let envelope = match &cfg.envelope {
        Some(spec) => {
            let tables = EnvelopeTables::for_tree(spec, &cfg.window, tree)?;
            Some(EnvelopeSummary {
                upper: upper_violation_reach(tree, &tables),
                extremal: extremal_reaches(tree, &snapshot, &tables),
            })
        }
        None => None,
    };
    let gibbs = match &cfg.gibbs {
        Some(g) if replica < g.replicas && !xs.is_empty() => {
            let mut sub = rng.derive(GIBBS_STREAM);
            gibbs_from_leaves(tree, &xs, &ids, g.beta, g.pairs, &mut sub)?.overlaps
        }
        _ => Vec::new(),
    };
    let pair_overlaps = if cfg.pair_overlaps {
        extremal_pair_overlaps(tree, &snapshot)?
    } else {
        Vec::new()
    };

    let population = xs.len() as u64;
    let max_position = xs.iter().copied().reduce(f64::max);
    let top = cfg.top.min(xs.len());
    if top > 0 {
        xs.select_nth_unstable_by(top - 1, |a, b| b.total_cmp(a));
        xs.truncate(top);
        xs.sort_by(|a, b| b.total_cmp(a));
    } else {
        xs.clear();
    }
    // the buffer held every leaf; keep only what the summary uses
    xs.shrink_to_fit();

    Ok(ReplicaSummary {
        replica,
        seed: tree.seed(),
        horizon: t,
        population,
        pruned,
        max_position,
        extremal: snapshot.positions,
        pair_overlaps,
        envelope,
        derivative_martingale,
        counts_above,
        exceedances,
        top: xs,
        gibbs,
    })
}

/// Replica summaries of one horizon, kept sorted by replica index so that
/// every aggregate is independent of the order of merging.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SummarySet {
    replicas: Vec<ReplicaSummary>,
}

impl SummarySet {
    pub fn new(mut replicas: Vec<ReplicaSummary>) -> Result<Self> {
        replicas.sort_by_key(|s| s.replica);
        if replicas.windows(2).any(|w| w[0].replica == w[1].replica) {
            return Err(invalid("duplicate replica index in summary set"));
        }
        if replicas.windows(2).any(|w| w[0].horizon != w[1].horizon) {
            return Err(invalid("summaries from different horizons cannot be merged"));
        }
        Ok(Self { replicas })
    }

    pub fn merge(self, other: SummarySet) -> Result<Self> {
        let mut all = self.replicas;
        all.extend(other.replicas);
        Self::new(all)
    }

    pub fn replicas(&self) -> &[ReplicaSummary] {
        &self.replicas
    }

    pub fn len(&self) -> usize {
        self.replicas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.replicas.is_empty()
    }

    pub fn horizon(&self) -> Result<f64> {
        self.replicas
            .first()
            .map(|s| s.horizon)
            .ok_or_else(|| invalid("empty summary set"))
    }

    pub fn populations(&self) -> Vec<f64> {
        self.replicas.iter().map(|s| s.population as f64).collect()
    }

    /// `max_k x_k(t) - m(t)` for replicas with a survivor.
    pub fn recentred_maxima(&self) -> Result<Vec<f64>> {
        let m = front_m(self.horizon()?)?;
        Ok(self.replicas.iter().filter_map(|s| s.max_position).map(|x| x - m).collect())
    }

    pub fn maxima(&self) -> Vec<f64> {
        self.replicas.iter().filter_map(|s| s.max_position).collect()
    }
}
