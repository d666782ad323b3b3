//! Replica campaigns: many independent trees, summarized in parallel.
//!
//! Replica `i` always draws from `RngStream::new(seed, i)`, and summaries are
//! collected in replica order, so results do not depend on the number of
//! worker threads.

use rayon::prelude::*;

use crate::engine::{simulate_into, GenealogyTree, SimulationConfig};
use crate::error::{invalid, Result};
use crate::kernels::RngStream;
use crate::stats::{summarize, ReplicaSummary, SummaryConfig, SummarySet};

#[derive(Clone, Debug, PartialEq)]
pub struct Campaign {
    pub simulation: SimulationConfig,
    pub summary: SummaryConfig,
    pub seed: u64,
    pub replicas: u64,
    /// First replica index; lets a campaign be split into chunks.
    pub first_replica: u64,
}

impl Campaign {
    pub fn new(simulation: SimulationConfig, summary: SummaryConfig, seed: u64, replicas: u64) -> Self {
        Self {
            simulation,
            summary,
            seed,
            replicas,
            first_replica: 0,
        }
    }
}

fn empty_tree(cfg: &SimulationConfig) -> Result<GenealogyTree> {
    // a throwaway tree whose buffers the worker reuses
    crate::engine::simulate(&SimulationConfig::new(1e-9, cfg.law.clone()), &mut RngStream::new(0, 0))
}

pub fn run_replica(campaign: &Campaign, replica: u64, tree: &mut GenealogyTree) -> Result<ReplicaSummary> {
    let base = RngStream::new(campaign.seed, replica);
    let mut rng = base.clone();
    simulate_into(&campaign.simulation, &mut rng, tree)?;
    summarize(tree, &campaign.summary, replica, &base)
}

/// Runs every replica on a pool of `jobs` threads.
pub fn run_campaign(campaign: &Campaign, jobs: usize) -> Result<SummarySet> {
    if jobs == 0 {
        return Err(invalid("jobs must be at least 1"));
    }
    campaign.simulation.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| invalid(format!("cannot start worker pool: {e}")))?;
    let range = campaign.first_replica..campaign.first_replica + campaign.replicas;
    let summaries: Vec<ReplicaSummary> = pool.install(|| {
        range
            .into_par_iter()
            .map_init(
                || empty_tree(&campaign.simulation),
                |tree, i| match tree {
                    Ok(tree) => run_replica(campaign, i, tree),
                    Err(e) => Err(e.clone()),
                },
            )
            .collect::<Result<_>>()
    })?;
    SummarySet::new(summaries)
}

/// Runs `f` on every replica index in parallel and returns the results in
/// index order.
pub fn par_replicas<T, F>(replicas: u64, jobs: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    if jobs == 0 {
        return Err(invalid("jobs must be at least 1"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| invalid(format!("cannot start worker pool: {e}")))?;
    pool.install(|| (0..replicas).into_par_iter().map(f).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jobs_do_not_change_results() {
        let c = Campaign::new(SimulationConfig::binary(5.0), SummaryConfig::default(), 12, 40);
        let a = run_campaign(&c, 1).unwrap();
        let b = run_campaign(&c, 3).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 40);
    }

    #[test]
    fn chunks_merge_to_whole() {
        let mut c = Campaign::new(SimulationConfig::binary(4.0), SummaryConfig::default(), 3, 30);
        let whole = run_campaign(&c, 2).unwrap();
        c.replicas = 10;
        let first = run_campaign(&c, 1).unwrap();
        c.first_replica = 10;
        c.replicas = 20;
        let second = run_campaign(&c, 2).unwrap();
        assert_eq!(second.merge(first).unwrap(), whole);
    }
}
