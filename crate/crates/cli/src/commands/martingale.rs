use bbm_core::stats::inference::ks_two_sample;
use bbm_core::stats::{SummaryConfig, SummarySet};

use super::{campaign, fmt};
use crate::checks::{self, Check};
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::output::RunDir;

pub fn validate(cfg: &RunConfig) -> CliResult<()> {
    if cfg.prune_margin.is_some() {
        return Err(CliError::Config("the derivative martingale needs unpruned trees".into()));
    }
    if cfg.horizons.is_empty() {
        return Err(CliError::Config("martingale needs at least one horizon".into()));
    }
    Ok(())
}

pub fn summary_config(cfg: &RunConfig) -> SummaryConfig {
    SummaryConfig {
        window: cfg.window,
        pair_overlaps: false,
        ..SummaryConfig::default()
    }
}

pub fn execute(cfg: &RunConfig, jobs: usize, out: &mut RunDir) -> CliResult<Vec<Check>> {
    let sets = cfg
        .horizons
        .iter()
        .map(|&t| campaign(cfg, t, summary_config(cfg), jobs))
        .collect::<CliResult<Vec<_>>>()?;
    analyze(&sets.iter().collect::<Vec<_>>(), out)
}

pub fn values(set: &SummarySet) -> CliResult<Vec<f64>> {
    set.replicas()
        .iter()
        .map(|s| {
            s.derivative_martingale
                .ok_or_else(|| CliError::Runtime("derivative martingale missing (pruned tree)".into()))
        })
        .collect()
}

/// Per-replica `Z(t)` at each horizon; the first and last horizon are
/// compared with a two-sample KS test.
pub fn analyze(sets: &[&SummarySet], out: &mut RunDir) -> CliResult<Vec<Check>> {
    let mut rows = Vec::new();
    let mut all = Vec::new();
    for set in sets {
        let t = set.horizon()?;
        let z = values(set)?;
        for (s, v) in set.replicas().iter().zip(&z) {
            rows.push(vec![fmt(t), s.replica.to_string(), fmt(*v)]);
        }
        all.push((t, z));
    }
    out.csv("martingale.csv", &["t", "replica", "z"], rows)?;
    let mut checks = Vec::new();
    if let (Some((t1, a)), Some((t2, b))) = (all.first(), all.last()) {
        if all.len() >= 2 {
            let test = ks_two_sample(a, b)?;
            out.csv(
                "martingale_ks.csv",
                &["t1", "t2", "statistic", "p_value"],
                [vec![fmt(*t1), fmt(*t2), fmt(test.statistic), fmt(test.p_value)]],
            )?;
            checks.push(checks::martingale_ks(*t1, *t2, test.p_value, test.statistic));
        }
    }
    Ok(checks)
}
