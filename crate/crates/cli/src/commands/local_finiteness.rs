use bbm_core::stats::{local_finiteness_curve, tightness, SummaryConfig, SummarySet};

use super::{campaign, fmt};
use crate::checks::{self, Check};
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::output::RunDir;

pub fn validate(cfg: &RunConfig) -> CliResult<()> {
    if cfg.horizons.len() < 2 {
        return Err(CliError::Config("local finiteness compares at least two horizons".into()));
    }
    Ok(())
}

pub fn summary_config(cfg: &RunConfig) -> SummaryConfig {
    SummaryConfig {
        window: cfg.window,
        count_levels: vec![cfg.count_level],
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
    analyze(cfg, &sets.iter().collect::<Vec<_>>(), out)
}

/// `N_t[y, inf)` for `y = count_level`; the sets must have been summarized
/// with that level first among their count levels.
pub fn counts(set: &SummarySet) -> CliResult<Vec<u64>> {
    set.replicas()
        .iter()
        .map(|s| {
            s.counts_above
                .first()
                .copied()
                .ok_or_else(|| CliError::Runtime("summaries carry no count level".into()))
        })
        .collect()
}

pub fn analyze(cfg: &RunConfig, sets: &[&SummarySet], out: &mut RunDir) -> CliResult<Vec<Check>> {
    let horizons = sets.iter().map(|s| s.horizon()).collect::<Result<Vec<_>, _>>()?;
    let all = sets.iter().map(|s| counts(s)).collect::<CliResult<Vec<_>>>()?;
    let mut rows = Vec::new();
    for (t, c) in horizons.iter().zip(&all) {
        for (n, p) in local_finiteness_curve(c) {
            rows.push(vec![fmt(*t), fmt(cfg.count_level), n.to_string(), fmt(p)]);
        }
    }
    out.csv("local_finiteness.csv", &["t", "level", "n", "probability_at_least_n"], rows)?;
    let report = tightness(&horizons, &all, cfg.quantile)?;
    out.csv(
        "tightness.csv",
        &["t", "quantile", "value"],
        horizons
            .iter()
            .zip(&report.values)
            .map(|(t, v)| vec![fmt(*t), fmt(cfg.quantile), fmt(*v)]),
    )?;
    Ok(vec![checks::local_finiteness(&report)])
}
