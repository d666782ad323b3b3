use bbm_core::envelope::{front_m, rem_front_r};
use bbm_core::stats::{exceedance_counts, exceedance_formula, SummaryConfig, SummarySet};

use super::{campaign, fmt};
use crate::checks::{self, Check};
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::output::RunDir;

pub fn summary_config(cfg: &RunConfig) -> SummaryConfig {
    SummaryConfig {
        window: cfg.window,
        exceedance_levels: vec![cfg.exceedance_level()],
        count_levels: vec![cfg.count_level],
        pair_overlaps: false,
        ..SummaryConfig::default()
    }
}

pub fn execute(cfg: &RunConfig, jobs: usize, out: &mut RunDir) -> CliResult<Vec<Check>> {
    let set = campaign(cfg, cfg.t, summary_config(cfg), jobs)?;
    analyze(cfg, &set, out)
}

/// Mean number of particles above the exceedance level against the
/// leading-order formula, and the formula at `m(t)` against `r(t)`.
pub fn analyze(cfg: &RunConfig, set: &SummarySet, out: &mut RunDir) -> CliResult<Vec<Check>> {
    let t = set.horizon()?;
    let level = cfg.exceedance_level();
    let counts = set
        .replicas()
        .iter()
        .map(|s| {
            s.exceedances
                .first()
                .copied()
                .ok_or_else(|| CliError::Runtime("summaries carry no exceedance level".into()))
        })
        .collect::<CliResult<Vec<_>>>()?;
    let report = exceedance_counts(t, level, &counts);
    out.csv(
        "exceedances.csv",
        &["t", "level", "replicas", "mean", "se", "formula", "first_moment"],
        [vec![
            fmt(t),
            fmt(level),
            counts.len().to_string(),
            fmt(report.empirical.mean),
            fmt(report.empirical.se),
            fmt(report.formula),
            fmt(report.first_moment),
        ]],
    )?;
    let (m, r) = (front_m(t)?, rem_front_r(t)?);
    let (at_m, at_r) = (exceedance_formula(t, m), exceedance_formula(t, r));
    out.csv(
        "exceedance_contrast.csv",
        &["t", "m", "r", "formula_at_m", "formula_at_r", "ratio"],
        [vec![fmt(t), fmt(m), fmt(r), fmt(at_m), fmt(at_r), fmt(at_m / at_r)]],
    )?;
    Ok(vec![checks::exceedance_formula(&report), checks::exceedance_contrast(at_m, at_r)])
}
