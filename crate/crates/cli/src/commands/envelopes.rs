use bbm_core::stats::{envelope_violation_rate, EnvelopeMode, SummaryConfig, SummarySet, ViolationReport};

use super::{campaign, fmt};
use crate::checks::{self, Check};
use crate::config::RunConfig;
use crate::error::CliResult;
use crate::output::RunDir;

pub fn summary_config(cfg: &RunConfig) -> CliResult<SummaryConfig> {
    Ok(SummaryConfig {
        window: cfg.window,
        envelope: Some(cfg.envelope()?),
        pair_overlaps: false,
        ..SummaryConfig::default()
    })
}

pub fn execute(cfg: &RunConfig, jobs: usize, out: &mut RunDir) -> CliResult<Vec<Check>> {
    let set = campaign(cfg, cfg.t, summary_config(cfg)?, jobs)?;
    analyze(cfg, &set, out)
}

pub fn violation_reports(cfg: &RunConfig, set: &SummarySet, mode: EnvelopeMode) -> CliResult<Vec<ViolationReport>> {
    Ok(cfg
        .r
        .iter()
        .map(|&r| envelope_violation_rate(set, mode, r))
        .collect::<Result<_, _>>()?)
}

pub(crate) fn violation_rows(reports: &[ViolationReport]) -> impl Iterator<Item = Vec<String>> + '_ {
    reports.iter().map(|v| {
        vec![
            v.mode.name().to_string(),
            fmt(v.r),
            v.rate.hits.to_string(),
            v.rate.trials.to_string(),
            fmt(v.rate.estimate),
            fmt(v.rate.ci.lo),
            fmt(v.rate.ci.hi),
            v.outside_regime.to_string(),
        ]
    })
}

pub(crate) const VIOLATION_HEADER: &[&str] = &["mode", "r", "hits", "replicas", "fraction", "ci_lo", "ci_hi", "outside_regime"];

/// Violation fractions for every mode and `r`; one trend check per mode.
pub fn analyze(cfg: &RunConfig, set: &SummarySet, out: &mut RunDir) -> CliResult<Vec<Check>> {
    let mut all = Vec::new();
    let mut checks = Vec::new();
    for mode in EnvelopeMode::ALL {
        let reports = violation_reports(cfg, set, mode)?;
        checks.push(checks::violation_trend(mode.name(), &reports));
        all.extend(reports);
    }
    out.csv("envelopes.csv", VIOLATION_HEADER, violation_rows(&all))?;
    Ok(checks)
}
