use bbm_core::stats::{tube_containment, EnvelopeMode, SummarySet};

use super::envelopes::{summary_config, violation_reports, violation_rows, VIOLATION_HEADER};
use super::{campaign, fmt};
use crate::checks::{self, Check};
use crate::config::RunConfig;
use crate::error::CliResult;
use crate::output::RunDir;

pub fn execute(cfg: &RunConfig, jobs: usize, out: &mut RunDir) -> CliResult<Vec<Check>> {
    let set = campaign(cfg, cfg.t, summary_config(cfg)?, jobs)?;
    analyze(cfg, &set, out)
}

/// Share of extremal particles whose path stays inside the tube on
/// `[r, t - r]`, plus the per-replica tube violation fractions.
pub fn analyze(cfg: &RunConfig, set: &SummarySet, out: &mut RunDir) -> CliResult<Vec<Check>> {
    let rates = cfg
        .r
        .iter()
        .map(|&r| tube_containment(set, r))
        .collect::<Result<Vec<_>, _>>()?;
    out.csv(
        "tube.csv",
        &[
            "r",
            "inside",
            "extremal_particles",
            "fraction",
            "ci_lo",
            "ci_hi",
            "above_entropic",
            "below_lower",
        ],
        cfg.r.iter().zip(&rates).map(|(&r, x)| {
            let (above, below) = side_fractions(set, r);
            vec![
                fmt(r),
                x.hits.to_string(),
                x.trials.to_string(),
                fmt(x.estimate),
                fmt(x.ci.lo),
                fmt(x.ci.hi),
                fmt(above),
                fmt(below),
            ]
        }),
    )?;
    let reports = violation_reports(cfg, set, EnvelopeMode::Tube)?;
    out.csv("tube_violations.csv", VIOLATION_HEADER, violation_rows(&reports))?;

    let (r_max, at_max) = cfg
        .r
        .iter()
        .zip(&rates)
        .max_by(|a, b| a.0.total_cmp(b.0))
        .expect("validated: r is non-empty");
    Ok(vec![
        checks::tube_containment(*r_max, at_max),
        checks::violation_trend("tube", &reports),
    ])
}

/// Shares of extremal particles that touch the entropic envelope from below
/// and the lower envelope from above somewhere on `[r, t - r]`.
fn side_fractions(set: &SummarySet, r: f64) -> (f64, f64) {
    let (mut above, mut below, mut total) = (0u64, 0u64, 0u64);
    for p in set.replicas().iter().filter_map(|s| s.envelope.as_ref()).flat_map(|e| &e.extremal) {
        total += 1;
        above += p.entropic.is_some_and(|v| v >= r) as u64;
        below += p.lower.is_some_and(|v| v >= r) as u64;
    }
    let n = total.max(1) as f64;
    (above as f64 / n, below as f64 / n)
}
