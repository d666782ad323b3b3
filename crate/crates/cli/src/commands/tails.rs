use bbm_core::stats::{max_law_tail, SummaryConfig, SummarySet, TailConfig};

use super::{campaign, fmt};
use crate::checks::{self, Check};
use crate::config::RunConfig;
use crate::error::CliResult;
use crate::output::RunDir;

pub fn summary_config(cfg: &RunConfig) -> SummaryConfig {
    SummaryConfig {
        window: cfg.window,
        pair_overlaps: false,
        ..SummaryConfig::default()
    }
}

pub fn execute(cfg: &RunConfig, jobs: usize, out: &mut RunDir) -> CliResult<Vec<Check>> {
    let set = campaign(cfg, cfg.t, summary_config(cfg), jobs)?;
    analyze(&set, out)
}

/// Empirical tail of the recentred maximum, its log-linear fit and the
/// bound check; also the centering of the maximum at `m(t)`.
pub fn analyze(set: &SummarySet, out: &mut RunDir) -> CliResult<Vec<Check>> {
    let t = set.horizon()?;
    let recentred = set.recentred_maxima()?;
    let report = max_law_tail(&recentred, t, &TailConfig::default())?;
    out.csv(
        "tail.csv",
        &["t", "x", "survival", "log_survival_over_x"],
        report
            .xs
            .iter()
            .zip(&report.survival)
            .map(|(&x, &s)| vec![fmt(t), fmt(x), fmt(s), fmt((s / x).ln())]),
    )?;
    let b = &report.bound;
    out.csv(
        "tail_bound.csv",
        &["y", "empirical", "bound", "kappa"],
        b.levels
            .iter()
            .zip(&b.empirical)
            .zip(&b.bound)
            .map(|((&y, &p), &q)| vec![fmt(y), fmt(p), fmt(q), fmt(b.kappa)]),
    )?;
    let c = &report.comparison;
    out.csv(
        "tail_fit.csv",
        &[
            "t",
            "samples",
            "slope",
            "slope_se",
            "slope_ci_lo",
            "slope_ci_hi",
            "intercept",
            "compare_from",
            "tail_samples",
            "vuong_z",
            "p_value",
            "bound_consistent",
        ],
        [vec![
            fmt(t),
            report.samples.to_string(),
            fmt(report.fit.slope),
            fmt(report.fit.slope_se),
            fmt(report.slope_ci.0),
            fmt(report.slope_ci.1),
            fmt(report.fit.intercept),
            fmt(c.threshold),
            c.samples.to_string(),
            fmt(c.z),
            fmt(c.p_value),
            b.consistent.to_string(),
        ]],
    )?;
    Ok(vec![checks::tail_shape(&report), checks::front_centering(t, &set.maxima())])
}
