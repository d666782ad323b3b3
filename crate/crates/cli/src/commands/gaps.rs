use bbm_core::kernels::RngStream;
use bbm_core::stats::{gap_statistics, SummaryConfig, SummarySet};

use super::{campaign, fmt, fmt_opt};
use crate::checks::{self, Check};
use crate::config::RunConfig;
use crate::error::CliResult;
use crate::output::RunDir;

/// Stream id of the Poisson control; disjoint from replica ids.
const CONTROL_STREAM: u64 = u64::MAX - 1;

pub fn summary_config(cfg: &RunConfig) -> SummaryConfig {
    SummaryConfig {
        window: cfg.window,
        top: cfg.max_rank + 1,
        pair_overlaps: false,
        ..SummaryConfig::default()
    }
}

pub fn execute(cfg: &RunConfig, jobs: usize, out: &mut RunDir) -> CliResult<Vec<Check>> {
    let set = campaign(cfg, cfg.t, summary_config(cfg), jobs)?;
    analyze(cfg, &set, out)
}

pub fn analyze(cfg: &RunConfig, set: &SummarySet, out: &mut RunDir) -> CliResult<Vec<Check>> {
    let mut rng = RngStream::new(cfg.seed, CONTROL_STREAM);
    let report = gap_statistics(set, cfg.max_rank, cfg.control_samples, &mut rng)?;
    out.csv(
        "gaps.csv",
        &[
            "rank",
            "bbm_mean",
            "bbm_se",
            "poisson_mean",
            "poisson_se",
            "poisson_exact",
            "inverse_rank",
            "derrida_brunet",
        ],
        report.rows.iter().map(|r| {
            vec![
                r.rank.to_string(),
                fmt(r.bbm.mean),
                fmt(r.bbm.se),
                fmt(r.poisson.mean),
                fmt(r.poisson.se),
                fmt(r.poisson_exact),
                fmt(r.inverse_rank),
                fmt_opt(r.derrida_brunet),
            ]
        }),
    )?;
    Ok(vec![checks::gaps_denser(&report)])
}
