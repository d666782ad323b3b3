use std::f64::consts::SQRT_2;

use bbm_core::engine::{simulate, write_checkpoints, write_records};
use bbm_core::envelope::front_m;
use bbm_core::kernels::RngStream;
use bbm_core::stats::{MeanEstimate, SummaryConfig, SummarySet};

use super::{campaign, fmt, fmt_opt};
use crate::checks::{self, Check};
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::output::RunDir;

pub fn summary_config(cfg: &RunConfig) -> SummaryConfig {
    SummaryConfig {
        window: cfg.window,
        count_levels: vec![cfg.count_level],
        ..SummaryConfig::default()
    }
}

pub fn execute(cfg: &RunConfig, jobs: usize, out: &mut RunDir) -> CliResult<Vec<Check>> {
    let set = campaign(cfg, cfg.t, summary_config(cfg), jobs)?;
    dump_trees(cfg, out)?;
    analyze(cfg, &set, out)
}

/// Writes `summaries.csv` and `population.csv`; checks `E n(t) = e^t` and,
/// for binary branching, the geometric law of `n(t)`.
pub fn analyze(cfg: &RunConfig, set: &SummarySet, out: &mut RunDir) -> CliResult<Vec<Check>> {
    let t = set.horizon()?;
    let m = front_m(t).ok();
    out.csv(
        "summaries.csv",
        &[
            "replica",
            "population",
            "pruned",
            "max_position",
            "recentred_max",
            "extremal_count",
            "derivative_martingale",
            "count_above_level",
        ],
        set.replicas().iter().map(|s| {
            vec![
                s.replica.to_string(),
                s.population.to_string(),
                s.pruned.to_string(),
                fmt_opt(s.max_position),
                fmt_opt(s.max_position.zip(m).map(|(x, m)| x - m)),
                s.extremal.len().to_string(),
                fmt_opt(s.derivative_martingale),
                s.counts_above.first().map(u64::to_string).unwrap_or_default(),
            ]
        }),
    )?;

    let pops: Vec<u64> = set.replicas().iter().map(|s| s.population).collect();
    let est = MeanEstimate::from_slice(&set.populations());
    let maxima = MeanEstimate::from_slice(&set.maxima());
    out.csv(
        "population.csv",
        &["t", "replicas", "mean_population", "se", "expected", "mean_max", "mean_max_se", "sqrt2_t"],
        [vec![
            fmt(t),
            set.len().to_string(),
            fmt(est.mean),
            fmt(est.se),
            fmt(t.exp()),
            fmt(maxima.mean),
            fmt(maxima.se),
            fmt(SQRT_2 * t),
        ]],
    )?;

    let mut checks = Vec::new();
    if cfg.prune_margin.is_none() {
        checks.push(checks::population_mean(t, &pops));
        if cfg.offspring.is_binary() {
            checks.push(checks::population_law(t, &pops));
        }
    }
    Ok(checks)
}

/// Re-simulates the first `dump_trees` replicas (same streams as the
/// campaign) and writes their records and checkpoints.
fn dump_trees(cfg: &RunConfig, out: &mut RunDir) -> CliResult<()> {
    let sim = cfg.simulation(cfg.t)?;
    for replica in 0..cfg.dump_trees.min(cfg.replicas) {
        let tree = simulate(&sim, &mut RngStream::new(cfg.seed, replica))?;
        let mut records = Vec::new();
        write_records(&tree, &mut records)?;
        let mut checkpoints = Vec::new();
        write_checkpoints(&tree, &mut checkpoints)?;
        let text = |b: Vec<u8>| String::from_utf8(b).map_err(|e| CliError::Runtime(e.to_string()));
        out.csv_text(&format!("trees/replica_{replica}_records.csv"), &text(records)?)?;
        out.csv_text(&format!("trees/replica_{replica}_checkpoints.csv"), &text(checkpoints)?)?;
    }
    Ok(())
}
