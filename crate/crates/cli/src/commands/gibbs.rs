use bbm_core::stats::{overlap_masses, GibbsConfig, Histogram, SummaryConfig, SummarySet};

use super::{campaign, fmt};
use crate::checks::{self, Check, GIBBS_HI, GIBBS_LO};
use crate::config::RunConfig;
use crate::error::CliResult;
use crate::output::RunDir;

pub fn gibbs_config(cfg: &RunConfig) -> GibbsConfig {
    GibbsConfig {
        beta: cfg.gibbs_beta,
        pairs: cfg.pairs,
        replicas: cfg.gibbs_replicas.unwrap_or(cfg.replicas),
    }
}

pub fn summary_config(cfg: &RunConfig) -> SummaryConfig {
    SummaryConfig {
        window: cfg.window,
        gibbs: Some(gibbs_config(cfg)),
        pair_overlaps: false,
        ..SummaryConfig::default()
    }
}

pub fn execute(cfg: &RunConfig, jobs: usize, out: &mut RunDir) -> CliResult<Vec<Check>> {
    let set = campaign(cfg, cfg.t, summary_config(cfg), jobs)?;
    analyze(cfg, &set, out)
}

/// Pooled `Q/t` of Gibbs-sampled pairs: histogram and masses near 0, near 1
/// and in between.
pub fn analyze(cfg: &RunConfig, set: &SummarySet, out: &mut RunDir) -> CliResult<Vec<Check>> {
    let t = set.horizon()?;
    let pooled: Vec<f64> = set.replicas().iter().flat_map(|s| s.gibbs.iter().copied()).collect();
    let hist = Histogram::new(0.0, 1.0, cfg.bins, pooled.iter().copied());
    let total = hist.total().max(1) as f64;
    let edges = hist.edges();
    out.csv(
        "gibbs_overlaps.csv",
        &["beta", "bin_lo", "bin_hi", "pairs", "fraction"],
        hist.counts.iter().enumerate().map(|(i, &c)| {
            vec![
                fmt(cfg.gibbs_beta),
                fmt(edges[i]),
                fmt(edges[i + 1]),
                c.to_string(),
                fmt(c as f64 / total),
            ]
        }),
    )?;
    let masses = overlap_masses(&pooled, GIBBS_LO, GIBBS_HI);
    out.csv(
        "gibbs_masses.csv",
        &["t", "beta", "samples", "near_zero", "middle", "near_one"],
        [vec![
            fmt(t),
            fmt(cfg.gibbs_beta),
            masses.samples.to_string(),
            fmt(masses.near_zero),
            fmt(masses.middle),
            fmt(masses.near_one),
        ]],
    )?;
    Ok(vec![checks::gibbs_two_point(&masses)])
}
