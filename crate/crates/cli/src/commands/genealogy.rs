use bbm_core::campaign::par_replicas;
use bbm_core::engine::{overlap_q, simulate};
use bbm_core::kernels::RngStream;
use bbm_core::engine::resample_leaf_positions;
use bbm_core::stats::inference::covariance;
use bbm_core::stats::{genealogy_concentration, overlap_histogram, overlap_mass_inside, SummaryConfig, SummarySet};

use super::{campaign, fmt};
use crate::checks::{self, Check, CovariancePair, OVERLAP_INSIDE_R};
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::output::RunDir;

const SKELETON_STREAM: u64 = 0x736b_656c;
const PAIR_STREAM: u64 = 0x7061_6972;
const RESAMPLE_STREAM: u64 = 0x7265_7361;

pub fn summary_config(cfg: &RunConfig) -> SummaryConfig {
    SummaryConfig {
        window: cfg.window,
        pair_overlaps: true,
        ..SummaryConfig::default()
    }
}

pub fn execute(cfg: &RunConfig, jobs: usize, out: &mut RunDir) -> CliResult<Vec<Check>> {
    let set = campaign(cfg, cfg.t, summary_config(cfg), jobs)?;
    let mut checks = analyze(cfg, &set, out)?;
    if cfg.resamples > 0 {
        let pairs = covariance_pairs(cfg, jobs)?;
        write_covariance(out, &pairs)?;
        checks.push(checks::covariance_matches_overlap(
            &pairs.iter().map(|p| p.pair).collect::<Vec<_>>(),
        ));
    }
    Ok(checks)
}

/// Fractions of replicas with an extremal pair overlap in `(r, t - r)`, and
/// the pooled overlap histogram.
pub fn analyze(cfg: &RunConfig, set: &SummarySet, out: &mut RunDir) -> CliResult<Vec<Check>> {
    let t = set.horizon()?;
    let rates = cfg
        .r
        .iter()
        .map(|&r| genealogy_concentration(set, r))
        .collect::<Result<Vec<_>, _>>()?;
    out.csv(
        "genealogy.csv",
        &["t", "r", "hits", "replicas", "fraction", "ci_lo", "ci_hi"],
        cfg.r.iter().zip(&rates).map(|(r, x)| {
            vec![
                fmt(t),
                fmt(*r),
                x.hits.to_string(),
                x.trials.to_string(),
                fmt(x.estimate),
                fmt(x.ci.lo),
                fmt(x.ci.hi),
            ]
        }),
    )?;

    let hist = overlap_histogram(set, cfg.bins)?;
    let total = hist.total().max(1) as f64;
    let edges = hist.edges();
    out.csv(
        "overlap_histogram.csv",
        &["bin_lo", "bin_hi", "pairs", "fraction"],
        hist.counts
            .iter()
            .enumerate()
            .map(|(i, &c)| vec![fmt(edges[i]), fmt(edges[i + 1]), c.to_string(), fmt(c as f64 / total)]),
    )?;

    let inside = overlap_mass_inside(set, OVERLAP_INSIDE_R)?;
    let pooled = || set.replicas().iter().flat_map(|s| s.pair_overlaps.iter());
    let mass = |keep: &dyn Fn(f64) -> bool| pooled().filter(|o| keep(o.q)).map(|o| o.pairs).sum::<u64>() as f64;
    let n = mass(&|_| true).max(1.0);
    let low = mass(&|q| q <= OVERLAP_INSIDE_R) / n;
    let high = mass(&|q| q >= t - OVERLAP_INSIDE_R) / n;
    Ok(vec![
        checks::genealogy_trend(&cfg.r, &rates),
        checks::overlap_bimodal(&inside, low, high),
    ])
}

#[derive(Clone, Copy, Debug)]
pub struct SkeletonPair {
    pub skeleton: u64,
    pub leaves: (u32, u32),
    pub pair: CovariancePair,
}

/// Covariance of the final positions of random leaf pairs over repeated
/// displacement resampling on fixed skeletons, next to their overlap.
pub fn covariance_pairs(cfg: &RunConfig, jobs: usize) -> CliResult<Vec<SkeletonPair>> {
    if cfg.skeletons == 0 || cfg.covariance_pairs == 0 || cfg.resamples < 2 {
        return Err(CliError::Config("covariance table needs skeletons, pairs and resamples".into()));
    }
    let sim = cfg.simulation(cfg.skeleton_t)?;
    let per = cfg.covariance_pairs.div_ceil(cfg.skeletons as usize);
    let per_skeleton = par_replicas(cfg.skeletons, jobs, |s| {
        let base = RngStream::new(cfg.seed, s);
        let tree = simulate(&sim, &mut base.derive(SKELETON_STREAM))?;
        let leaves: Vec<_> = tree.leaves().map(|r| r.id).collect();
        let mut picks = Vec::new();
        if leaves.len() >= 2 {
            let mut rng = base.derive(PAIR_STREAM);
            let n = leaves.len();
            while picks.len() < per {
                let a = ((rng.uniform() * n as f64) as usize).min(n - 1);
                let b = ((rng.uniform() * n as f64) as usize).min(n - 1);
                if a != b {
                    picks.push((a, b));
                }
            }
        }
        let mut xs = vec![Vec::with_capacity(cfg.resamples as usize); picks.len()];
        let mut ys = xs.clone();
        let mut rng = base.derive(RESAMPLE_STREAM);
        let (mut scratch, mut finals) = (Vec::new(), Vec::new());
        for _ in 0..cfg.resamples {
            resample_leaf_positions(&tree, &mut rng, &mut scratch, &mut finals);
            for (k, &(a, b)) in picks.iter().enumerate() {
                xs[k].push(finals[a]);
                ys[k].push(finals[b]);
            }
        }
        picks
            .iter()
            .enumerate()
            .map(|(k, &(a, b))| {
                Ok(SkeletonPair {
                    skeleton: s,
                    leaves: (leaves[a].0, leaves[b].0),
                    pair: CovariancePair {
                        overlap: overlap_q(&tree, leaves[a], leaves[b])?,
                        covariance: covariance(&xs[k], &ys[k]),
                    },
                })
            })
            .collect::<bbm_core::Result<Vec<_>>>()
    })?;
    Ok(per_skeleton
        .into_iter()
        .flatten()
        .take(cfg.covariance_pairs)
        .collect())
}

fn write_covariance(out: &mut RunDir, pairs: &[SkeletonPair]) -> CliResult<()> {
    out.csv(
        "covariance.csv",
        &["skeleton", "leaf_i", "leaf_j", "overlap", "covariance", "se", "z"],
        pairs.iter().map(|p| {
            let c = p.pair.covariance;
            vec![
                p.skeleton.to_string(),
                p.leaves.0.to_string(),
                p.leaves.1.to_string(),
                fmt(p.pair.overlap),
                fmt(c.mean),
                fmt(c.se),
                fmt(c.z_from(p.pair.overlap)),
            ]
        }),
    )
}
