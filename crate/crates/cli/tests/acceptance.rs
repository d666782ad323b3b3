//! Acceptance suite: one PASS/FAIL line per criterion at full scale.
//!
//! Red criteria are reported but do not fail the target unless
//! `BBM_ACCEPTANCE_STRICT=1`; errors while evaluating a criterion always do.
//! Tables go to `BBM_ACCEPTANCE_OUT` when set, otherwise to a temporary
//! directory.

use std::path::{Path, PathBuf};
use std::process::Command as Process;
use std::time::Instant;

use bbm_cli::checks::{self, Check};
use bbm_cli::commands::{
    bridge, campaign, envelopes, exceedances, fkpp, gaps, genealogy, gibbs, local_finiteness, simulate, tails, tube,
};
use bbm_cli::config::RunConfig;
use bbm_cli::error::CliResult;
use bbm_cli::output::{RunDir, RunManifest, MANIFEST_FILE};
use bbm_core::stats::{SummaryConfig, SummarySet};

const SEED: u64 = 20_260_101;
const REPLICAS: u64 = 10_000;

struct Criterion {
    number: u32,
    title: &'static str,
    parts: Vec<Check>,
}

impl Criterion {
    fn passed(&self) -> bool {
        checks::all_passed(&self.parts)
    }

    fn line(&self) -> String {
        let detail = self
            .parts
            .iter()
            .map(|c| format!("[{}] {}: {}", if c.passed { "ok" } else { "x" }, c.name, c.detail))
            .collect::<Vec<_>>()
            .join(" | ");
        format!(
            "{} criterion {:>2} {}: {detail}",
            if self.passed() { "PASS" } else { "FAIL" },
            self.number,
            self.title
        )
    }
}

fn jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn base(t: f64) -> RunConfig {
    RunConfig {
        t,
        replicas: REPLICAS,
        seed: SEED,
        ..RunConfig::default()
    }
}

fn dir(root: &Path, name: &str) -> CliResult<RunDir> {
    RunDir::create(root.join(name), format!("acceptance-{name}"))
}

fn run_set(cfg: &RunConfig, summary: SummaryConfig) -> CliResult<SummarySet> {
    let start = Instant::now();
    let set = campaign(cfg, cfg.t, summary, jobs())?;
    eprintln!(
        "  campaign t={} replicas={} done in {:.0?}",
        cfg.t,
        cfg.replicas,
        start.elapsed()
    );
    Ok(set)
}

/// The t=12 campaign carries every estimator that needs that horizon.
fn t12_summary(cfg: &RunConfig) -> CliResult<SummaryConfig> {
    Ok(SummaryConfig {
        count_levels: vec![cfg.count_level],
        top: cfg.max_rank + 1,
        gibbs: Some(gibbs::gibbs_config(cfg)),
        pair_overlaps: true,
        ..envelopes::summary_config(cfg)?
    })
}

fn criteria(root: &Path) -> CliResult<Vec<Criterion>> {
    let mut out = Vec::new();
    let mut push = |number, title, parts: Vec<Check>| {
        let c = Criterion { number, title, parts };
        println!("{}", c.line());
        out.push(c);
    };

    eprintln!("population campaigns");
    let mut population = Vec::new();
    let mut sets = Vec::new();
    for t in [2.0, 6.0, 10.0] {
        let cfg = RunConfig {
            exceedance_level: None,
            ..base(t)
        };
        let summary = SummaryConfig {
            count_levels: vec![cfg.count_level],
            ..exceedances::summary_config(&cfg)
        };
        let set = run_set(&cfg, summary)?;
        let checks = simulate::analyze(&cfg, &set, &mut dir(root, &format!("population-t{t}"))?)?;
        population.extend(checks.into_iter().filter(|c| t == 2.0 || c.name.starts_with("population mean")));
        sets.push((cfg, set));
    }
    push(1, "population law", population);

    eprintln!("covariance on fixed skeletons");
    let cov_cfg = RunConfig {
        resamples: 100_000,
        skeletons: 4,
        skeleton_t: 6.0,
        covariance_pairs: 20,
        ..base(6.0)
    };
    let pairs = genealogy::covariance_pairs(&cov_cfg, jobs())?;
    push(
        2,
        "covariance equals overlap",
        vec![checks::covariance_matches_overlap(
            &pairs.iter().map(|p| p.pair).collect::<Vec<_>>(),
        )],
    );

    eprintln!("bridge oracle");
    let bridge_cfg = RunConfig {
        trials: 100_000,
        bridge_grid_dt: 0.001,
        bound_draws: 1000,
        ..base(1.0)
    };
    let bridge_checks = bridge::execute(&bridge_cfg, jobs(), &mut dir(root, "bridge")?)?;
    push(3, "bridge oracle", bridge_checks);

    eprintln!("t=12 campaign");
    let cfg12 = RunConfig {
        r: vec![1.0, 3.0, 5.0],
        gibbs_beta: 2.0,
        pairs: 100,
        gibbs_replicas: Some(1000),
        max_rank: 20,
        control_samples: 100_000,
        ..base(12.0)
    };
    let set12 = run_set(&cfg12, t12_summary(&cfg12)?)?;
    let tail_checks = tails::analyze(&set12, &mut dir(root, "tails")?)?;
    let (centering, shape): (Vec<_>, Vec<_>) = tail_checks
        .into_iter()
        .partition(|c| c.name.starts_with("front centering"));
    push(4, "front centering", centering);
    push(5, "tail shape", shape);

    let genealogy_cfg = RunConfig {
        r: vec![1.0, 2.0, 3.0],
        ..cfg12.clone()
    };
    push(
        6,
        "genealogy trend",
        genealogy::analyze(&genealogy_cfg, &set12, &mut dir(root, "genealogy")?)?,
    );

    let mut trends = envelopes::analyze(&cfg12, &set12, &mut dir(root, "envelopes")?)?;
    trends.extend(
        tube::analyze(&cfg12, &set12, &mut dir(root, "tube")?)?
            .into_iter()
            .filter(|c| c.name.starts_with("tube containment")),
    );
    push(7, "envelope and tube trends", trends);

    eprintln!("t=8 campaign");
    let cfg8 = base(8.0);
    let set8 = run_set(&cfg8, local_finiteness::summary_config(&cfg8))?;
    let (_, set10) = &sets[2];
    let lf_cfg = RunConfig {
        quantile: 0.99,
        count_level: -1.0,
        ..base(12.0)
    };
    push(
        8,
        "local finiteness",
        local_finiteness::analyze(&lf_cfg, &[&set8, set10, &set12], &mut dir(root, "local-finiteness")?)?,
    );

    push(9, "Gibbs two-point law", gibbs::analyze(&cfg12, &set12, &mut dir(root, "gibbs")?)?);

    let (cfg10, set10) = &sets[2];
    push(
        10,
        "exceedance formula",
        exceedances::analyze(cfg10, set10, &mut dir(root, "exceedances")?)?,
    );

    eprintln!("F-KPP solve and McKean cross-check");
    let fk_cfg = RunConfig {
        fkpp_t: 60.0,
        mckean_replicas: 100_000,
        ..base(1.0)
    };
    let start = Instant::now();
    let run = fkpp::solve(&fk_cfg)?;
    eprintln!("  solve done in {:.0?}", start.elapsed());
    let mut fk_dir = dir(root, "fkpp")?;
    let fk_checks = fkpp::analyze(&fk_cfg, &run, &mut fk_dir)?;
    // the profile comparison is a solver invariant, not part of this criterion
    let (profile, mut fk): (Vec<_>, Vec<_>) = fk_checks
        .into_iter()
        .partition(|c| c.name.starts_with("recentred profiles"));
    for p in &profile {
        eprintln!("  (invariant) {}", p.line());
    }
    fk.push(checks::mckean(fkpp::MCKEAN_T, &fkpp::mckean_rows(&fk_cfg, jobs())?));
    push(11, "F-KPP front and McKean", fk);

    push(12, "gap statistics", gaps::analyze(&cfg12, &set12, &mut dir(root, "gaps")?)?);

    eprintln!("determinism");
    push(13, "determinism", determinism(root)?);
    Ok(out)
}

fn bbm(args: &[&str], out: &Path) -> CliResult<Vec<(String, String)>> {
    let status = Process::new(env!("CARGO_BIN_EXE_bbm"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()?;
    if !status.status.success() {
        return Err(bbm_cli::error::CliError::Runtime(format!(
            "bbm {args:?} failed: {}",
            String::from_utf8_lossy(&status.stderr)
        )));
    }
    Ok(RunManifest::load(&out.join(MANIFEST_FILE))?.digests())
}

/// Each run three times: `--jobs 1`, `--jobs 4`, and `--jobs 1` again.
fn determinism(root: &Path) -> CliResult<Vec<Check>> {
    let runs: [(&str, &[&str]); 2] = [
        (
            "simulate",
            &["simulate", "--t", "6", "--replicas", "2000", "--seed", "42", "--dump-trees", "2"],
        ),
        (
            "genealogy",
            &["genealogy", "--t", "10", "--replicas", "300", "--seed", "7", "--r", "1,2,3"],
        ),
    ];
    let mut out = Vec::new();
    for (name, args) in runs {
        let path = |tag: &str| -> PathBuf { root.join(format!("determinism-{name}-{tag}")) };
        let with_jobs = |jobs: &str, tag: &str| {
            let mut a = args.to_vec();
            a.extend(["--jobs", jobs]);
            bbm(&a, &path(tag))
        };
        let one = with_jobs("1", "a")?;
        let four = with_jobs("4", "b")?;
        let again = with_jobs("1", "c")?;
        out.push(checks::digests_match(&format!("{name}, jobs 1 vs 4"), &one, &four));
        out.push(checks::digests_match(&format!("{name}, rerun"), &one, &again));
    }
    Ok(out)
}

fn main() {
    let keep = std::env::var_os("BBM_ACCEPTANCE_OUT").map(PathBuf::from);
    let temp = tempfile::tempdir().expect("temporary directory");
    let root = keep.clone().unwrap_or_else(|| temp.path().to_path_buf());
    let strict = std::env::var("BBM_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let start = Instant::now();
    println!("acceptance suite (seed {SEED}, {} worker threads)", jobs());
    let results = match criteria(&root) {
        Ok(r) => r,
        Err(e) => {
            println!("ERROR acceptance suite aborted: {e}");
            std::process::exit(1);
        }
    };
    let passed = results.iter().filter(|c| c.passed()).count();
    println!(
        "acceptance: {passed}/{} criteria pass ({:.0?})",
        results.len(),
        start.elapsed()
    );
    if let Some(k) = keep {
        println!("tables written under {}", k.display());
    }
    if strict && passed < results.len() {
        std::process::exit(1);
    }
}
