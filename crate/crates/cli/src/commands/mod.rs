//! Subcommands. Each module runs its campaign (or solver), writes its tables
//! into the run directory and returns the acceptance checks it can evaluate.
//! `analyze` functions take an existing [`SummarySet`], so one campaign can
//! feed several estimators.

pub mod bridge;
pub mod envelopes;
pub mod exceedances;
pub mod fkpp;
pub mod gaps;
pub mod genealogy;
pub mod gibbs;
pub mod local_finiteness;
pub mod martingale;
pub mod report;
pub mod simulate;
pub mod tails;
pub mod tube;

use std::path::PathBuf;
use std::time::SystemTime;

use bbm_core::campaign::{run_campaign, Campaign};
use bbm_core::kernels::RNG_ALGORITHM;
use bbm_core::stats::{SummaryConfig, SummarySet};

use crate::checks::Check;
use crate::config::RunConfig;
use crate::error::CliResult;
use crate::output::{default_root, run_id, RunDir, RunManifest, CODE_VERSION};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Genealogy,
    Envelopes,
    Tube,
    LocalFiniteness,
    Martingale,
    Tails,
    Exceedances,
    Gibbs,
    Gaps,
    Fkpp,
    BridgeValidate,
    Report,
}

impl Command {
    pub const ALL: [Command; 13] = [
        Self::Simulate,
        Self::Genealogy,
        Self::Envelopes,
        Self::Tube,
        Self::LocalFiniteness,
        Self::Martingale,
        Self::Tails,
        Self::Exceedances,
        Self::Gibbs,
        Self::Gaps,
        Self::Fkpp,
        Self::BridgeValidate,
        Self::Report,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Simulate => "simulate",
            Self::Genealogy => "genealogy",
            Self::Envelopes => "envelopes",
            Self::Tube => "tube",
            Self::LocalFiniteness => "local-finiteness",
            Self::Martingale => "martingale",
            Self::Tails => "tails",
            Self::Exceedances => "exceedances",
            Self::Gibbs => "gibbs",
            Self::Gaps => "gaps",
            Self::Fkpp => "fkpp",
            Self::BridgeValidate => "bridge-validate",
            Self::Report => "report",
        }
    }

    /// Horizons the command simulates, for the manifest.
    fn horizons(self, cfg: &RunConfig) -> Vec<f64> {
        match self {
            Self::LocalFiniteness | Self::Martingale => cfg.horizons.clone(),
            Self::Fkpp => vec![cfg.fkpp_t],
            Self::BridgeValidate | Self::Report => Vec::new(),
            _ => vec![cfg.t],
        }
    }

    /// Command-specific constraints on top of [`RunConfig::validate`].
    pub fn validate(self, cfg: &RunConfig) -> CliResult<()> {
        cfg.validate()?;
        match self {
            Self::Genealogy => cfg.validate_genealogy_regime(),
            Self::Envelopes | Self::Tube => cfg.validate_envelope_window(),
            Self::LocalFiniteness => local_finiteness::validate(cfg),
            Self::Martingale => martingale::validate(cfg),
            Self::Fkpp => fkpp::validate(cfg),
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub jobs: usize,
    /// Output directory; `<root>/<command>-<run_id>` when unset.
    pub out: Option<PathBuf>,
    /// Run directories read by `report`.
    pub inputs: Vec<PathBuf>,
}

pub struct RunOutcome {
    pub dir: PathBuf,
    pub manifest: RunManifest,
}

impl RunOutcome {
    pub fn passed(&self) -> bool {
        crate::checks::all_passed(&self.manifest.checks)
    }
}

/// Validates, runs the command, and writes `checks.csv` and the manifest.
pub fn run(cmd: Command, cfg: &RunConfig, opts: &RunOptions) -> CliResult<RunOutcome> {
    cmd.validate(cfg)?;
    let id = run_id(cmd.name(), cfg);
    let dir = opts
        .out
        .clone()
        .unwrap_or_else(|| default_root().join(format!("{}-{id}", cmd.name())));
    let mut out = RunDir::create(&dir, id.clone())?;
    let jobs = opts.jobs.max(1);
    let checks = match cmd {
        Command::Simulate => simulate::execute(cfg, jobs, &mut out)?,
        Command::Genealogy => genealogy::execute(cfg, jobs, &mut out)?,
        Command::Envelopes => envelopes::execute(cfg, jobs, &mut out)?,
        Command::Tube => tube::execute(cfg, jobs, &mut out)?,
        Command::LocalFiniteness => local_finiteness::execute(cfg, jobs, &mut out)?,
        Command::Martingale => martingale::execute(cfg, jobs, &mut out)?,
        Command::Tails => tails::execute(cfg, jobs, &mut out)?,
        Command::Exceedances => exceedances::execute(cfg, jobs, &mut out)?,
        Command::Gibbs => gibbs::execute(cfg, jobs, &mut out)?,
        Command::Gaps => gaps::execute(cfg, jobs, &mut out)?,
        Command::Fkpp => fkpp::execute(cfg, jobs, &mut out)?,
        Command::BridgeValidate => bridge::execute(cfg, jobs, &mut out)?,
        Command::Report => report::execute(&opts.inputs, &mut out)?,
    };
    write_checks(&mut out, &checks)?;
    let manifest = RunManifest {
        command: cmd.name().to_string(),
        run_id: id,
        config: cfg.to_json(),
        seed: cfg.seed,
        replicas: cfg.replicas,
        horizons: cmd.horizons(cfg),
        code_version: CODE_VERSION.to_string(),
        rng_algorithm: RNG_ALGORITHM.to_string(),
        timestamp: humantime::format_rfc3339_seconds(SystemTime::now()).to_string(),
        outputs: out.inventory()?,
        checks,
    };
    out.write_manifest(&manifest)?;
    Ok(RunOutcome { dir, manifest })
}

pub fn write_checks(out: &mut RunDir, checks: &[Check]) -> CliResult<()> {
    out.csv(
        "checks.csv",
        &["check", "passed", "detail"],
        checks
            .iter()
            .map(|c| vec![c.name.clone(), c.passed.to_string(), c.detail.clone()]),
    )
}

/// Runs `cfg.replicas` replicas at horizon `t`.
pub fn campaign(cfg: &RunConfig, t: f64, summary: SummaryConfig, jobs: usize) -> CliResult<SummarySet> {
    let c = Campaign::new(cfg.simulation(t)?, summary, cfg.seed, cfg.replicas);
    Ok(run_campaign(&c, jobs)?)
}

/// Shortest text that reads back as the same `f64`.
pub(crate) fn fmt(x: f64) -> String {
    x.to_string()
}

pub(crate) fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt).unwrap_or_default()
}
