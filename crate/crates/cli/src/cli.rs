//! Argument parsing. Every config key is also a `--kebab-case` flag; flags
//! override `--set`, which overrides the `--config` file.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Arg, ArgAction, ArgMatches};

use crate::commands::{self, Command, RunOptions};
use crate::config::{RunConfig, KEYS};
use crate::error::{CliError, CliResult};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 4;

fn about(cmd: Command) -> &'static str {
    match cmd {
        Command::Simulate => "Simulate replicas and summarize population and maxima",
        Command::Genealogy => "Overlap of extremal pairs and the overlap histogram",
        Command::Envelopes => "Upper, entropic and lower envelope violation rates",
        Command::Tube => "Tube containment of extremal paths",
        Command::LocalFiniteness => "Counts of particles above a level across horizons",
        Command::Martingale => "Derivative martingale across horizons",
        Command::Tails => "Right tail of the recentred maximum",
        Command::Exceedances => "Mean exceedance counts against the leading-order formula",
        Command::Gibbs => "Overlap law under the Gibbs measure",
        Command::Gaps => "Gaps between the top particles against a Poisson control",
        Command::Fkpp => "F-KPP front, wave profile and McKean cross-check",
        Command::BridgeValidate => "Brownian bridge barrier formulas against Monte Carlo",
        Command::Report => "Collect the checks of earlier runs",
    }
}

fn flag(key: &str) -> String {
    key.replace('_', "-")
}

pub fn build() -> clap::Command {
    let mut app = clap::Command::new("bbm")
        .about("Branching Brownian motion experiments")
        .version(env!("CARGO_PKG_VERSION"))
        .subcommand_required(true)
        .arg_required_else_help(true);
    for cmd in Command::ALL {
        let mut sub = clap::Command::new(cmd.name())
            .about(about(cmd))
            .arg(
                Arg::new("config")
                    .long("config")
                    .value_name("FILE")
                    .value_parser(clap::value_parser!(PathBuf))
                    .help("Key-value or JSON config file (a manifest.json also works)"),
            )
            .arg(
                Arg::new("out")
                    .long("out")
                    .value_name("DIR")
                    .value_parser(clap::value_parser!(PathBuf))
                    .help("Run directory (default: $BBM_OUT_ROOT/<command>-<run id>)"),
            )
            .arg(
                Arg::new("jobs")
                    .long("jobs")
                    .short('j')
                    .value_parser(clap::value_parser!(usize))
                    .default_value("1")
                    .help("Worker threads; outputs do not depend on it"),
            )
            .arg(
                Arg::new("check")
                    .long("check")
                    .action(ArgAction::SetTrue)
                    .help("Exit with status 4 if any acceptance check fails"),
            )
            .arg(
                Arg::new("set")
                    .long("set")
                    .value_name("KEY=VALUE")
                    .action(ArgAction::Append)
                    .help("Override a config key"),
            );
        for key in KEYS {
            sub = sub.arg(
                Arg::new(*key)
                    .long(flag(key))
                    .value_name("VALUE")
                    .allow_hyphen_values(true)
                    .help_heading("Config keys"),
            );
        }
        if cmd == Command::Report {
            sub = sub.arg(
                Arg::new("inputs")
                    .value_name("RUN_DIR")
                    .num_args(1..)
                    .required(true)
                    .value_parser(clap::value_parser!(PathBuf))
                    .help("Run directories, or directories containing them"),
            );
        }
        app = app.subcommand(sub);
    }
    app
}

/// Config from `--config`, then `--set`, then per-key flags.
pub fn config_from(m: &ArgMatches) -> CliResult<RunConfig> {
    let mut cfg = match m.get_one::<PathBuf>("config") {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    for kv in m.get_many::<String>("set").into_iter().flatten() {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("--set expects KEY=VALUE, got {kv:?}")))?;
        cfg.set(&k.trim().replace('-', "_"), v)?;
    }
    for key in KEYS {
        if let Some(v) = m.get_one::<String>(key) {
            cfg.set(key, v)?;
        }
    }
    Ok(cfg)
}

/// Parses `args` (including the program name), runs the subcommand and
/// returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = match build().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let (name, sub) = matches.subcommand().expect("subcommand required");
    let cmd = Command::ALL
        .into_iter()
        .find(|c| c.name() == name)
        .expect("registered subcommand");
    match dispatch(cmd, sub) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cmd: Command, m: &ArgMatches) -> CliResult<i32> {
    let cfg = config_from(m)?;
    let opts = RunOptions {
        jobs: *m.get_one::<usize>("jobs").expect("default"),
        out: m.get_one::<PathBuf>("out").cloned(),
        inputs: m
            .try_get_many::<PathBuf>("inputs")
            .ok()
            .flatten()
            .map(|v| v.cloned().collect())
            .unwrap_or_default(),
    };
    let outcome = commands::run(cmd, &cfg, &opts)?;
    for c in &outcome.manifest.checks {
        println!("{}", c.line());
    }
    println!("{}", outcome.dir.display());
    if m.get_flag("check") && !outcome.passed() {
        return Ok(EXIT_CHECK_FAILED);
    }
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_key_has_a_flag() {
        build().debug_assert();
        let m = build()
            .try_get_matches_from(["bbm", "simulate", "--window", "-3:-1", "--grid-dt", "0.5", "--set", "seed=9"])
            .unwrap();
        let cfg = config_from(m.subcommand_matches("simulate").unwrap()).unwrap();
        assert_eq!(cfg.window.lo, -3.0);
        assert_eq!(cfg.grid_dt, 0.5);
        assert_eq!(cfg.seed, 9);
    }

    #[test]
    fn flags_override_set() {
        let m = build()
            .try_get_matches_from(["bbm", "tails", "--set", "t=5", "--t", "7"])
            .unwrap();
        assert_eq!(config_from(m.subcommand_matches("tails").unwrap()).unwrap().t, 7.0);
    }

    #[test]
    fn unknown_flag_is_usage_error() {
        assert_eq!(run(["bbm", "simulate", "--bogus", "1"]), 2);
        assert_eq!(run(["bbm", "simulate", "--set", "bogus=1"]), 2);
        assert_eq!(run(["bbm", "simulate", "--alpha", "0.6"]), 2);
    }
}
