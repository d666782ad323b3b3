use bbm_core::campaign::par_replicas;
use bbm_core::engine::simulate;
use bbm_core::fkpp::{self, FkppConfig, FkppRun};
use bbm_core::kernels::RngStream;
use bbm_core::stats::Rate;

use super::fmt;
use crate::checks::{self, Check, McKeanRow};
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::output::RunDir;

pub const SPEED_AT: f64 = 30.0;
pub const LAG_FIT_LO: f64 = 10.0;
pub const LAG_FIT_HI: f64 = 60.0;
/// Snapshot spacing for the profile convergence check.
pub const PROFILE_GAP: f64 = 10.0;
pub const MCKEAN_T: f64 = 0.5;
pub const MCKEAN_XS: [f64; 3] = [0.0, 0.5, 1.0];

pub fn solver_config(cfg: &RunConfig) -> FkppConfig {
    FkppConfig {
        dx: cfg.dx,
        dt: cfg.dt.unwrap_or(0.25 * cfg.dx * cfg.dx),
        width: cfg.width,
        ..FkppConfig::default()
    }
}

pub fn validate(cfg: &RunConfig) -> CliResult<()> {
    if !(cfg.fkpp_t >= 2.0) || cfg.fkpp_t.fract() != 0.0 {
        return Err(CliError::Config(format!(
            "fkpp_t must be a whole number of at least 2, got {}",
            cfg.fkpp_t
        )));
    }
    solver_config(cfg).validate()?;
    Ok(())
}

/// Front at every whole time up to `fkpp_t`, profiles `PROFILE_GAP` apart at
/// the end of the run.
pub fn solve(cfg: &RunConfig) -> CliResult<FkppRun> {
    let record: Vec<f64> = (1..=cfg.fkpp_t as u64).map(|t| t as f64).collect();
    let snapshots: Vec<f64> = [cfg.fkpp_t - PROFILE_GAP, cfg.fkpp_t]
        .into_iter()
        .filter(|&t| t > 0.0)
        .collect();
    Ok(fkpp::solve(&cfg.offspring, &solver_config(cfg), &record, &snapshots)?)
}

/// Solver `u(MCKEAN_T, x)` against the empirical CDF of the BBM maximum.
pub fn mckean_rows(cfg: &RunConfig, jobs: usize) -> CliResult<Vec<McKeanRow>> {
    let sim = cfg.simulation(MCKEAN_T)?;
    let maxima = par_replicas(cfg.mckean_replicas, jobs, |i| {
        let tree = simulate(&sim, &mut RngStream::new(cfg.seed, i))?;
        Ok(tree.max_position().unwrap_or(f64::NEG_INFINITY))
    })?;
    let mut state = fkpp::FkppState::heaviside(
        cfg.dx,
        cfg.width,
        fkpp::Reaction::Law(cfg.offspring.clone()),
    )?;
    state.advance_to(MCKEAN_T, solver_config(cfg).dt)?;
    Ok(MCKEAN_XS
        .iter()
        .map(|&x| McKeanRow {
            x,
            solver: state.value_at(x),
            mc: Rate::new(maxima.iter().filter(|&&m| m <= x).count() as u64, maxima.len() as u64),
        })
        .collect())
}

pub fn execute(cfg: &RunConfig, jobs: usize, out: &mut RunDir) -> CliResult<Vec<Check>> {
    let run = solve(cfg)?;
    let mut checks = analyze(cfg, &run, out)?;
    if cfg.mckean_replicas > 0 {
        let rows = mckean_rows(cfg, jobs)?;
        out.csv(
            "mckean.csv",
            &["t", "x", "solver", "mc", "mc_se", "replicas"],
            rows.iter().map(|r| {
                vec![
                    fmt(MCKEAN_T),
                    fmt(r.x),
                    fmt(r.solver),
                    fmt(r.mc.estimate),
                    fmt(r.mc.se()),
                    r.mc.trials.to_string(),
                ]
            }),
        )?;
        checks.push(checks::mckean(MCKEAN_T, &rows));
    }
    Ok(checks)
}

pub fn analyze(cfg: &RunConfig, run: &FkppRun, out: &mut RunDir) -> CliResult<Vec<Check>> {
    out.csv(
        "front.csv",
        &["t", "front", "lag", "residual"],
        run.samples.iter().map(|s| {
            vec![
                fmt(s.t),
                fmt(s.front),
                fmt(s.lag),
                s.residual.map(fmt).unwrap_or_default(),
            ]
        }),
    )?;
    let mut rows = Vec::new();
    for (t, profile) in &run.profiles {
        for (x, u) in run.offsets.iter().zip(profile) {
            rows.push(vec![fmt(*t), fmt(*x), fmt(*u)]);
        }
    }
    out.csv("profiles.csv", &["t", "offset", "u"], rows)?;

    let mut checks = Vec::new();
    let mut summary = Vec::new();
    if cfg.fkpp_t >= SPEED_AT {
        let speed = fkpp::front_speed(&run.samples, SPEED_AT)?;
        summary.push(vec!["speed".to_string(), fmt(SPEED_AT), fmt(speed)]);
        checks.push(checks::front_speed(SPEED_AT, speed));
    }
    let hi = cfg.fkpp_t.min(LAG_FIT_HI);
    if hi >= LAG_FIT_LO + 2.0 {
        let fit = fkpp::lag_slope(&run.samples, LAG_FIT_LO, hi)?;
        summary.push(vec!["lag_slope".to_string(), fmt(hi), fmt(fit.slope)]);
        summary.push(vec!["lag_slope_se".to_string(), fmt(hi), fmt(fit.slope_se)]);
        checks.push(checks::lag_slope(fit.slope, fit.slope_se));
    }
    if let Some(last) = run.samples.last() {
        if let Some(res) = last.residual {
            summary.push(vec!["wave_residual".to_string(), fmt(last.t), fmt(res)]);
            checks.push(checks::wave_residual(last));
        }
    }
    if let [(t1, a), (t2, b)] = run.profiles.as_slice() {
        let d = fkpp::profile_distance(a, b);
        summary.push(vec!["profile_distance".to_string(), fmt(*t2), fmt(d)]);
        checks.push(checks::profile_convergence(*t1, *t2, d));
    }
    summary.push(vec![
        "clamp_events".to_string(),
        fmt(run.state.time()),
        run.state.clamp_events().to_string(),
    ]);
    out.csv("fkpp_summary.csv", &["quantity", "t", "value"], summary)?;
    Ok(checks)
}
