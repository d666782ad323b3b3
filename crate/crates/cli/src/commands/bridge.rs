use bbm_core::bridge::{
    bridge_below_line_bound, bridge_below_line_exact, bridge_below_line_window, concave_curve_stay_below_bound,
    mc_bridge_below_line, LinearBarrier,
};
use bbm_core::campaign::par_replicas;
use bbm_core::kernels::RngStream;

use super::fmt;
use crate::checks::{self, BridgeRow, Check};
use crate::config::RunConfig;
use crate::error::CliResult;
use crate::output::RunDir;

/// `(T, a, b, A, B)`: bridge from `a` to `b` over `[0, T]`, barrier from
/// `A` to `B`.
pub const PARAMETER_SETS: [(f64, f64, f64, f64, f64); 10] = [
    (4.0, 0.0, 0.0, 2.0, 2.0),
    (10.0, 0.0, 0.0, 1.0, 3.0),
    (1.0, 0.0, 0.0, 0.5, 0.5),
    (2.0, 0.0, 1.0, 1.0, 2.0),
    (5.0, -1.0, 0.0, 1.0, 1.0),
    (3.0, 0.0, -2.0, 0.5, 0.0),
    (8.0, 0.0, 2.0, 1.0, 2.5),
    (6.0, -0.5, 0.5, 1.0, 3.0),
    (2.5, 0.0, 0.0, 0.3, 1.2),
    (10.0, 0.0, 0.0, 2.0, 2.0),
];

const BOUND_STREAM: u64 = u64::MAX - 2;

/// Concave-curve bound rows `(C, eps, r, a_const)`.
const CONCAVE_ROWS: [(f64, f64, f64, f64); 4] = [
    (1.0, 0.75, 10.0, 1.0),
    (1.0, 0.75, 40.0, 1.0),
    (2.0, 0.8, 20.0, 1.0),
    (2.0, 0.8, 60.0, 1.0),
];

pub fn barrier(set: (f64, f64, f64, f64, f64)) -> LinearBarrier {
    let (length, start, end, left, right) = set;
    LinearBarrier {
        left,
        right,
        length,
        start,
        end,
    }
}

pub fn formula_rows(cfg: &RunConfig, jobs: usize) -> CliResult<Vec<BridgeRow>> {
    Ok(par_replicas(PARAMETER_SETS.len() as u64, jobs, |i| {
        let b = barrier(PARAMETER_SETS[i as usize]);
        Ok(BridgeRow {
            exact: bridge_below_line_exact(&b)?,
            mc: mc_bridge_below_line(&b, cfg.trials, cfg.bridge_grid_dt, &mut RngStream::new(cfg.seed, i))?,
        })
    })?)
}

/// `(z1, z2, r1, r2, t, bound, exact)` on random draws.
pub fn bound_draws(cfg: &RunConfig) -> CliResult<Vec<[f64; 7]>> {
    let mut rng = RngStream::new(cfg.seed, BOUND_STREAM);
    let mut out = Vec::with_capacity(cfg.bound_draws as usize);
    for _ in 0..cfg.bound_draws {
        let z1 = 3.0 * rng.uniform();
        let z2 = 3.0 * rng.uniform();
        let r1 = 3.0 * rng.uniform();
        let r2 = 3.0 * rng.uniform();
        let lo = r1 + r2 + 0.5;
        let t = lo + (30.0 - lo) * rng.uniform();
        let bound = bridge_below_line_bound(z1, z2, r1, r2, t)?;
        let exact = bridge_below_line_window(z1, z2, r1, r2, t)?;
        out.push([z1, z2, r1, r2, t, bound, exact]);
    }
    Ok(out)
}

pub fn execute(cfg: &RunConfig, jobs: usize, out: &mut RunDir) -> CliResult<Vec<Check>> {
    let rows = formula_rows(cfg, jobs)?;
    out.csv(
        "bridge_formula.csv",
        &[
            "length",
            "start",
            "end",
            "barrier_left",
            "barrier_right",
            "exact",
            "mc_fine",
            "mc_fine_se",
            "mc_coarse",
            "mc_extrapolated",
            "mc_extrapolated_se",
            "paths",
            "grid_dt",
        ],
        PARAMETER_SETS.iter().zip(&rows).map(|(&(t, a, b, l, r), row)| {
            vec![
                fmt(t),
                fmt(a),
                fmt(b),
                fmt(l),
                fmt(r),
                fmt(row.exact),
                fmt(row.mc.fine.estimate()),
                fmt(row.mc.fine.se()),
                fmt(row.mc.coarse.estimate()),
                fmt(row.mc.extrapolated),
                fmt(row.mc.extrapolated_se),
                row.mc.paths.to_string(),
                fmt(row.mc.grid_dt),
            ]
        }),
    )?;
    let draws = bound_draws(cfg)?;
    out.csv(
        "bridge_bound.csv",
        &["z1", "z2", "r1", "r2", "t", "bound", "exact"],
        draws.iter().map(|d| d.iter().map(|&x| fmt(x)).collect()),
    )?;
    out.csv(
        "concave_bound.csv",
        &["c", "eps", "r", "a_const", "bound"],
        CONCAVE_ROWS
            .iter()
            .map(|&(c, eps, r, a)| {
                Ok(vec![fmt(c), fmt(eps), fmt(r), fmt(a), fmt(concave_curve_stay_below_bound(c, eps, r, a)?)])
            })
            .collect::<CliResult<Vec<_>>>()?,
    )?;
    let pairs: Vec<(f64, f64)> = draws.iter().map(|d| (d[5], d[6])).collect();
    Ok(vec![checks::bridge_formula(&rows), checks::bridge_bound_dominates(&pairs)])
}
