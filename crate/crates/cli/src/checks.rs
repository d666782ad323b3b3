//! Acceptance thresholds and the checks built on them.
//!
//! Each function takes already computed statistics and returns a named
//! pass/fail verdict with the numbers behind it. Subcommands attach these to
//! their manifests, and `--check` turns a failed verdict into exit code 4.

use std::f64::consts::SQRT_2;

use bbm_core::bridge::LineMcEstimate;
use bbm_core::envelope::{front_m, rem_front_r};
use bbm_core::fkpp::FrontSample;
use bbm_core::stats::counts::ExceedanceReport;
use bbm_core::stats::inference::{chi_square_gof, significantly_greater, strictly_decreasing, MeanEstimate, Rate};
use bbm_core::stats::tails::TailReport;
use bbm_core::stats::{pure_birth_pmf, GapReport, OverlapMasses, TightnessReport, ViolationReport};
use serde::{Deserialize, Serialize};

/// Standard errors allowed between a Monte Carlo mean and its target.
pub const SE_MULTIPLE: f64 = 3.0;
/// Significance level below which a goodness-of-fit test rejects.
pub const GOF_LEVEL: f64 = 0.01;
/// Significance level of one-sided trend tests.
pub const TREND_LEVEL: f64 = 0.05;
pub const BRIDGE_TOLERANCE: f64 = 0.01;
/// `|E max - m(t)| <= 1` and `|E max - r(t)| >= 1`.
pub const CENTERING_TOLERANCE: f64 = 1.0;
pub const TAIL_SLOPE_TOLERANCE: f64 = 0.15;
/// Largest share of extremal pair overlaps inside `(r, t - r)` at this `r`.
pub const OVERLAP_INSIDE_R: f64 = 3.0;
pub const OVERLAP_INSIDE_MAX: f64 = 0.2;
pub const TUBE_CONTAINMENT_MIN: f64 = 0.8;
pub const TIGHTNESS_MAX_VARIATION: f64 = 0.5;
/// Gibbs overlaps in `(GIBBS_LO, GIBBS_HI)` count as the middle mass.
pub const GIBBS_LO: f64 = 0.1;
pub const GIBBS_HI: f64 = 0.9;
pub const GIBBS_MIDDLE_MAX: f64 = 0.1;
pub const EXCEEDANCE_RATIO_MIN: f64 = 1.5;
pub const SPEED_TOLERANCE: f64 = 0.02;
/// Coefficient of `log t` in the front lag.
pub const LAG_SLOPE: f64 = 3.0 / (2.0 * SQRT_2);
pub const LAG_SLOPE_TOLERANCE: f64 = 0.15;
pub const WAVE_RESIDUAL_MAX: f64 = 5e-3;
pub const PROFILE_DISTANCE_MAX: f64 = 1e-3;
pub const GAP_RANKS: usize = 3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }

    pub fn line(&self) -> String {
        format!("{} {}: {}", if self.passed { "PASS" } else { "FAIL" }, self.name, self.detail)
    }
}

pub fn all_passed(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.passed)
}

fn within_se(est: &MeanEstimate, target: f64) -> bool {
    (est.mean - target).abs() <= SE_MULTIPLE * est.se
}

pub fn population_mean(t: f64, populations: &[u64]) -> Check {
    let xs: Vec<f64> = populations.iter().map(|&n| n as f64).collect();
    let est = MeanEstimate::from_slice(&xs);
    let target = t.exp();
    Check::new(
        format!("population mean at t={t}"),
        within_se(&est, target),
        format!(
            "mean {:.2} se {:.2} vs e^t {:.2} (z = {:.2}, {} replicas)",
            est.mean,
            est.se,
            target,
            est.z_from(target),
            est.n
        ),
    )
}

/// Binary branching: `n(t)` is geometric, `P[n = k] = e^{-t}(1 - e^{-t})^{k-1}`.
pub fn population_law(t: f64, populations: &[u64]) -> Check {
    let top = populations.iter().copied().max().unwrap_or(1) as usize;
    let mut observed = vec![0u64; top];
    for &n in populations {
        observed[n as usize - 1] += 1;
    }
    let probs: Vec<f64> = (1..=top as u64).map(|k| pure_birth_pmf(t, k)).collect();
    match chi_square_gof(&observed, &probs) {
        Ok(test) => Check::new(
            format!("pure-birth law of n(t) at t={t}"),
            test.p_value > GOF_LEVEL,
            format!("chi-square {:.2}, p = {:.4} ({} replicas)", test.statistic, test.p_value, populations.len()),
        ),
        Err(e) => Check::new(format!("pure-birth law of n(t) at t={t}"), false, e.to_string()),
    }
}

/// One pair on a fixed skeleton: the resampled covariance and the overlap.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CovariancePair {
    pub overlap: f64,
    pub covariance: MeanEstimate,
}

pub fn covariance_matches_overlap(pairs: &[CovariancePair]) -> Check {
    let bad: Vec<String> = pairs
        .iter()
        .filter(|p| !within_se(&p.covariance, p.overlap))
        .map(|p| format!("Q {:.3} cov {:.3}±{:.3}", p.overlap, p.covariance.mean, p.covariance.se))
        .collect();
    let worst = pairs
        .iter()
        .map(|p| p.covariance.z_from(p.overlap).abs())
        .fold(0.0, f64::max);
    Check::new(
        "covariance equals overlap",
        !pairs.is_empty() && bad.is_empty(),
        format!(
            "{} pairs, largest |z| {:.2}{}",
            pairs.len(),
            worst,
            if bad.is_empty() { String::new() } else { format!("; outside 3 SE: {}", bad.join(", ")) }
        ),
    )
}

/// Exact linear-barrier probability against its Monte Carlo estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BridgeRow {
    pub exact: f64,
    pub mc: LineMcEstimate,
}

pub fn bridge_formula(rows: &[BridgeRow]) -> Check {
    let worst = rows
        .iter()
        .map(|r| (r.mc.extrapolated - r.exact).abs())
        .fold(0.0, f64::max);
    Check::new(
        "linear-barrier formula vs Monte Carlo",
        !rows.is_empty() && worst <= BRIDGE_TOLERANCE,
        format!("{} parameter sets, largest |MC - exact| {:.4} (tolerance {BRIDGE_TOLERANCE})", rows.len(), worst),
    )
}

/// `(bound, exact)` per random draw.
pub fn bridge_bound_dominates(draws: &[(f64, f64)]) -> Check {
    let violations = draws.iter().filter(|(b, e)| b < e).count();
    let tightest = draws.iter().map(|(b, e)| b - e).fold(f64::INFINITY, f64::min);
    Check::new(
        "window bound dominates exact probability",
        !draws.is_empty() && violations == 0,
        format!("{} draws, {violations} violations, smallest margin {tightest:.3e}", draws.len()),
    )
}

pub fn front_centering(t: f64, maxima: &[f64]) -> Check {
    let est = MeanEstimate::from_slice(maxima);
    let (m, r) = match (front_m(t), rem_front_r(t)) {
        (Ok(m), Ok(r)) => (m, r),
        _ => return Check::new("front centering", false, format!("t = {t} has no front")),
    };
    let near_m = (est.mean - m).abs() <= CENTERING_TOLERANCE;
    let far_r = (est.mean - r).abs() >= CENTERING_TOLERANCE;
    Check::new(
        format!("front centering at t={t}"),
        near_m && far_r,
        format!(
            "mean max {:.3} ± {:.3}; m(t) = {m:.3} (diff {:+.3}), r(t) = {r:.3} (diff {:+.3})",
            est.mean,
            est.se,
            est.mean - m,
            est.mean - r
        ),
    )
}

pub fn tail_shape(report: &TailReport) -> Check {
    let err = report.slope_relative_error();
    let rejected = report.comparison.exponential_rejected(GOF_LEVEL);
    Check::new(
        "max-law tail shape",
        err <= TAIL_SLOPE_TOLERANCE && rejected,
        format!(
            "slope {:.4} ± {:.4} vs -sqrt2 (rel. error {:.3}); exponential vs x e^(-sqrt2 x): z = {:.2}, p = {:.2e}",
            report.fit.slope, report.fit.slope_se, err, report.comparison.z, report.comparison.p_value
        ),
    )
}

fn rates_text(rs: &[f64], rates: &[Rate]) -> String {
    rs.iter()
        .zip(rates)
        .map(|(r, x)| format!("r={r}: {:.4} [{:.4}, {:.4}]", x.estimate, x.ci.lo, x.ci.hi))
        .collect::<Vec<_>>()
        .join("; ")
}

pub fn genealogy_trend(rs: &[f64], rates: &[Rate]) -> Check {
    Check::new(
        "extremal pair overlap fraction decreasing in r",
        rates.len() >= 2 && strictly_decreasing(rates, TREND_LEVEL),
        rates_text(rs, rates),
    )
}

/// `inside`: share of pair overlaps in `(3, t - 3)`; `low` and `high`: share
/// at or below 3 and at or above `t - 3`.
pub fn overlap_bimodal(inside: &Rate, low: f64, high: f64) -> Check {
    Check::new(
        "extremal pair overlaps concentrate near 0 and t",
        inside.estimate < OVERLAP_INSIDE_MAX && low > 0.0 && high > 0.0,
        format!(
            "{} pairs: {:.4} inside (3, t-3), {:.4} near 0, {:.4} near t",
            inside.trials, inside.estimate, low, high
        ),
    )
}

/// No step up by more than 3 combined SE, and the first rate significantly
/// above the last.
pub fn violation_trend(mode: &str, reports: &[ViolationReport]) -> Check {
    let rates: Vec<Rate> = reports.iter().map(|r| r.rate).collect();
    let rs: Vec<f64> = reports.iter().map(|r| r.r).collect();
    let no_rise = rates.windows(2).all(|w| {
        let se = w[0].se().hypot(w[1].se());
        w[1].estimate <= w[0].estimate + SE_MULTIPLE * se
    });
    let overall = match (rates.first(), rates.last()) {
        (Some(a), Some(b)) if rates.len() >= 2 => significantly_greater(a, b, TREND_LEVEL),
        _ => false,
    };
    Check::new(
        format!("{mode} violation fraction decreasing in r"),
        no_rise && overall,
        rates_text(&rs, &rates),
    )
}

pub fn tube_containment(r: f64, rate: &Rate) -> Check {
    Check::new(
        format!("tube containment at r={r}"),
        rate.estimate >= TUBE_CONTAINMENT_MIN,
        format!(
            "{:.4} of {} extremal particles inside (minimum {TUBE_CONTAINMENT_MIN})",
            rate.estimate, rate.trials
        ),
    )
}

pub fn local_finiteness(report: &TightnessReport) -> Check {
    let values = report
        .horizons
        .iter()
        .zip(&report.values)
        .map(|(t, v)| format!("t={t}: {v}"))
        .collect::<Vec<_>>()
        .join(", ");
    Check::new(
        "count quantile tight across horizons",
        report.tight(TIGHTNESS_MAX_VARIATION),
        format!(
            "{} quantile {values}; variation {:.3} (max {TIGHTNESS_MAX_VARIATION})",
            report.quantile, report.variation
        ),
    )
}

pub fn gibbs_two_point(masses: &OverlapMasses) -> Check {
    Check::new(
        "Gibbs overlap two-point law",
        masses.middle < GIBBS_MIDDLE_MAX && masses.near_zero > 0.0 && masses.near_one > 0.0,
        format!(
            "{} samples: mass {:.4} in ({GIBBS_LO}, {GIBBS_HI}), {:.4} near 0, {:.4} near 1",
            masses.samples, masses.middle, masses.near_zero, masses.near_one
        ),
    )
}

pub fn exceedance_formula(report: &ExceedanceReport) -> Check {
    Check::new(
        format!("exceedance count at x={:.4}", report.level),
        report.formula_within(SE_MULTIPLE),
        format!(
            "empirical {:.4} ± {:.4} vs formula {:.4} (z = {:.2}); exact first moment {:.4}",
            report.empirical.mean,
            report.empirical.se,
            report.formula,
            report.empirical.z_from(report.formula),
            report.first_moment
        ),
    )
}

/// `at_m / at_r > 1.5`: formula values at `m(t)` and `r(t)`.
pub fn exceedance_contrast(at_m: f64, at_r: f64) -> Check {
    Check::new(
        "exceedance formula at m(t) vs r(t)",
        at_m / at_r > EXCEEDANCE_RATIO_MIN,
        format!("{at_m:.4} / {at_r:.4} = {:.3} (minimum {EXCEEDANCE_RATIO_MIN})", at_m / at_r),
    )
}

pub fn front_speed(t: f64, speed: f64) -> Check {
    Check::new(
        format!("front speed at t={t}"),
        (speed - SQRT_2).abs() <= SPEED_TOLERANCE,
        format!("{speed:.5} vs sqrt2 = {SQRT_2:.5} (tolerance {SPEED_TOLERANCE})"),
    )
}

pub fn lag_slope(slope: f64, slope_se: f64) -> Check {
    let rel = (slope - LAG_SLOPE).abs() / LAG_SLOPE;
    Check::new(
        "front lag slope against log t",
        rel <= LAG_SLOPE_TOLERANCE,
        format!("{slope:.4} ± {slope_se:.4} vs {LAG_SLOPE:.4} (rel. error {rel:.3})"),
    )
}

pub fn wave_residual(sample: &FrontSample) -> Check {
    let res = sample.residual.unwrap_or(f64::INFINITY);
    Check::new(
        format!("wave equation residual at t={}", sample.t),
        res < WAVE_RESIDUAL_MAX,
        format!("{res:.3e} (maximum {WAVE_RESIDUAL_MAX:.0e})"),
    )
}

pub fn profile_convergence(t1: f64, t2: f64, distance: f64) -> Check {
    Check::new(
        format!("recentred profiles at t={t1} and t={t2}"),
        distance < PROFILE_DISTANCE_MAX,
        format!("sup distance {distance:.3e} (maximum {PROFILE_DISTANCE_MAX:.0e})"),
    )
}

/// Solver CDF against the Monte Carlo CDF of the maximum.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McKeanRow {
    pub x: f64,
    pub solver: f64,
    pub mc: Rate,
}

pub fn mckean(t: f64, rows: &[McKeanRow]) -> Check {
    let ok = rows
        .iter()
        .all(|r| (r.solver - r.mc.estimate).abs() <= SE_MULTIPLE * r.mc.se());
    let text = rows
        .iter()
        .map(|r| format!("x={}: u {:.5} mc {:.5}±{:.5}", r.x, r.solver, r.mc.estimate, r.mc.se()))
        .collect::<Vec<_>>()
        .join("; ");
    Check::new(format!("solver vs Monte Carlo max CDF at t={t}"), !rows.is_empty() && ok, text)
}

pub fn gaps_denser(report: &GapReport) -> Check {
    let rows: Vec<_> = report.rows.iter().take(GAP_RANKS).collect();
    let ok = rows.len() == GAP_RANKS && rows.iter().all(|r| r.denser_than_poisson(SE_MULTIPLE));
    let text = rows
        .iter()
        .map(|r| {
            format!(
                "n={}: bbm {:.4}±{:.4} poisson {:.4}±{:.4}",
                r.rank, r.bbm.mean, r.bbm.se, r.poisson.mean, r.poisson.se
            )
        })
        .collect::<Vec<_>>()
        .join("; ");
    Check::new("top gaps denser than Poisson", ok, format!("{text}; {} replicas skipped", report.skipped))
}

pub fn martingale_ks(t1: f64, t2: f64, p_value: f64, statistic: f64) -> Check {
    Check::new(
        format!("derivative martingale law at t={t1} vs t={t2}"),
        p_value > GOF_LEVEL,
        format!("KS D = {statistic:.4}, p = {p_value:.4}"),
    )
}

pub fn digests_match(label: &str, a: &[(String, String)], b: &[(String, String)]) -> Check {
    Check::new(
        format!("identical output digests ({label})"),
        !a.is_empty() && a == b,
        format!("{} files compared", a.len().max(b.len())),
    )
}
