//! Brownian-bridge barrier probabilities: the exact linear-barrier formula,
//! the window bound built on it, the concave-curve series bound, and Monte
//! Carlo estimators that check them from sampled paths.

use crate::envelope::Curve;
use crate::error::{invalid, Error, Result};
use crate::kernels::{uniform_steps, RngStream};

/// A straight barrier from `(0, left)` to `(length, right)` and a bridge from
/// `(0, start)` to `(length, end)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearBarrier {
    pub left: f64,
    pub right: f64,
    pub length: f64,
    pub start: f64,
    pub end: f64,
}

impl LinearBarrier {
    pub fn at(&self, s: f64) -> f64 {
        self.left + (self.right - self.left) * s / self.length
    }
}

/// Probability that the bridge stays strictly below the barrier:
/// `1 - exp(-2 (A - a)(B - b) / T)`, and 0 when either endpoint is not below.
pub fn bridge_below_line_exact(barrier: &LinearBarrier) -> Result<f64> {
    let LinearBarrier {
        left,
        right,
        length,
        start,
        end,
    } = *barrier;
    if !(length > 0.0) || !length.is_finite() {
        return Err(invalid(format!("bridge length must be positive, got {length}")));
    }
    if !(start < left && end < right) {
        return Ok(0.0);
    }
    let exponent = -2.0 * (left - start) * (right - end) / length;
    Ok(-exponent.exp_m1())
}

fn line_at_window_edges(z1: f64, z2: f64, r1: f64, r2: f64, t: f64) -> (f64, f64) {
    let zr1 = (1.0 - r1 / t) * z1 + r1 / t * z2;
    let zr2 = r2 / t * z1 + (1.0 - r2 / t) * z2;
    (zr1, zr2)
}

fn check_window_args(z1: f64, z2: f64, r1: f64, r2: f64, t: f64) -> Result<()> {
    if !(z1 >= 0.0 && z2 >= 0.0) {
        return Err(invalid(format!("barrier heights must be >= 0, got {z1}, {z2}")));
    }
    if !(r1 >= 0.0 && r2 >= 0.0) {
        return Err(invalid(format!("window margins must be >= 0, got {r1}, {r2}")));
    }
    if !(t > r1 + r2) || !t.is_finite() {
        return Err(invalid(format!("need t > r1 + r2, got t = {t}, r1 + r2 = {}", r1 + r2)));
    }
    Ok(())
}

/// Upper bound on the probability that a bridge of length `t` from 0 to 0
/// stays below the line from `z1` to `z2` on `[r1, t - r2]`:
/// `2/(t - r1 - r2) * (Z(r1) + sqrt r1)(Z(r2) + sqrt r2)`.
pub fn bridge_below_line_bound(z1: f64, z2: f64, r1: f64, r2: f64, t: f64) -> Result<f64> {
    check_window_args(z1, z2, r1, r2, t)?;
    let (zr1, zr2) = line_at_window_edges(z1, z2, r1, r2, t);
    Ok(2.0 / (t - r1 - r2) * (zr1 + r1.sqrt()) * (zr2 + r2.sqrt()))
}

/// Probability of the event bounded by [`bridge_below_line_bound`], computed
/// by integrating the exact linear-barrier formula against the joint law of
/// the bridge at `r1` and `t - r2`.
pub fn bridge_below_line_window(z1: f64, z2: f64, r1: f64, r2: f64, t: f64) -> Result<f64> {
    check_window_args(z1, z2, r1, r2, t)?;
    let (zr1, zr2) = line_at_window_edges(z1, z2, r1, r2, t);
    let inner_len = t - r1 - r2;
    let s2 = t - r2;
    let var1 = r1 * (t - r1) / t;
    let var2 = s2 * (t - s2) / t;
    let cov = r1 * (t - s2) / t;
    let avoid = |x1: f64, x2: f64| {
        bridge_below_line_exact(&LinearBarrier {
            left: zr1,
            right: zr2,
            length: inner_len,
            start: x1,
            end: x2,
        })
        .unwrap_or(0.0)
    };
    // x2 given x1 is Gaussian; integrate it out, then x1.
    let inner = |x1: f64| -> f64 {
        let (mu, var) = if var1 > 0.0 {
            (cov / var1 * x1, var2 - cov * cov / var1)
        } else {
            (0.0, var2)
        };
        if var <= 0.0 {
            return avoid(x1, mu);
        }
        gaussian_expectation_below(mu, var.sqrt(), zr2, |x2| avoid(x1, x2))
    };
    if var1 <= 0.0 {
        return Ok(inner(0.0));
    }
    Ok(gaussian_expectation_below(0.0, var1.sqrt(), zr1, inner))
}

/// `E[g(X) 1{X < upper}]` for `X ~ N(mu, sd^2)` by composite Simpson on
/// `[mu - 12 sd, upper]`.
fn gaussian_expectation_below(mu: f64, sd: f64, upper: f64, g: impl Fn(f64) -> f64) -> f64 {
    let lo = mu - 12.0 * sd;
    if upper <= lo {
        return 0.0;
    }
    let n = 400;
    let h = (upper - lo) / n as f64;
    let norm = 1.0 / (sd * (2.0 * std::f64::consts::PI).sqrt());
    let f = |x: f64| {
        let z = (x - mu) / sd;
        norm * (-0.5 * z * z).exp() * g(x)
    };
    let mut acc = f(lo) + f(upper);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(lo + k as f64 * h);
    }
    acc * h / 3.0
}

/// Terms beyond this many are not summed.
pub const SERIES_TERM_CAP: u64 = 10_000_000;

/// Lower bound `1 - 2 a C sum_{k >= r} k exp(-C k^delta)`, `delta = 2 eps - 1`,
/// on the probability that a bridge conditioned to stay positive on
/// `[r, t - r]` also stays below `C min(s, t - s)^eps` there.
///
/// The constant `a` is not known in closed form and is passed in. The bound
/// is asymptotic in `r` and is negative (vacuous) for small `r`.
pub fn concave_curve_stay_below_bound(c: f64, eps: f64, r: f64, a_const: f64) -> Result<f64> {
    if !(eps > 0.5) {
        return Err(invalid(format!("eps must exceed 1/2, got {eps}")));
    }
    if !(c > 0.0) || !c.is_finite() {
        return Err(invalid(format!("C must be positive, got {c}")));
    }
    if !(r >= 1.0) || !r.is_finite() {
        return Err(invalid(format!("r must be >= 1, got {r}")));
    }
    if !(a_const > 0.0) || !a_const.is_finite() {
        return Err(invalid(format!("a must be positive, got {a_const}")));
    }
    let delta = 2.0 * eps - 1.0;
    // terms k exp(-C k^delta) decrease once C delta k^delta >= 1
    let peak = (1.0 / (c * delta)).powf(1.0 / delta);
    let mut k = r.ceil() as u64;
    let mut sum = 0.0;
    for _ in 0..SERIES_TERM_CAP {
        let kf = k as f64;
        let term = kf * (-c * kf.powf(delta)).exp();
        sum += term;
        if term < 1e-16 && kf > peak {
            return Ok(1.0 - 2.0 * a_const * c * sum);
        }
        k += 1;
    }
    Err(Error::NonConvergence {
        terms: SERIES_TERM_CAP,
    })
}

/// Bernoulli mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Proportion {
    pub hits: u64,
    pub trials: u64,
}

impl Proportion {
    pub fn estimate(&self) -> f64 {
        if self.trials == 0 {
            f64::NAN
        } else {
            self.hits as f64 / self.trials as f64
        }
    }

    pub fn se(&self) -> f64 {
        let p = self.estimate();
        (p * (1.0 - p) / self.trials as f64).sqrt()
    }
}

/// Monte Carlo estimate of the linear-barrier avoidance probability.
///
/// Paths are monitored on the grid `grid_dt` (fine) and on every second
/// point (coarse). Discrete monitoring misses crossings between grid points
/// with a bias of order `sqrt(grid_dt)`, so the fine/coarse pair also gives
/// the extrapolation `(sqrt 2 p_fine - p_coarse) / (sqrt 2 - 1)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineMcEstimate {
    pub paths: u64,
    pub grid_dt: f64,
    pub fine: Proportion,
    pub coarse: Proportion,
    pub extrapolated: f64,
    pub extrapolated_se: f64,
}

impl LineMcEstimate {
    /// Change of the estimate between the coarse and the fine grid.
    pub fn refinement_shift(&self) -> f64 {
        self.fine.estimate() - self.coarse.estimate()
    }

    /// Refinement check: halving the grid moved the estimate by less than
    /// one standard error.
    pub fn refinement_within_se(&self) -> bool {
        self.refinement_shift().abs() < self.fine.se()
    }
}

/// Bridge increments on a uniform grid: `x_{k+1} = x_k + (end - x_k) drift_k
/// + sd_k Z`.
struct BridgeStepper {
    drift: Vec<f64>,
    sd: Vec<f64>,
}

impl BridgeStepper {
    fn new(length: f64, n: usize) -> Self {
        let h = length / n as f64;
        let mut drift = Vec::with_capacity(n);
        let mut sd = Vec::with_capacity(n);
        for k in 0..n {
            let remaining = length - k as f64 * h;
            let after = (remaining - h).max(0.0);
            drift.push(h / remaining);
            sd.push((h * after / remaining).sqrt());
        }
        Self { drift, sd }
    }
}

pub fn mc_bridge_below_line(
    barrier: &LinearBarrier,
    paths: u64,
    grid_dt: f64,
    rng: &mut RngStream,
) -> Result<LineMcEstimate> {
    let n = uniform_steps(barrier.length, grid_dt)?;
    if paths == 0 {
        return Err(invalid("need at least one path"));
    }
    let h = barrier.length / n as f64;
    let stepper = BridgeStepper::new(barrier.length, n);
    let line: Vec<f64> = (0..=n).map(|k| barrier.at(k as f64 * h)).collect();
    let root2 = std::f64::consts::SQRT_2;
    let weight = 1.0 / (root2 - 1.0);

    let endpoints_below = barrier.start < barrier.left && barrier.end < barrier.right;
    let mut fine_hits = 0u64;
    let mut coarse_hits = 0u64;
    let mut extra_sum = 0.0;
    let mut extra_sq = 0.0;
    for _ in 0..paths {
        let (mut fine_ok, mut coarse_ok) = (endpoints_below, endpoints_below);
        if endpoints_below {
            let mut x = barrier.start;
            for k in 0..n - 1 {
                x += (barrier.end - x) * stepper.drift[k] + stepper.sd[k] * rng.normal();
                if x >= line[k + 1] {
                    fine_ok = false;
                    if (k + 1) % 2 == 0 {
                        coarse_ok = false;
                        break;
                    }
                }
            }
        }
        fine_hits += fine_ok as u64;
        coarse_hits += coarse_ok as u64;
        let v = weight * (root2 * fine_ok as u8 as f64 - coarse_ok as u8 as f64);
        extra_sum += v;
        extra_sq += v * v;
    }
    let nf = paths as f64;
    let mean = extra_sum / nf;
    let var = (extra_sq / nf - mean * mean).max(0.0);
    Ok(LineMcEstimate {
        paths,
        grid_dt: h,
        fine: Proportion {
            hits: fine_hits,
            trials: paths,
        },
        coarse: Proportion {
            hits: coarse_hits,
            trials: paths,
        },
        extrapolated: mean,
        extrapolated_se: (var / nf).sqrt(),
    })
}

/// Conditional Monte Carlo estimate from rejection sampling.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConditionalEstimate {
    pub proposed: u64,
    pub conditional: Proportion,
}

impl ConditionalEstimate {
    pub fn estimate(&self) -> f64 {
        self.conditional.estimate()
    }

    pub fn se(&self) -> f64 {
        self.conditional.se()
    }
}

fn grid_indices_in(window: (f64, f64), h: f64, n: usize) -> (usize, usize) {
    let lo = ((window.0 / h) - 1e-9).ceil().max(0.0) as usize;
    let hi = (((window.1 / h) + 1e-9).floor() as usize).min(n);
    (lo, hi)
}

/// Bridges of length `t` from 0 to 0, conditioned to stay positive on
/// `[r, t - r]`; estimates the probability that they stay below
/// `C min(s, t - s)^eps` on the same window.
pub fn mc_concave_stay_below(
    t: f64,
    r: f64,
    c: f64,
    eps: f64,
    proposals: u64,
    grid_dt: f64,
    rng: &mut RngStream,
) -> Result<ConditionalEstimate> {
    if !(t > 2.0 * r) || !(r >= 0.0) {
        return Err(invalid(format!("need 0 <= r < t/2, got r = {r}, t = {t}")));
    }
    let ceiling = move |s: f64| c * s.min(t - s).max(0.0).powf(eps);
    let report = conditioned_bridge_counts(
        t,
        (r, t - r),
        proposals,
        grid_dt,
        rng,
        &[&|_s: f64| 0.0],
        &ceiling,
    )?;
    Ok(ConditionalEstimate {
        proposed: proposals,
        conditional: report[0],
    })
}

/// For each lower curve `l`, the counts of (bridge above `l` on the window,
/// and also below `ceiling` there), from shared proposals.
fn conditioned_bridge_counts(
    t: f64,
    window: (f64, f64),
    proposals: u64,
    grid_dt: f64,
    rng: &mut RngStream,
    lowers: &[&dyn Curve],
    ceiling: &dyn Curve,
) -> Result<Vec<Proportion>> {
    let n = uniform_steps(t, grid_dt)?;
    let h = t / n as f64;
    let (lo, hi) = grid_indices_in(window, h, n);
    let stepper = BridgeStepper::new(t, n);
    let lower_vals: Vec<Vec<f64>> = lowers
        .iter()
        .map(|l| (0..=n).map(|k| l.at(k as f64 * h)).collect())
        .collect();
    let ceil_vals: Vec<f64> = (0..=n).map(|k| ceiling.at(k as f64 * h)).collect();
    let mut out = vec![Proportion { hits: 0, trials: 0 }; lowers.len()];
    let mut above = vec![true; lowers.len()];
    for _ in 0..proposals {
        above.iter_mut().for_each(|a| *a = true);
        let mut below_ceiling = true;
        let mut x = 0.0;
        for k in 0..=n {
            if k > 0 {
                x = if k == n {
                    0.0
                } else {
                    x + (0.0 - x) * stepper.drift[k - 1] + stepper.sd[k - 1] * rng.normal()
                };
            }
            if k >= lo && k <= hi {
                for (j, vals) in lower_vals.iter().enumerate() {
                    if x <= vals[k] {
                        above[j] = false;
                    }
                }
                if x >= ceil_vals[k] {
                    below_ceiling = false;
                }
            }
        }
        for (j, p) in out.iter_mut().enumerate() {
            if above[j] {
                p.trials += 1;
                p.hits += below_ceiling as u64;
            }
        }
    }
    Ok(out)
}

/// Monte Carlo comparison of `P[below Lambda | above l1]` and
/// `P[below Lambda | above l2]` for `l1 <= l2 <= Lambda`; the first should
/// not be smaller.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MonotonicityReport {
    pub proposed: u64,
    pub given_lower: Proportion,
    pub given_upper: Proportion,
    /// `given_lower` falls short of `given_upper` by more than 3 combined SE.
    pub violation: bool,
}

#[allow(clippy::too_many_arguments)]
pub fn monotonicity_check(
    l1: &dyn Curve,
    l2: &dyn Curve,
    lambda: &dyn Curve,
    t: f64,
    window: (f64, f64),
    proposals: u64,
    grid_dt: f64,
    rng: &mut RngStream,
) -> Result<MonotonicityReport> {
    let n = uniform_steps(t, grid_dt)?;
    if !(window.0 >= 0.0 && window.0 <= window.1 && window.1 <= t) {
        return Err(invalid(format!("window [{}, {}] not inside [0, {t}]", window.0, window.1)));
    }
    let h = t / n as f64;
    for k in 0..=n {
        let s = k as f64 * h;
        let (a, b, c) = (l1.at(s), l2.at(s), lambda.at(s));
        if !(a <= b && b <= c) {
            return Err(invalid(format!(
                "curves must satisfy l1 <= l2 <= Lambda on the grid; violated at s = {s}"
            )));
        }
    }
    let counts = conditioned_bridge_counts(t, window, proposals, grid_dt, rng, &[l1, l2], lambda)?;
    let (given_lower, given_upper) = (counts[0], counts[1]);
    let violation = if given_lower.trials == 0 || given_upper.trials == 0 {
        false
    } else {
        let se = (given_lower.se().powi(2) + given_upper.se().powi(2)).sqrt();
        given_lower.estimate() < given_upper.estimate() - 3.0 * se
    };
    Ok(MonotonicityReport {
        proposed: proposals,
        given_lower,
        given_upper,
        violation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_formula_fixtures() {
        let b = LinearBarrier {
            left: 2.0,
            right: 2.0,
            length: 4.0,
            start: 0.0,
            end: 0.0,
        };
        assert!((bridge_below_line_exact(&b).unwrap() - (1.0 - (-2f64).exp())).abs() < 1e-15);
        assert!((bridge_below_line_exact(&b).unwrap() - 0.864_664_716_763_387_3).abs() < 1e-12);
        let touching = LinearBarrier { start: 2.0, ..b };
        assert_eq!(bridge_below_line_exact(&touching).unwrap(), 0.0);
        let above = LinearBarrier { end: 3.0, ..b };
        assert_eq!(bridge_below_line_exact(&above).unwrap(), 0.0);
        let bad = LinearBarrier { length: 0.0, ..b };
        assert!(bridge_below_line_exact(&bad).is_err());
        let spec_case = LinearBarrier {
            left: 1.0,
            right: 3.0,
            length: 10.0,
            start: 0.0,
            end: 0.0,
        };
        assert!((bridge_below_line_exact(&spec_case).unwrap() - 0.451_188_363_905_973_6).abs() < 1e-12);
    }

    #[test]
    fn exact_formula_reflection_symmetry() {
        let a = LinearBarrier {
            left: 1.3,
            right: 0.4,
            length: 3.0,
            start: -0.2,
            end: -1.0,
        };
        // swap the roles of the two endpoint gaps
        let b = LinearBarrier {
            left: 1.4,
            right: 1.5,
            length: 3.0,
            start: 0.0,
            end: 0.0,
        };
        assert!((bridge_below_line_exact(&a).unwrap() - bridge_below_line_exact(&b).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn window_bound_values() {
        assert!((bridge_below_line_bound(1.0, 1.0, 0.0, 0.0, 10.0).unwrap() - 0.2).abs() < 1e-15);
        let b10 = bridge_below_line_bound(1.5, 0.7, 0.0, 0.0, 10.0).unwrap();
        let b20 = bridge_below_line_bound(1.5, 0.7, 0.0, 0.0, 20.0).unwrap();
        let ratio = b20 / b10;
        assert!((0.45..=0.55).contains(&ratio));
        assert!(bridge_below_line_bound(1.0, 1.0, 5.0, 5.0, 10.0).is_err());
        assert!(bridge_below_line_bound(-1.0, 1.0, 0.0, 0.0, 10.0).is_err());
    }

    #[test]
    fn window_probability_reduces_to_exact_at_zero_margins() {
        let p = bridge_below_line_window(1.2, 0.8, 0.0, 0.0, 7.0).unwrap();
        let exact = 1.0 - (-2.0 * 1.2 * 0.8 / 7.0f64).exp();
        assert!((p - exact).abs() < 1e-12);
    }

    #[test]
    fn series_bound_direct_sum() {
        // sum_{k >= 10} k exp(-sqrt k), summed directly to 2e6 terms: 7.544816273851...
        let bound = concave_curve_stay_below_bound(1.0, 0.75, 10.0, 1.0).unwrap();
        assert!((bound - (1.0 - 2.0 * 7.544_816_273_851_823)).abs() < 1e-8, "{bound}");
        let mut prev = f64::NEG_INFINITY;
        for r in [1.0, 5.0, 10.0, 50.0, 200.0, 1000.0] {
            let b = concave_curve_stay_below_bound(1.0, 0.75, r, 1.0).unwrap();
            assert!(b >= prev);
            prev = b;
        }
        assert!(prev > 0.999_999);
        assert!(concave_curve_stay_below_bound(1.0, 0.5, 10.0, 1.0).is_err());
        assert!(concave_curve_stay_below_bound(1.0, 0.75, 0.5, 1.0).is_err());
    }

    #[test]
    fn series_cap_reports_nonconvergence() {
        let err = concave_curve_stay_below_bound(1e-9, 0.51, 1.0, 1.0).unwrap_err();
        assert_eq!(err, Error::NonConvergence { terms: SERIES_TERM_CAP });
    }

    #[test]
    fn monotonicity_rejects_misordered_curves() {
        let mut rng = RngStream::new(1, 0);
        let err = monotonicity_check(
            &|_s: f64| 0.0,
            &|_s: f64| -1.0,
            &|_s: f64| 2.0,
            10.0,
            (1.0, 9.0),
            10,
            0.1,
            &mut rng,
        );
        assert!(err.is_err());
    }
}
