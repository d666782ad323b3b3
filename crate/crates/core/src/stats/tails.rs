//! Right tail of the recentred maximum.

use serde::{Deserialize, Serialize};

use super::inference::{linear_fit, normal_sf, LinearFit, Z95};
use crate::error::{Error, Result};

const SQRT_2: f64 = std::f64::consts::SQRT_2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailConfig {
    /// Regression window for `log((1 - F(x)) / x)`.
    pub fit_lo: f64,
    pub fit_hi: f64,
    pub fit_step: f64,
    /// Threshold above which the two tail models are compared.
    pub compare_from: f64,
    pub min_tail: usize,
}

impl Default for TailConfig {
    fn default() -> Self {
        Self {
            fit_lo: 0.5,
            fit_hi: 2.5,
            fit_step: 0.1,
            compare_from: 1.0,
            min_tail: 100,
        }
    }
}

/// Likelihood comparison of the conditional tail laws above `x0`:
/// `P[X > x] ∝ e^{-sqrt2 x}` against `P[X > x] ∝ x e^{-sqrt2 x}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailComparison {
    pub threshold: f64,
    pub samples: usize,
    pub loglik_exponential: f64,
    pub loglik_linear_exponential: f64,
    /// Vuong statistic; positive favours `x e^{-sqrt2 x}`.
    pub z: f64,
    pub p_value: f64,
}

impl TailComparison {
    pub fn exponential_rejected(&self, level: f64) -> bool {
        self.p_value < level
    }
}

/// Consistency of the empirical tail with `kappa (1 + Y)^2 e^{-sqrt2 Y}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub kappa: f64,
    pub levels: Vec<f64>,
    pub empirical: Vec<f64>,
    pub bound: Vec<f64>,
    /// Every level satisfies `P_hat - 3 SE <= bound`.
    pub consistent: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub samples: usize,
    pub xs: Vec<f64>,
    pub survival: Vec<f64>,
    pub fit: LinearFit,
    pub slope_ci: (f64, f64),
    pub comparison: TailComparison,
    pub bound: BoundCheck,
}

impl TailReport {
    pub fn slope_relative_error(&self) -> f64 {
        (self.fit.slope + SQRT_2).abs() / SQRT_2
    }
}

fn survival(sorted: &[f64], x: f64) -> f64 {
    let above = sorted.len() - sorted.partition_point(|v| *v <= x);
    above as f64 / sorted.len() as f64
}

pub fn compare_tail_models(recentred: &[f64], x0: f64) -> Result<TailComparison> {
    if SQRT_2 * x0 <= 1.0 {
        return Err(Error::InvalidArgument(format!(
            "x e^(-sqrt2 x) is only a tail for x > 1/sqrt2; threshold {x0} too low"
        )));
    }
    let tail: Vec<f64> = recentred.iter().copied().filter(|&x| x > x0).collect();
    if tail.len() < 10 {
        return Err(Error::InsufficientData(format!("only {} samples above {x0}", tail.len())));
    }
    // conditional log-densities above x0
    let ratios: Vec<f64> = tail
        .iter()
        .map(|&x| {
            let exp = SQRT_2.ln() - SQRT_2 * (x - x0);
            let lin = (SQRT_2 * x - 1.0).ln() - SQRT_2 * (x - x0) - x0.ln();
            (exp, lin)
        })
        .map(|(a, b)| b - a)
        .collect();
    let n = ratios.len() as f64;
    let mean = ratios.iter().sum::<f64>() / n;
    let sd = (ratios.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let z = n.sqrt() * mean / sd;
    let ll_exp = tail.iter().map(|&x| SQRT_2.ln() - SQRT_2 * (x - x0)).sum();
    Ok(TailComparison {
        threshold: x0,
        samples: tail.len(),
        loglik_exponential: ll_exp,
        loglik_linear_exponential: ll_exp + ratios.iter().sum::<f64>(),
        z,
        p_value: normal_sf(z),
    })
}

/// Fits `kappa` on the levels `Y <= sqrt(t)/2` (largest empirical ratio to
/// the bound shape) and checks the bound on all levels `0 <= Y < sqrt(t)`.
pub fn bound_check(recentred: &[f64], t: f64) -> BoundCheck {
    let mut sorted = recentred.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let shape = |y: f64| (1.0 + y).powi(2) * (-SQRT_2 * y).exp();
    let levels: Vec<f64> = (0..).map(|i| i as f64 * 0.25).take_while(|y| *y < t.sqrt()).collect();
    let empirical: Vec<f64> = levels.iter().map(|&y| survival(&sorted, y)).collect();
    let kappa = levels
        .iter()
        .zip(&empirical)
        .filter(|(y, _)| **y <= t.sqrt() / 2.0)
        .map(|(&y, &p)| p / shape(y))
        .fold(0.0, f64::max);
    let bound: Vec<f64> = levels.iter().map(|&y| kappa * shape(y)).collect();
    let consistent = empirical
        .iter()
        .zip(&bound)
        .all(|(&p, &b)| p - 3.0 * (p * (1.0 - p) / n).sqrt() <= b);
    BoundCheck {
        kappa,
        levels,
        empirical,
        bound,
        consistent,
    }
}

/// Empirical tail of `max_k x_k(t) - m(t)` with the regression of
/// `log((1 - F(x)) / x)` on `x` over the fit window.
pub fn max_law_tail(recentred: &[f64], t: f64, cfg: &TailConfig) -> Result<TailReport> {
    let mut sorted = recentred.to_vec();
    sorted.sort_by(f64::total_cmp);
    let beyond = sorted.len() - sorted.partition_point(|v| *v <= cfg.fit_lo);
    if beyond < cfg.min_tail {
        return Err(Error::InsufficientData(format!(
            "{beyond} maxima beyond {} (need {})",
            cfg.fit_lo, cfg.min_tail
        )));
    }
    let steps = ((cfg.fit_hi - cfg.fit_lo) / cfg.fit_step).round() as usize;
    let (mut xs, mut surv, mut ys) = (Vec::new(), Vec::new(), Vec::new());
    for i in 0..=steps {
        let x = cfg.fit_lo + i as f64 * cfg.fit_step;
        let s = survival(&sorted, x);
        if s > 0.0 {
            xs.push(x);
            surv.push(s);
            ys.push((s / x).ln());
        }
    }
    let fit = linear_fit(&xs, &ys)?;
    Ok(TailReport {
        samples: sorted.len(),
        slope_ci: (fit.slope - Z95 * fit.slope_se, fit.slope + Z95 * fit.slope_se),
        xs,
        survival: surv,
        fit,
        comparison: compare_tail_models(&sorted, cfg.compare_from)?,
        bound: bound_check(&sorted, t),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::RngStream;

    /// Inverse of `x e^{-sqrt2 x} / (x0 e^{-sqrt2 x0})` by bisection.
    fn sample_linear_exponential(rng: &mut RngStream, x0: f64) -> f64 {
        let target = rng.uniform().max(1e-300).ln();
        let log_s = |x: f64| (x / x0).ln() - SQRT_2 * (x - x0);
        let (mut lo, mut hi) = (x0, x0 + 60.0);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if log_s(mid) > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn model_comparison_picks_the_right_law() {
        let mut rng = RngStream::new(3, 0);
        let lin: Vec<f64> = (0..4000).map(|_| sample_linear_exponential(&mut rng, 1.0)).collect();
        let exp: Vec<f64> = (0..4000).map(|_| 1.0 + rng.exp1() / SQRT_2).collect();
        assert!(compare_tail_models(&lin, 1.0).unwrap().exponential_rejected(0.01));
        let c = compare_tail_models(&exp, 1.0).unwrap();
        assert!(c.z < 0.0);
        assert!(compare_tail_models(&lin, 0.5).is_err());
    }

    #[test]
    fn regression_recovers_exponential_slope() {
        // pure exponential tail e^{-sqrt2 x}: log(S/x) = -sqrt2 x - log x
        let mut rng = RngStream::new(5, 0);
        let xs: Vec<f64> = (0..200_000).map(|_| rng.exp1() / SQRT_2).collect();
        let r = max_law_tail(&xs, 12.0, &TailConfig::default()).unwrap();
        // slope of -sqrt2 x - log x over [0.5, 2.5] by least squares
        let grid: Vec<f64> = (0..=20).map(|i| 0.5 + 0.1 * i as f64).collect();
        let ys: Vec<f64> = grid.iter().map(|x| -SQRT_2 * x - x.ln()).collect();
        let expect = linear_fit(&grid, &ys).unwrap().slope;
        assert!((r.fit.slope - expect).abs() < 0.05, "{} vs {expect}", r.fit.slope);
        assert!(r.bound.consistent);
    }

    #[test]
    fn too_few_tail_samples() {
        let xs = vec![0.0; 1000];
        assert!(matches!(
            max_law_tail(&xs, 12.0, &TailConfig::default()),
            Err(Error::InsufficientData(_))
        ));
    }
}
