//! Interval estimates and the handful of classical tests the estimators need.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Upper tail of the standard normal.
pub fn normal_sf(z: f64) -> f64 {
    0.5 * erfc(z / std::f64::consts::SQRT_2)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn overlaps(&self, other: &Interval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

/// Binomial rate with its Wilson score interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rate {
    pub hits: u64,
    pub trials: u64,
    pub estimate: f64,
    pub ci: Interval,
}

impl Rate {
    pub fn new(hits: u64, trials: u64) -> Self {
        let estimate = if trials == 0 { 0.0 } else { hits as f64 / trials as f64 };
        Self {
            hits,
            trials,
            estimate,
            ci: wilson_interval(hits, trials, Z95),
        }
    }

    pub fn se(&self) -> f64 {
        if self.trials == 0 {
            return 0.0;
        }
        (self.estimate * (1.0 - self.estimate) / self.trials as f64).sqrt()
    }
}

pub fn wilson_interval(hits: u64, trials: u64, z: f64) -> Interval {
    if trials == 0 {
        return Interval { lo: 0.0, hi: 1.0 };
    }
    let n = trials as f64;
    let p = hits as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    Interval {
        lo: if hits == 0 { 0.0 } else { (centre - half).max(0.0) },
        hi: if hits == trials { 1.0 } else { (centre + half).min(1.0) },
    }
}

/// One-sided p-value for `p_a > p_b` from the pooled two-proportion z-test.
pub fn two_proportion_greater(a: &Rate, b: &Rate) -> f64 {
    let (na, nb) = (a.trials as f64, b.trials as f64);
    if na == 0.0 || nb == 0.0 {
        return 1.0;
    }
    let pooled = (a.hits + b.hits) as f64 / (na + nb);
    let se = (pooled * (1.0 - pooled) * (1.0 / na + 1.0 / nb)).sqrt();
    if se == 0.0 {
        return if a.estimate > b.estimate { 0.0 } else { 1.0 };
    }
    normal_sf((a.estimate - b.estimate) / se)
}

/// `a` is significantly above `b`: disjoint Wilson intervals, or a one-sided
/// z-test below `level`.
pub fn significantly_greater(a: &Rate, b: &Rate, level: f64) -> bool {
    a.estimate > b.estimate && (a.ci.lo > b.ci.hi || two_proportion_greater(a, b) < level)
}

/// Sequence strictly decreasing, each step significant.
pub fn strictly_decreasing(rates: &[Rate], level: f64) -> bool {
    rates.windows(2).all(|w| significantly_greater(&w[0], &w[1], level))
}

/// Sample mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanEstimate {
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
    pub se: f64,
}

impl MeanEstimate {
    pub fn from_slice(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self {
                n,
                mean: f64::NAN,
                sd: f64::NAN,
                se: f64::NAN,
            };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        Self {
            n,
            mean,
            sd: var.sqrt(),
            se: (var / n as f64).sqrt(),
        }
    }

    /// `|mean - target|` in standard errors.
    pub fn z_from(&self, target: f64) -> f64 {
        (self.mean - target).abs() / self.se
    }
}

/// Sample covariance of paired observations with a delta-method standard
/// error (variance of the centred products).
pub fn covariance(xs: &[f64], ys: &[f64]) -> MeanEstimate {
    let mx = xs.iter().sum::<f64>() / xs.len() as f64;
    let my = ys.iter().sum::<f64>() / ys.len() as f64;
    let prods: Vec<f64> = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).collect();
    let mut est = MeanEstimate::from_slice(&prods);
    let n = xs.len() as f64;
    est.mean *= n / (n - 1.0);
    est
}

pub fn correlation(xs: &[f64], ys: &[f64]) -> f64 {
    let c = covariance(xs, ys).mean;
    let vx = covariance(xs, xs).mean;
    let vy = covariance(ys, ys).mean;
    c / (vx * vy).sqrt()
}

/// Nearest-rank quantile: the `ceil(q n)`-th smallest value.
pub fn quantile_nearest_rank(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty() && (0.0..=1.0).contains(&q));
    let rank = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Asymptotic Kolmogorov distribution tail `P[K > lambda]`.
fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=200 {
        let term = sign * (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += term;
        if term.abs() < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Two-sample Kolmogorov-Smirnov test with the small-sample corrected
/// asymptotic p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<TestResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InsufficientData("KS test needs two non-empty samples".into()));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let en = (na * nb / (na + nb)).sqrt();
    let p = kolmogorov_sf((en + 0.12 + 0.11 / en) * d);
    Ok(TestResult {
        statistic: d,
        p_value: p,
    })
}

/// Pearson goodness-of-fit on counts against cell probabilities.
///
/// Cells are pooled left to right until each pooled cell expects at least
/// five observations; the last partial pool joins the previous cell.
/// `probs` may leave out tail mass; it is added as a final cell.
pub fn chi_square_gof(observed: &[u64], probs: &[f64]) -> Result<TestResult> {
    if observed.len() != probs.len() {
        return Err(Error::InvalidArgument("observed and probabilities differ in length".into()));
    }
    let n: u64 = observed.iter().sum();
    if n == 0 {
        return Err(Error::InsufficientData("chi-square test needs observations".into()));
    }
    let n = n as f64;
    let mut cells: Vec<(f64, f64)> = observed.iter().zip(probs).map(|(&o, &p)| (o as f64, p * n)).collect();
    let rest = (1.0 - probs.iter().sum::<f64>()).max(0.0);
    if rest * n > 1e-9 {
        cells.push((0.0, rest * n));
    }
    let mut pooled: Vec<(f64, f64)> = Vec::new();
    let mut acc = (0.0, 0.0);
    for c in cells {
        acc.0 += c.0;
        acc.1 += c.1;
        if acc.1 >= 5.0 {
            pooled.push(acc);
            acc = (0.0, 0.0);
        }
    }
    if acc.1 > 0.0 || acc.0 > 0.0 {
        match pooled.last_mut() {
            Some(last) => {
                last.0 += acc.0;
                last.1 += acc.1;
            }
            None => pooled.push(acc),
        }
    }
    if pooled.len() < 2 {
        return Err(Error::InsufficientData("chi-square test needs at least two pooled cells".into()));
    }
    let stat: f64 = pooled.iter().map(|(o, e)| (o - e).powi(2) / e).sum();
    let dof = (pooled.len() - 1) as f64;
    let p = ChiSquared::new(dof).expect("positive dof").sf(stat);
    Ok(TestResult {
        statistic: stat,
        p_value: p,
    })
}

/// Ordinary least squares `y = a + b x`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub intercept: f64,
    pub slope: f64,
    pub slope_se: f64,
    pub points: usize,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    let n = xs.len();
    if n < 3 || ys.len() != n {
        return Err(Error::InsufficientData("regression needs at least three points".into()));
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("regression abscissae are all equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    Ok(LinearFit {
        intercept,
        slope,
        slope_se: (rss / (nf - 2.0) / sxx).sqrt(),
        points: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_reference_values() {
        // statsmodels proportion_confint(20, 100, method="wilson")
        let ci = wilson_interval(20, 100, Z95);
        assert!((ci.lo - 0.133367).abs() < 1e-6);
        assert!((ci.hi - 0.288829).abs() < 1e-6);
        let zero = wilson_interval(0, 50, Z95);
        assert_eq!(zero.lo, 0.0);
        assert!(zero.hi > 0.0 && zero.hi < 0.08);
    }

    #[test]
    fn ks_reference_values() {
        // scipy.stats.ks_2samp on these samples: D = 0.75
        let a = [0.1, 0.2, 0.3, 0.4];
        let b = [0.35, 0.45, 0.55, 0.65];
        let r = ks_two_sample(&a, &b).unwrap();
        assert!((r.statistic - 0.75).abs() < 1e-12);
        let same = ks_two_sample(&a, &a).unwrap();
        assert_eq!(same.statistic, 0.0);
        assert_eq!(same.p_value, 1.0);
    }

    #[test]
    fn kolmogorov_tail_reference() {
        // P[K > 1.36] ~ 0.0494 (the classic 5% critical value)
        assert!((kolmogorov_sf(1.358) - 0.05).abs() < 1e-3);
    }

    #[test]
    fn chi_square_reference() {
        // scipy.stats.chisquare([18, 22, 20, 40], [25, 25, 25, 25]) -> 12.32, p = 0.00636
        let r = chi_square_gof(&[18, 22, 20, 40], &[0.25; 4]).unwrap();
        assert!((r.statistic - 12.32).abs() < 1e-9);
        assert!((r.p_value - 0.006363).abs() < 1e-5);
    }

    #[test]
    fn z_test_direction() {
        let hi = Rate::new(300, 1000);
        let lo = Rate::new(200, 1000);
        assert!(two_proportion_greater(&hi, &lo) < 1e-6);
        assert!(two_proportion_greater(&lo, &hi) > 0.99);
        assert!(strictly_decreasing(&[hi, lo, Rate::new(100, 1000)], 0.05));
        assert!(!strictly_decreasing(&[hi, Rate::new(295, 1000)], 0.05));
    }

    #[test]
    fn regression_recovers_line() {
        let xs: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 1.5 - 2.0 * x).collect();
        let fit = linear_fit(&xs, &ys).unwrap();
        assert!((fit.slope + 2.0).abs() < 1e-12);
        assert!((fit.intercept - 1.5).abs() < 1e-12);
    }

    #[test]
    fn nearest_rank() {
        let xs: Vec<f64> = (1..=100).map(|i| i as f64).collect();
        assert_eq!(quantile_nearest_rank(&xs, 0.99), 99.0);
        assert_eq!(quantile_nearest_rank(&xs, 1.0), 100.0);
        assert_eq!(quantile_nearest_rank(&xs, 0.0), 1.0);
    }
}
