//! Population size, exceedance counts and local finiteness of the extremal
//! process.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use super::inference::{quantile_nearest_rank, MeanEstimate};
use crate::error::{invalid, Result};

/// `P[n(t) = k] = e^{-t} (1 - e^{-t})^{k-1}` for binary branching (Yule).
pub fn pure_birth_pmf(t: f64, k: u64) -> f64 {
    if k == 0 {
        return 0.0;
    }
    let q = -(-t).exp_m1();
    (-t).exp() * q.powi((k - 1) as i32)
}

/// Leading-order mean number of particles above `x`,
/// `e^t / sqrt(2 pi t) exp(-x^2 / 2t)`.
pub fn exceedance_formula(t: f64, x: f64) -> f64 {
    (t - x * x / (2.0 * t)).exp() / (2.0 * std::f64::consts::PI * t).sqrt()
}

/// Exact first moment `E #{i: x_i(t) > x} = e^t P[N(0, t) > x]`.
pub fn exceedance_first_moment(t: f64, x: f64) -> f64 {
    t.exp() * 0.5 * erfc(x / (2.0 * t).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExceedanceReport {
    pub level: f64,
    pub empirical: MeanEstimate,
    pub formula: f64,
    pub first_moment: f64,
}

impl ExceedanceReport {
    pub fn formula_within(&self, k_se: f64) -> bool {
        (self.empirical.mean - self.formula).abs() <= k_se * self.empirical.se
    }
}

pub fn exceedance_counts(t: f64, level: f64, counts: &[u64]) -> ExceedanceReport {
    let xs: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    ExceedanceReport {
        level,
        empirical: MeanEstimate::from_slice(&xs),
        formula: exceedance_formula(t, level),
        first_moment: exceedance_first_moment(t, level),
    }
}

/// `N -> P[count >= N]` for `N = 0..=max(count) + 1`.
pub fn local_finiteness_curve(counts: &[u64]) -> Vec<(u64, f64)> {
    let top = counts.iter().copied().max().unwrap_or(0);
    let n = counts.len().max(1) as f64;
    let mut hist = vec![0u64; top as usize + 2];
    for &c in counts {
        hist[c as usize] += 1;
    }
    let mut tail = 0u64;
    let mut out: Vec<(u64, f64)> = (0..=top + 1)
        .rev()
        .map(|k| {
            tail += hist[k as usize];
            (k, tail as f64 / n)
        })
        .collect();
    out.reverse();
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TightnessReport {
    pub horizons: Vec<f64>,
    pub quantile: f64,
    pub values: Vec<f64>,
    /// `max / min - 1` over horizons.
    pub variation: f64,
}

impl TightnessReport {
    pub fn tight(&self, tolerance: f64) -> bool {
        self.variation < tolerance
    }
}

/// Compares the `q`-quantile of the counts across horizons.
pub fn tightness(horizons: &[f64], counts: &[Vec<u64>], q: f64) -> Result<TightnessReport> {
    if horizons.len() < 2 || horizons.len() != counts.len() {
        return Err(invalid("tightness needs counts at two or more horizons"));
    }
    let values: Vec<f64> = counts
        .iter()
        .map(|c| {
            let mut xs: Vec<f64> = c.iter().map(|&v| v as f64).collect();
            if xs.is_empty() {
                return Err(invalid("no replicas at one horizon"));
            }
            xs.sort_by(f64::total_cmp);
            Ok(quantile_nearest_rank(&xs, q))
        })
        .collect::<Result<_>>()?;
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(TightnessReport {
        horizons: horizons.to_vec(),
        quantile: q,
        variation: if lo > 0.0 { hi / lo - 1.0 } else { f64::INFINITY },
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pmf_sums_to_one() {
        let s: f64 = (1..2000).map(|k| pure_birth_pmf(2.0, k)).sum();
        assert!((s - 1.0).abs() < 1e-12);
        let mean: f64 = (1..4000).map(|k| k as f64 * pure_birth_pmf(2.0, k)).sum();
        assert!((mean - 2f64.exp()).abs() < 1e-9);
    }

    #[test]
    fn formula_reference_values() {
        let sqrt2 = std::f64::consts::SQRT_2;
        let m10 = 11.699_875_323_458_231;
        let r10 = 13.328_048_856_973_378;
        assert!((exceedance_formula(10.0, r10) - 0.38594).abs() < 1e-4);
        assert!((exceedance_formula(10.0, m10) - 2.96067).abs() < 1e-4);
        assert!((exceedance_formula(10.0, sqrt2 * 10.0 - 3.0) - 5.598).abs() < 1e-3);
        assert!((exceedance_first_moment(10.0, sqrt2 * 10.0 - 3.0) - 4.6912).abs() < 1e-3);
    }

    #[test]
    fn curve_edges() {
        let c = local_finiteness_curve(&[0, 0, 1, 3]);
        assert_eq!(c[0], (0, 1.0));
        assert_eq!(c[1], (1, 0.5));
        assert_eq!(c[2], (2, 0.25));
        assert_eq!(c[4], (4, 0.0));
        let empty = local_finiteness_curve(&[0, 0]);
        assert_eq!(empty, vec![(0, 1.0), (1, 0.0)]);
    }

    #[test]
    fn tightness_variation() {
        let a: Vec<u64> = (0..100).collect();
        let b: Vec<u64> = (0..100).map(|v| v * 2).collect();
        let r = tightness(&[1.0, 2.0], &[a, b], 0.99).unwrap();
        assert_eq!(r.values, vec![98.0, 196.0]);
        assert!((r.variation - 1.0).abs() < 1e-12);
        assert!(!r.tight(0.5));
    }
}
