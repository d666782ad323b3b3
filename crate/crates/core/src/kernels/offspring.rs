use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Largest supported offspring count.
pub const MAX_OFFSPRING: usize = 64;

const LAW_TOLERANCE: f64 = 1e-12;

/// Offspring distribution `p_k`, `k = 1..=k_max`.
///
/// The law must have total mass one and mean exactly two, so that the
/// expected population grows like `e^t`. Laws with another mean are
/// rejected, not rescaled.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct OffspringLaw {
    // probs[k - 1] = p_k
    probs: Vec<f64>,
    cumulative: Vec<f64>,
}

impl OffspringLaw {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(invalid("offspring law must have at least one entry"));
        }
        if probs.len() > MAX_OFFSPRING {
            return Err(invalid(format!(
                "offspring law support k_max = {} exceeds the cap of {MAX_OFFSPRING}",
                probs.len()
            )));
        }
        if let Some((i, p)) = probs
            .iter()
            .enumerate()
            .find(|(_, p)| !p.is_finite() || **p < 0.0 || **p > 1.0)
        {
            return Err(invalid(format!("p_{} = {p} is not a probability", i + 1)));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > LAW_TOLERANCE {
            return Err(invalid(format!(
                "offspring probabilities sum to {total}, must sum to 1"
            )));
        }
        let mean: f64 = probs
            .iter()
            .enumerate()
            .map(|(i, p)| (i + 1) as f64 * p)
            .sum();
        if (mean - 2.0).abs() > LAW_TOLERANCE {
            return Err(invalid(format!(
                "offspring law must satisfy sum k*p_k = 2 (mean offspring normalization), got {mean}"
            )));
        }
        let mut cumulative = Vec::with_capacity(probs.len());
        let mut acc = 0.0;
        for p in &probs {
            acc += p;
            cumulative.push(acc);
        }
        // guard the last bucket against rounding in the running sum
        *cumulative.last_mut().unwrap() = f64::INFINITY;
        Ok(Self { probs, cumulative })
    }

    /// Strict binary branching, `p_2 = 1`.
    pub fn binary() -> Self {
        Self::new(vec![0.0, 1.0]).expect("binary law is valid")
    }

    /// Parses `binary` or a list of `k:p` pairs such as `1:0.5,3:0.5`.
    pub fn parse(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        if spec.eq_ignore_ascii_case("binary") {
            return Ok(Self::binary());
        }
        let mut probs = Vec::new();
        for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (k, p) = item
                .split_once(':')
                .ok_or_else(|| invalid(format!("offspring entry `{item}` is not of the form k:p")))?;
            let k: usize = k
                .trim()
                .parse()
                .map_err(|_| invalid(format!("offspring count `{k}` is not an integer")))?;
            let p: f64 = p
                .trim()
                .parse()
                .map_err(|_| invalid(format!("offspring probability `{p}` is not a number")))?;
            if k == 0 {
                return Err(invalid("offspring counts start at k = 1"));
            }
            if k > MAX_OFFSPRING {
                return Err(invalid(format!(
                    "offspring count {k} exceeds the cap of {MAX_OFFSPRING}"
                )));
            }
            if probs.len() < k {
                probs.resize(k, 0.0);
            }
            probs[k - 1] += p;
        }
        Self::new(probs)
    }

    pub fn k_max(&self) -> usize {
        self.probs.len()
    }

    /// `p_k`, zero outside the support.
    pub fn p(&self, k: usize) -> f64 {
        if k == 0 || k > self.probs.len() {
            0.0
        } else {
            self.probs[k - 1]
        }
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    pub fn mean(&self) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(i, p)| (i + 1) as f64 * p)
            .sum()
    }

    /// Second factorial moment `K = sum k(k-1) p_k`.
    pub fn factorial_moment(&self) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let k = (i + 1) as f64;
                k * (k - 1.0) * p
            })
            .sum()
    }

    pub fn is_binary(&self) -> bool {
        self.p(2) == 1.0
    }

    /// Generating function `sum p_k u^k`.
    pub fn generating(&self, u: f64) -> f64 {
        self.probs.iter().rev().fold(0.0, |acc, p| (acc + p) * u)
    }

    /// F-KPP reaction term `sum p_k u^k - u`.
    pub fn reaction(&self, u: f64) -> f64 {
        self.generating(u) - u
    }

    /// Smallest `k` with `P[count <= k] > u`, for `u` uniform on [0, 1).
    pub(crate) fn quantile(&self, u: f64) -> usize {
        self.cumulative.partition_point(|c| *c <= u) + 1
    }

    /// Canonical text form accepted by [`OffspringLaw::parse`].
    pub fn to_spec(&self) -> String {
        if self.is_binary() {
            return "binary".to_string();
        }
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, p)| **p > 0.0)
            .map(|(i, p)| format!("{}:{}", i + 1, p))
            .collect::<Vec<_>>()
            .join(",")
    }
}

impl TryFrom<Vec<f64>> for OffspringLaw {
    type Error = crate::error::Error;

    fn try_from(probs: Vec<f64>) -> Result<Self> {
        Self::new(probs)
    }
}

impl From<OffspringLaw> for Vec<f64> {
    fn from(law: OffspringLaw) -> Self {
        law.probs
    }
}
