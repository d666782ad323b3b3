use crate::error::{invalid, Result};

/// Trajectory of one ancestral line sampled at checkpoint times.
///
/// Times are strictly increasing. Paths extracted from a genealogy tree sit
/// on the uniform grid `k * grid_dt` plus the horizon itself when the horizon
/// is not a grid multiple.
#[derive(Clone, Debug, PartialEq)]
pub struct ParticlePath {
    times: Vec<f64>,
    positions: Vec<f64>,
}

impl ParticlePath {
    pub fn new(times: Vec<f64>, positions: Vec<f64>) -> Result<Self> {
        if times.len() != positions.len() {
            return Err(invalid("path times and positions differ in length"));
        }
        if times.is_empty() {
            return Err(invalid("path must have at least one checkpoint"));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("path times must be strictly increasing"));
        }
        Ok(Self { times, positions })
    }

    pub fn from_points(points: &[(f64, f64)]) -> Result<Self> {
        Self::new(
            points.iter().map(|p| p.0).collect(),
            points.iter().map(|p| p.1).collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn start(&self) -> f64 {
        self.times[0]
    }

    pub fn end(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn final_position(&self) -> f64 {
        *self.positions.last().unwrap()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.times.iter().copied().zip(self.positions.iter().copied())
    }

    /// Position at a checkpoint time, if `s` is one (exact match).
    pub fn at(&self, s: f64) -> Option<f64> {
        let i = self.times.partition_point(|t| *t < s);
        (i < self.times.len() && self.times[i] == s).then(|| self.positions[i])
    }
}
