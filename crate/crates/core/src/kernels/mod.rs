//! Random primitives shared by the simulator and the Monte Carlo oracles.

mod offspring;
mod rng;

pub use offspring::{OffspringLaw, MAX_OFFSPRING};
pub use rng::{RngStream, RNG_ALGORITHM};


use crate::error::{invalid, Result};

/// Brownian displacement over a time step `dt`, distributed `N(0, dt)`.
pub fn sample_gaussian_increment(rng: &mut RngStream, dt: f64) -> Result<f64> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(invalid(format!("time step must be positive, got {dt}")));
    }
    Ok(dt.sqrt() * rng.normal())
}

/// Exponential(1) holding time until a particle branches.
pub fn sample_branch_time(rng: &mut RngStream) -> f64 {
    rng.exp1()
}

/// Number of offspring at a branching event. Degenerate laws consume no
/// randomness.
pub fn sample_offspring(rng: &mut RngStream, law: &OffspringLaw) -> usize {
    if law.is_binary() {
        2
    } else {
        law.quantile(rng.uniform())
    }
}

/// Uniform grid `0 = s_0 < ... < s_n = length` with `n >= 2` steps of
/// `grid_dt`. The spacing must divide `length` up to rounding.
pub(crate) fn uniform_steps(length: f64, grid_dt: f64) -> Result<usize> {
    if !(length > 0.0) || !length.is_finite() {
        return Err(invalid(format!("bridge length must be positive, got {length}")));
    }
    if !(grid_dt > 0.0) || !grid_dt.is_finite() {
        return Err(invalid(format!("grid spacing must be positive, got {grid_dt}")));
    }
    let ratio = length / grid_dt;
    let n = ratio.round();
    if (ratio - n).abs() > 1e-9 * ratio.max(1.0) {
        return Err(invalid(format!(
            "grid spacing {grid_dt} does not divide length {length}"
        )));
    }
    if n < 2.0 {
        return Err(invalid("bridge grid needs at least two steps"));
    }
    Ok(n as usize)
}

/// Brownian bridge from `(0, start)` to `(length, end)` sampled on the grid
/// `k * grid_dt`, built forward by conditioning each step on the endpoint.
pub fn sample_bridge_path(
    rng: &mut RngStream,
    length: f64,
    start: f64,
    end: f64,
    grid_dt: f64,
) -> Result<Vec<(f64, f64)>> {
    let n = uniform_steps(length, grid_dt)?;
    let h = length / n as f64;
    let mut out = Vec::with_capacity(n + 1);
    let mut x = start;
    out.push((0.0, start));
    for k in 0..n - 1 {
        let remaining = length - k as f64 * h;
        let after = remaining - h;
        x += (end - x) * h / remaining + (h * after / remaining).sqrt() * rng.normal();
        out.push(((k + 1) as f64 * h, x));
    }
    out.push((length, end));
    Ok(out)
}

/// Bridge obtained from a free Brownian path by pinning:
/// `x(s) - (s/T) x(T)`, shifted to run from `start` to `end`.
pub fn sample_pinned_bridge_path(
    rng: &mut RngStream,
    length: f64,
    start: f64,
    end: f64,
    grid_dt: f64,
) -> Result<Vec<(f64, f64)>> {
    let free = sample_free_path(rng, length, grid_dt)?;
    let terminal = free.last().map(|p| p.1).unwrap_or(0.0);
    let n = free.len() - 1;
    Ok(free
        .into_iter()
        .enumerate()
        .map(|(k, (s, x))| {
            let frac = k as f64 / n as f64;
            let value = if k == n {
                end
            } else {
                x - frac * terminal + start + frac * (end - start)
            };
            (s, value)
        })
        .collect())
}

/// Standard Brownian motion from 0 on the grid `k * grid_dt`.
pub fn sample_free_path(rng: &mut RngStream, length: f64, grid_dt: f64) -> Result<Vec<(f64, f64)>> {
    let n = uniform_steps(length, grid_dt)?;
    let h = length / n as f64;
    let sd = h.sqrt();
    let mut out = Vec::with_capacity(n + 1);
    let mut x = 0.0;
    out.push((0.0, 0.0));
    for k in 1..=n {
        x += sd * rng.normal();
        out.push((k as f64 * h, x));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn increment_rejects_nonpositive_step() {
        let mut rng = RngStream::new(1, 0);
        assert!(sample_gaussian_increment(&mut rng, 0.0).is_err());
        assert!(sample_gaussian_increment(&mut rng, -1.0).is_err());
        assert!(sample_gaussian_increment(&mut rng, f64::NAN).is_err());
    }

    #[test]
    fn tiny_step_gives_tiny_increment() {
        let mut rng = RngStream::new(1, 0);
        for _ in 0..10_000 {
            assert!(sample_gaussian_increment(&mut rng, 1e-12).unwrap().abs() < 1e-4);
        }
    }

    #[test]
    fn branch_times_positive() {
        let mut rng = RngStream::new(5, 0);
        assert!((0..100_000).all(|_| sample_branch_time(&mut rng) > 0.0));
    }

    #[test]
    fn binary_law_always_two() {
        let mut rng = RngStream::new(5, 0);
        let law = OffspringLaw::binary();
        assert!((0..1000).all(|_| sample_offspring(&mut rng, &law) == 2));
    }

    #[test]
    fn bridge_endpoints_pinned() {
        let mut rng = RngStream::new(9, 0);
        let path = sample_bridge_path(&mut rng, 10.0, 1.5, -2.0, 0.5).unwrap();
        assert_eq!(path.len(), 21);
        assert_eq!(path[0], (0.0, 1.5));
        assert_eq!(*path.last().unwrap(), (10.0, -2.0));
        let pinned = sample_pinned_bridge_path(&mut rng, 10.0, 1.5, -2.0, 0.5).unwrap();
        assert_eq!(pinned[0], (0.0, 1.5));
        assert_eq!(*pinned.last().unwrap(), (10.0, -2.0));
    }

    #[test]
    fn bridge_grid_validation() {
        let mut rng = RngStream::new(9, 0);
        assert!(sample_bridge_path(&mut rng, 1.0, 0.0, 0.0, 0.3).is_err());
        assert!(sample_bridge_path(&mut rng, 1.0, 0.0, 0.0, 1.0).is_err());
        assert!(sample_bridge_path(&mut rng, 0.0, 0.0, 0.0, 0.1).is_err());
        assert!(sample_bridge_path(&mut rng, 1.0, 0.0, 0.0, 0.5).is_ok());
    }
}
