//! Finite-difference solver for `u_t = 1/2 u_xx + sum p_k u^k - u` with
//! Heaviside initial data, whose solution is `P[max_k x_k(t) <= x]`.
//!
//! Each step applies the reaction explicitly and then the diffusion by
//! backward Euler on a moving window with `u = 0` pinned on the left and
//! `u = 1` on the right.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::kernels::OffspringLaw;
use crate::stats::inference::{linear_fit, LinearFit};

const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// Values outside `[0, 1]` by more than this are an instability.
pub const CLAMP_TOLERANCE: f64 = 1e-8;

/// Largest step accepted: the explicit reaction has `|F'(u)| <= K - 1 + 1`
/// on `[0, 1]` for every admissible law, and `dt <= 1` keeps it monotone.
pub const MAX_DT: f64 = 1.0;

#[derive(Clone, Debug, PartialEq)]
pub enum Reaction {
    /// Pure heat equation.
    None,
    Law(OffspringLaw),
}

#[derive(Clone, Debug, PartialEq)]
pub struct FkppState {
    /// Grid index of `u[0]`: cell `i` sits at `(origin + i) * dx`.
    origin: i64,
    dx: f64,
    u: Vec<f64>,
    time: f64,
    reaction: Reaction,
    clamp_events: u64,
    factor: Option<Factorization>,
}

/// Thomas factorization of `I - (dt / 2) D2` on the interior cells.
#[derive(Clone, Debug, PartialEq)]
struct Factorization {
    dt: f64,
    lambda: f64,
    /// Modified super-diagonal.
    c: Vec<f64>,
    /// Reciprocal pivots.
    inv: Vec<f64>,
    /// `lambda * inv`, the weight of the previous row in the forward sweep.
    carry: Vec<f64>,
}

impl Factorization {
    fn new(n: usize, dx: f64, dt: f64) -> Self {
        let lambda = dt / (2.0 * dx * dx);
        let (a, b) = (-lambda, 1.0 + 2.0 * lambda);
        let mut c = vec![0.0; n];
        let mut inv = vec![0.0; n];
        for i in 0..n {
            let pivot = if i == 0 { b } else { b - a * c[i - 1] };
            inv[i] = 1.0 / pivot;
            c[i] = a * inv[i];
        }
        let carry = inv.iter().map(|v| lambda * v).collect();
        Self {
            dt,
            lambda,
            c,
            inv,
            carry,
        }
    }
}

impl FkppState {
    /// Cell-averaged Heaviside data `1{x >= 0}` on `[-width/2, width/2]`.
    pub fn heaviside(dx: f64, width: f64, reaction: Reaction) -> Result<Self> {
        if !(dx > 0.0) || !(width > 4.0 * dx) {
            return Err(invalid(format!("need dx > 0 and width > 4 dx, got dx = {dx}, width = {width}")));
        }
        let half = (width / (2.0 * dx)).round() as i64;
        let u = (-half..=half)
            .map(|i| match i.cmp(&0) {
                std::cmp::Ordering::Less => 0.0,
                std::cmp::Ordering::Equal => 0.5,
                std::cmp::Ordering::Greater => 1.0,
            })
            .collect();
        Ok(Self::from_parts(-half, dx, u, 0.0, reaction))
    }

    /// State from explicit values on cells `origin, origin + 1, ...`.
    pub fn from_values(origin: i64, dx: f64, u: Vec<f64>, reaction: Reaction) -> Result<Self> {
        if u.len() < 5 || !(dx > 0.0) {
            return Err(invalid("state needs at least five cells and dx > 0"));
        }
        if u.iter().any(|v| !(-CLAMP_TOLERANCE..=1.0 + CLAMP_TOLERANCE).contains(v)) {
            return Err(invalid("state values must lie in [0, 1]"));
        }
        Ok(Self::from_parts(origin, dx, u, 0.0, reaction))
    }

    fn from_parts(origin: i64, dx: f64, u: Vec<f64>, time: f64, reaction: Reaction) -> Self {
        Self {
            origin,
            dx,
            u,
            time,
            reaction,
            clamp_events: 0,
            factor: None,
        }
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn values(&self) -> &[f64] {
        &self.u
    }

    pub fn clamp_events(&self) -> u64 {
        self.clamp_events
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        (self.origin + i as i64) as f64 * self.dx
    }

    pub fn xs(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.u.len()).map(|i| self.x(i))
    }

    /// Linear interpolation of `u` at `x`; 0 left of the window, 1 right of it.
    pub fn value_at(&self, x: f64) -> f64 {
        let pos = x / self.dx - self.origin as f64;
        if pos <= 0.0 {
            return if pos < 0.0 { 0.0 } else { self.u[0] };
        }
        let i = pos.floor() as usize;
        if i + 1 >= self.u.len() {
            return 1.0;
        }
        let w = pos - i as f64;
        self.u[i] * (1.0 - w) + self.u[i + 1] * w
    }

    /// One step: explicit reaction, then implicit diffusion.
    pub fn step(&mut self, dt: f64) -> Result<()> {
        if !(dt > 0.0 && dt <= MAX_DT) {
            return Err(invalid(format!("time step must lie in (0, {MAX_DT}], got {dt}")));
        }
        let n = self.u.len();
        let interior = n - 2;
        if self.factor.as_ref().is_none_or(|f| f.dt != dt || f.c.len() != interior) {
            self.factor = Some(Factorization::new(interior, self.dx, dt));
        }
        let f = self.factor.as_ref().unwrap();
        let u = &mut self.u;
        u[0] = 0.0;
        u[n - 1] = 1.0;
        match &self.reaction {
            Reaction::None => {}
            Reaction::Law(law) if law.is_binary() => {
                for v in u[1..n - 1].iter_mut() {
                    *v += dt * (*v * *v - *v);
                }
            }
            Reaction::Law(law) => {
                for v in u[1..n - 1].iter_mut() {
                    *v += dt * law.reaction(*v);
                }
            }
        }
        // boundary values enter the first and last interior rows
        u[1] += f.lambda * u[0];
        u[n - 2] += f.lambda * u[n - 1];
        let rows = &mut u[1..n - 1];
        for (v, inv) in rows.iter_mut().zip(&f.inv) {
            *v *= inv;
        }
        let mut prev = 0.0;
        for (v, carry) in rows.iter_mut().zip(&f.carry) {
            *v += carry * prev;
            prev = *v;
        }
        for i in (0..interior - 1).rev() {
            u[i + 1] -= f.c[i] * u[i + 2];
        }
        self.time += dt;
        self.audit()
    }

    /// Clamps rounding-level excursions and rejects real ones, including
    /// loss of monotonicity.
    fn audit(&mut self) -> Result<()> {
        let mut prev = 0.0;
        let mut bad = None;
        for (i, v) in self.u.iter_mut().enumerate() {
            if !(0.0..=1.0).contains(v) {
                let excess = if *v < 0.0 { -*v } else { *v - 1.0 };
                if !(excess <= CLAMP_TOLERANCE) {
                    bad = Some(i);
                    break;
                }
                *v = v.clamp(0.0, 1.0);
                self.clamp_events += 1;
            }
            if *v < prev - CLAMP_TOLERANCE {
                bad = Some(i);
                break;
            }
            prev = *v;
        }
        match bad {
            None => Ok(()),
            Some(i) => Err(Error::NumericalInstability(format!(
                "u = {} at cell {i} (x = {}) after u = {} at t = {}: outside [0, 1] or decreasing",
                self.u[i],
                self.x(i),
                if i > 0 { self.u[i - 1] } else { f64::NAN },
                self.time
            ))),
        }
    }

    /// Advances to `target` in equal steps no longer than `max_dt`.
    pub fn advance_to(&mut self, target: f64, max_dt: f64) -> Result<()> {
        let span = target - self.time;
        if span <= 0.0 {
            return Ok(());
        }
        let steps = (span / max_dt - 1e-9).ceil().max(1.0) as u64;
        let dt = span / steps as f64;
        for _ in 0..steps {
            self.step(dt)?;
        }
        self.time = target;
        Ok(())
    }

    /// `x` where `u` first reaches `level`, by linear interpolation.
    pub fn front_position(&self, level: f64) -> Result<f64> {
        if !(level > 0.0 && level < 1.0) {
            return Err(invalid(format!("level must lie in (0, 1), got {level}")));
        }
        let i = self.u.partition_point(|v| *v < level);
        if i == 0 || i == self.u.len() {
            return Err(Error::Window(format!("level {level} not bracketed by the window at t = {}", self.time)));
        }
        let (a, b) = (self.u[i - 1], self.u[i]);
        Ok(self.x(i - 1) + (level - a) / (b - a) * self.dx)
    }

    /// Shifts the window by whole cells so that the level-1/2 point sits in
    /// the middle.
    pub fn recentre(&mut self) -> Result<()> {
        let front = self.front_position(0.5)?;
        let centre = self.x(self.u.len() / 2);
        let shift = ((front - centre) / self.dx).round() as i64;
        if shift == 0 {
            return Ok(());
        }
        let n = self.u.len();
        if shift > 0 {
            let k = (shift as usize).min(n);
            self.u.drain(..k);
            self.u.extend(std::iter::repeat_n(1.0, k));
        } else {
            let k = ((-shift) as usize).min(n);
            self.u.truncate(n - k);
            self.u.splice(0..0, std::iter::repeat_n(0.0, k));
        }
        self.origin += shift;
        Ok(())
    }

    /// Max-norm of `1/2 u'' + c u' + u^2 - u` by central differences over
    /// `[front - 8, front + 8]`.
    pub fn wave_residual_with_speed(&self, speed: f64) -> Result<f64> {
        match &self.reaction {
            Reaction::Law(law) if law.is_binary() => {}
            _ => {
                return Err(Error::Unsupported(
                    "the wave equation residual is defined for the binary law only".into(),
                ))
            }
        }
        let front = self.front_position(0.5)?;
        let (lo, hi) = (front - 8.0, front + 8.0);
        if lo < self.x(1) || hi > self.x(self.u.len() - 2) {
            return Err(Error::Window("window does not cover front +/- 8".into()));
        }
        let h = self.dx;
        let u = &self.u;
        let mut worst: f64 = 0.0;
        for i in 1..u.len() - 1 {
            let x = self.x(i);
            if x < lo || x > hi {
                continue;
            }
            let d2 = (u[i + 1] - 2.0 * u[i] + u[i - 1]) / (h * h);
            let d1 = (u[i + 1] - u[i - 1]) / (2.0 * h);
            worst = worst.max((0.5 * d2 + speed * d1 + u[i] * u[i] - u[i]).abs());
        }
        Ok(worst)
    }

    /// Residual of the travelling-wave equation `1/2 w'' + sqrt2 w' + w^2 - w = 0`.
    pub fn wave_shape_residual(&self) -> Result<f64> {
        self.wave_residual_with_speed(SQRT_2)
    }

    /// Profile `x -> u(front + x)` on the given offsets.
    pub fn recentred_profile(&self, offsets: &[f64]) -> Result<Vec<f64>> {
        let front = self.front_position(0.5)?;
        Ok(offsets.iter().map(|z| self.value_at(front + z)).collect())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FkppConfig {
    pub dx: f64,
    pub dt: f64,
    pub width: f64,
    pub recentre_every: f64,
}

impl Default for FkppConfig {
    fn default() -> Self {
        let dx = 0.02;
        Self {
            dx,
            dt: 0.25 * dx * dx,
            width: 80.0,
            recentre_every: 1.0,
        }
    }
}

impl FkppConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dx > 0.0 && self.dt > 0.0 && self.dt <= MAX_DT) {
            return Err(invalid(format!("need dx > 0 and 0 < dt <= {MAX_DT}")));
        }
        if !(self.width >= 20.0) {
            return Err(invalid("window width must be at least 20 to hold the front"));
        }
        if !(self.recentre_every > 0.0) {
            return Err(invalid("recentring interval must be positive"));
        }
        Ok(())
    }
}

/// One row of the front time series.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrontSample {
    pub t: f64,
    pub front: f64,
    /// `sqrt2 t - front`.
    pub lag: f64,
    /// Wave-equation residual; `None` for non-binary laws.
    pub residual: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct FkppRun {
    pub samples: Vec<FrontSample>,
    pub state: FkppState,
    /// Recentred profiles at the requested snapshot times, on `offsets`.
    pub profiles: Vec<(f64, Vec<f64>)>,
    pub offsets: Vec<f64>,
}

/// Integrates from Heaviside data, recording the front at every time in
/// `record` (sorted) and the recentred profile at every time in `snapshots`.
pub fn solve(law: &OffspringLaw, cfg: &FkppConfig, record: &[f64], snapshots: &[f64]) -> Result<FkppRun> {
    cfg.validate()?;
    let mut state = FkppState::heaviside(cfg.dx, cfg.width, Reaction::Law(law.clone()))?;
    let mut stops: Vec<f64> = record.iter().chain(snapshots).copied().collect();
    let end = stops.iter().copied().fold(0.0, f64::max);
    let mut k = 1.0;
    while k * cfg.recentre_every < end {
        stops.push(k * cfg.recentre_every);
        k += 1.0;
    }
    stops.sort_by(f64::total_cmp);
    stops.dedup();
    let offsets: Vec<f64> = (-400..=400).map(|i| i as f64 * 0.02).collect();
    let (mut samples, mut profiles) = (Vec::new(), Vec::new());
    for stop in stops {
        state.advance_to(stop, cfg.dt)?;
        if record.contains(&stop) {
            let front = state.front_position(0.5)?;
            samples.push(FrontSample {
                t: stop,
                front,
                lag: SQRT_2 * stop - front,
                residual: if law.is_binary() {
                    Some(state.wave_shape_residual()?)
                } else {
                    None
                },
            });
        }
        if snapshots.contains(&stop) {
            profiles.push((stop, state.recentred_profile(&offsets)?));
        }
        if (stop / cfg.recentre_every).fract() == 0.0 {
            state.recentre()?;
        }
    }
    Ok(FkppRun {
        samples,
        state,
        profiles,
        offsets,
    })
}

/// Regression of the lag `sqrt2 t - front(t)` on `log t` over `[lo, hi]`.
pub fn lag_slope(samples: &[FrontSample], lo: f64, hi: f64) -> Result<LinearFit> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = samples
        .iter()
        .filter(|s| s.t >= lo && s.t <= hi)
        .map(|s| (s.t.ln(), s.lag))
        .unzip();
    linear_fit(&xs, &ys)
}

/// Front displacement over the unit interval ending at `t`.
pub fn front_speed(samples: &[FrontSample], t: f64) -> Result<f64> {
    let at = |s: f64| {
        samples
            .iter()
            .find(|x| x.t == s)
            .map(|x| x.front)
            .ok_or_else(|| invalid(format!("front not recorded at t = {s}")))
    };
    Ok(at(t)? - at(t - 1.0)?)
}

/// Sup distance between two profiles on the same offsets.
pub fn profile_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
