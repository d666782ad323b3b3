//! Deterministic centering curves and envelopes, and crossing tests of
//! discrete paths against them.
//!
//! Everything here is a closed-form function of the horizon `t`:
//!
//! * `m(t) = sqrt(2) t - 3/(2 sqrt(2)) log t`, the front of the maximum;
//! * `r(t) = sqrt(2) t - 1/(2 sqrt(2)) log t`, the centering for `e^t`
//!   independent Gaussians of variance `t`;
//! * `f_{t,g}(s) = min(s, t - s)^g`, the envelope bump;
//! * `U_{t,g}(s) = (s/t) m(t) + f_{t,g}(s)` (upper envelope) and
//!   `E_{t,a}(s) = (s/t) m(t) - f_{t,a}(s)` (entropic and lower envelopes).

use serde::{Deserialize, Serialize};

use crate::bridge::{bridge_below_line_exact, LinearBarrier};
use crate::error::{invalid, Result};
use crate::path::ParticlePath;

const SQRT_2: f64 = std::f64::consts::SQRT_2;

fn check_horizon(t: f64) -> Result<()> {
    if t > 1.0 && t.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!(
            "centering curves need t > 1 (the log correction changes sign), got t = {t}"
        )))
    }
}

/// Front of the maximum, `sqrt(2) t - (3 / (2 sqrt(2))) log t`.
pub fn front_m(t: f64) -> Result<f64> {
    check_horizon(t)?;
    Ok(SQRT_2 * t - 3.0 / (2.0 * SQRT_2) * t.ln())
}

/// Centering of the maximum of `e^t` independent `N(0, t)` variables,
/// `sqrt(2) t - (1 / (2 sqrt(2))) log t`.
pub fn rem_front_r(t: f64) -> Result<f64> {
    check_horizon(t)?;
    Ok(SQRT_2 * t - 1.0 / (2.0 * SQRT_2) * t.ln())
}

#[inline]
fn bump(t: f64, exponent: f64, s: f64) -> f64 {
    let d = if s <= t / 2.0 { s } else { t - s };
    if d <= 0.0 {
        0.0
    } else {
        d.powf(exponent)
    }
}

/// `s^g` on `[0, t/2]`, `(t - s)^g` on `[t/2, t]`.
pub fn f_curve(t: f64, gamma: f64, s: f64) -> Result<f64> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(invalid(format!("horizon must be positive, got {t}")));
    }
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(invalid(format!("envelope exponent must be positive, got {gamma}")));
    }
    if !(0.0..=t).contains(&s) {
        return Err(invalid(format!("s = {s} lies outside [0, {t}]")));
    }
    Ok(bump(t, gamma, s))
}

/// `U_{t,gamma}(s) = (s/t) m(t) + f_{t,gamma}(s)`.
pub fn upper_envelope(t: f64, gamma: f64, s: f64) -> Result<f64> {
    let m = front_m(t)?;
    Ok(s / t * m + f_curve(t, gamma, s)?)
}

/// `E_{t,alpha}(s) = (s/t) m(t) - f_{t,alpha}(s)`.
pub fn entropic_envelope(t: f64, alpha: f64, s: f64) -> Result<f64> {
    let m = front_m(t)?;
    Ok(s / t * m - f_curve(t, alpha, s)?)
}

/// Anything that can be evaluated along a path.
pub trait Curve {
    fn at(&self, s: f64) -> f64;
}

impl<F: Fn(f64) -> f64> Curve for F {
    fn at(&self, s: f64) -> f64 {
        self(s)
    }
}

/// `offset + (s/t) m(t) + sign * f_{t,exponent}(s)`; `sign` is +1 for the
/// upper envelope, -1 for entropic/lower envelopes and 0 for the straight
/// interpolating line.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnvelopeCurve {
    horizon: f64,
    front: f64,
    exponent: f64,
    sign: f64,
    offset: f64,
}

impl EnvelopeCurve {
    pub fn upper(t: f64, gamma: f64) -> Result<Self> {
        f_curve(t, gamma, 0.0)?;
        Ok(Self {
            horizon: t,
            front: front_m(t)?,
            exponent: gamma,
            sign: 1.0,
            offset: 0.0,
        })
    }

    pub fn entropic(t: f64, alpha: f64) -> Result<Self> {
        f_curve(t, alpha, 0.0)?;
        Ok(Self {
            horizon: t,
            front: front_m(t)?,
            exponent: alpha,
            sign: -1.0,
            offset: 0.0,
        })
    }

    /// The interpolating line `s -> (s/t) m(t)`.
    pub fn line(t: f64) -> Result<Self> {
        Ok(Self {
            horizon: t,
            front: front_m(t)?,
            exponent: 1.0,
            sign: 0.0,
            offset: 0.0,
        })
    }

    pub fn shifted(self, offset: f64) -> Self {
        Self {
            offset: self.offset + offset,
            ..self
        }
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }
}

impl Curve for EnvelopeCurve {
    #[inline]
    fn at(&self, s: f64) -> f64 {
        let bump = if self.sign == 0.0 {
            0.0
        } else {
            self.sign * bump(self.horizon, self.exponent, s)
        };
        self.offset + s / self.horizon * self.front + bump
    }
}

/// Parameters of the envelope family at one horizon.
///
/// `gamma` shapes the upper envelope, `alpha` the entropic envelope and
/// `beta` the lower envelope; `y` offsets the upper envelope.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeSpec {
    pub horizon: f64,
    pub gamma: f64,
    pub alpha: f64,
    pub beta: f64,
    pub y: f64,
}

impl EnvelopeSpec {
    pub fn new(horizon: f64, gamma: f64, alpha: f64, beta: f64, y: f64) -> Result<Self> {
        let spec = Self {
            horizon,
            gamma,
            alpha,
            beta,
            y,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        check_horizon(self.horizon)?;
        check_exponents(self.gamma, self.alpha, self.beta)?;
        if !self.y.is_finite() {
            return Err(invalid("envelope offset y must be finite"));
        }
        Ok(())
    }

    /// `y + U_{t,gamma}`.
    pub fn upper(&self) -> EnvelopeCurve {
        EnvelopeCurve::upper(self.horizon, self.gamma)
            .expect("validated spec")
            .shifted(self.y)
    }

    /// `d_bar + E_{t,alpha}`.
    pub fn entropic(&self, d_bar: f64) -> EnvelopeCurve {
        EnvelopeCurve::entropic(self.horizon, self.alpha)
            .expect("validated spec")
            .shifted(d_bar)
    }

    /// `d_bar + E_{t,beta}`.
    pub fn lower(&self, d_bar: f64) -> EnvelopeCurve {
        EnvelopeCurve::entropic(self.horizon, self.beta)
            .expect("validated spec")
            .shifted(d_bar)
    }
}

/// The exponent hypotheses `0 < gamma < 1/2` and `0 < alpha < 1/2 < beta < 1`.
pub fn check_exponents(gamma: f64, alpha: f64, beta: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma < 0.5) {
        return Err(invalid(format!(
            "gamma must satisfy 0<γ<1/2 (upper envelope hypothesis), got {gamma}"
        )));
    }
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(invalid(format!(
            "alpha must satisfy 0<α<1/2 (entropic envelope hypothesis), got {alpha}"
        )));
    }
    if !(beta > 0.5 && beta < 1.0) {
        return Err(invalid(format!(
            "beta must satisfy 1/2<β<1 (lower envelope hypothesis), got {beta}"
        )));
    }
    Ok(())
}

/// Which comparison against the curve counts as a crossing.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Crossing {
    /// `x(s) > curve(s)`.
    Above,
    /// `x(s) >= curve(s)`.
    AtOrAbove,
    /// `x(s) <= curve(s)`.
    AtOrBelow,
}

impl Crossing {
    #[inline]
    pub fn hit(self, x: f64, c: f64) -> bool {
        match self {
            Crossing::Above => x > c,
            Crossing::AtOrAbove => x >= c,
            Crossing::AtOrBelow => x <= c,
        }
    }
}

fn check_window(path: &ParticlePath, window: (f64, f64)) -> Result<()> {
    let (lo, hi) = window;
    if !(lo <= hi) {
        return Err(invalid(format!("window [{lo}, {hi}] is empty")));
    }
    if lo < path.start() || hi > path.end() {
        return Err(invalid(format!(
            "window [{lo}, {hi}] is outside the path support [{}, {}]",
            path.start(),
            path.end()
        )));
    }
    Ok(())
}

/// Earliest checkpoint in `window` where `rule` holds against `curve`.
pub fn first_crossing(
    path: &ParticlePath,
    curve: &impl Curve,
    window: (f64, f64),
    rule: Crossing,
) -> Result<Option<f64>> {
    check_window(path, window)?;
    Ok(path
        .iter()
        .filter(|(s, _)| *s >= window.0 && *s <= window.1)
        .find(|(s, x)| rule.hit(*x, curve.at(*s)))
        .map(|(s, _)| s))
}

/// Strict crossing above `curve` at some checkpoint of `window`; reports the
/// earliest such time. Touching the curve does not count.
pub fn path_crosses_above(
    path: &ParticlePath,
    curve: &impl Curve,
    window: (f64, f64),
) -> Result<Option<f64>> {
    first_crossing(path, curve, window, Crossing::Above)
}

/// Probability, given the checkpoint values, that the continuous path went
/// above `curve` somewhere in `window`.
///
/// Between adjacent checkpoints the path is a Brownian bridge and the curve
/// is replaced by its chord, for which the avoidance probability is exact.
/// Returns 1 when a checkpoint already sits at or above the curve.
pub fn bridge_crossing_probability(
    path: &ParticlePath,
    curve: &impl Curve,
    window: (f64, f64),
) -> Result<f64> {
    check_window(path, window)?;
    let points: Vec<(f64, f64)> = path
        .iter()
        .filter(|(s, _)| *s >= window.0 && *s <= window.1)
        .collect();
    let mut survive = 1.0;
    for (i, &(s, x)) in points.iter().enumerate() {
        let c = curve.at(s);
        if x >= c {
            return Ok(1.0);
        }
        if let Some(&(s2, x2)) = points.get(i + 1) {
            let barrier = LinearBarrier {
                left: c,
                right: curve.at(s2),
                length: s2 - s,
                start: x,
                end: x2,
            };
            survive *= bridge_below_line_exact(&barrier)?;
        }
    }
    Ok(1.0 - survive)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const TOL: f64 = 1e-9;

    fn m_direct(t: f64) -> f64 {
        2f64.sqrt() * t - 1.5 / 2f64.sqrt() * t.ln()
    }

    #[test]
    fn front_values() {
        // direct evaluation of sqrt(2) t - 3/(2 sqrt 2) log t
        assert!((front_m(10.0).unwrap() - 11.699_875_323_458_231).abs() < TOL);
        assert!((front_m(std::f64::consts::E).unwrap() - 2.783_570_856_379_295_6).abs() < TOL);
        assert!((front_m(12.0).unwrap() - 14.334_921_234_456_182).abs() < TOL);
        assert!((front_m(1e6).unwrap() / 1e6 - SQRT_2).abs() < 3e-5);
    }

    #[test]
    fn rem_values() {
        assert!((rem_front_r(10.0).unwrap() - 13.328_048_856_973_378).abs() < TOL);
        let e2 = std::f64::consts::E.powi(2);
        assert!((rem_front_r(e2).unwrap() - 9.742_596_567_056_811).abs() < TOL);
        let gap = rem_front_r(10.0).unwrap() - front_m(10.0).unwrap();
        assert!((gap - 10f64.ln() / SQRT_2).abs() < TOL);
        assert!((gap - 1.628_173_533_515_147).abs() < TOL);
    }

    #[test]
    fn centering_rejects_small_horizon() {
        assert!(front_m(1.0).is_err());
        assert!(front_m(0.5).is_err());
        assert!(rem_front_r(1.0).is_err());
    }

    #[test]
    fn f_curve_values() {
        assert!((f_curve(10.0, 0.5, 4.0).unwrap() - 2.0).abs() < TOL);
        assert_eq!(f_curve(10.0, 0.3, 0.0).unwrap(), 0.0);
        assert_eq!(f_curve(10.0, 0.3, 10.0).unwrap(), 0.0);
        let mid = f_curve(10.0, 0.3, 5.0).unwrap();
        assert!((mid - 5f64.powf(0.3)).abs() < TOL);
        assert!((f_curve(10.0, 0.3, 6.0).unwrap() - 4f64.powf(0.3)).abs() < TOL);
        assert!(f_curve(10.0, 0.3, 10.5).is_err());
        assert!(f_curve(10.0, 0.3, -0.1).is_err());
    }

    #[test]
    fn envelope_values() {
        let g = 1.0 / 3.0;
        for t in [2.0, 10.0, 37.5] {
            assert!((upper_envelope(t, g, t).unwrap() - front_m(t).unwrap()).abs() < TOL);
            assert!((entropic_envelope(t, 0.25, t).unwrap() - front_m(t).unwrap()).abs() < TOL);
        }
        let u = upper_envelope(10.0, g, 5.0).unwrap();
        assert!((u - (0.5 * m_direct(10.0) + 5f64.powf(g))).abs() < TOL);
        assert!((u - 7.559_913_608_405_813).abs() < TOL);
        let curve = EnvelopeCurve::upper(10.0, g).unwrap();
        assert!((curve.at(5.0) - u).abs() < TOL);
    }

    #[test]
    fn spec_validation_messages() {
        assert!(EnvelopeSpec::new(12.0, 1.0 / 3.0, 1.0 / 3.0, 2.0 / 3.0, 0.0).is_ok());
        let err = EnvelopeSpec::new(12.0, 1.0 / 3.0, 0.6, 2.0 / 3.0, 0.0).unwrap_err();
        assert!(err.to_string().contains("0<α<1/2"), "{err}");
        assert!(EnvelopeSpec::new(12.0, 0.5, 0.3, 0.7, 0.0).is_err());
        assert!(EnvelopeSpec::new(12.0, 0.3, 0.3, 0.5, 0.0).is_err());
        assert!(EnvelopeSpec::new(1.0, 0.3, 0.3, 0.7, 0.0).is_err());
    }

    fn grid_path(t: f64, n: usize, f: impl Fn(f64) -> f64) -> ParticlePath {
        let pts: Vec<(f64, f64)> = (0..=n)
            .map(|k| {
                let s = t * k as f64 / n as f64;
                (s, f(s))
            })
            .collect();
        ParticlePath::from_points(&pts).unwrap()
    }

    #[test]
    fn crossing_fixtures() {
        let t = 10.0;
        let curve = EnvelopeCurve::upper(t, 0.3).unwrap().shifted(1.0);
        let flat = grid_path(t, 40, |_| 0.0);
        assert_eq!(path_crosses_above(&flat, &curve, (0.0, t)).unwrap(), None);

        let on_curve = grid_path(t, 40, |s| curve.at(s));
        assert_eq!(path_crosses_above(&on_curve, &curve, (0.0, t)).unwrap(), None);
        assert_eq!(
            first_crossing(&on_curve, &curve, (0.0, t), Crossing::AtOrAbove).unwrap(),
            Some(0.0)
        );

        let spike = grid_path(t, 40, |s| if s == 6.0 { curve.at(s) + 1e-9 } else { 0.0 });
        assert_eq!(path_crosses_above(&spike, &curve, (0.0, t)).unwrap(), Some(6.0));
        assert_eq!(path_crosses_above(&spike, &curve, (0.0, 5.9)).unwrap(), None);
        assert!(path_crosses_above(&spike, &curve, (0.0, 10.5)).is_err());
        assert!(path_crosses_above(&spike, &curve, (4.0, 3.0)).is_err());
    }

    #[test]
    fn refinement_probability() {
        let t = 10.0;
        let line = |_s: f64| 1.0;
        let flat = grid_path(t, 10, |_| 0.0);
        let p = bridge_crossing_probability(&flat, &line, (0.0, t)).unwrap();
        // ten unit intervals, each with avoidance 1 - exp(-2)
        let expected = 1.0 - (1.0 - (-2f64).exp()).powi(10);
        assert!((p - expected).abs() < 1e-12);
        let touching = grid_path(t, 10, |s| if s == 3.0 { 1.0 } else { 0.0 });
        assert_eq!(bridge_crossing_probability(&touching, &line, (0.0, t)).unwrap(), 1.0);
    }

    proptest! {
        #[test]
        fn envelope_ordering(t in 3.0f64..60.0, frac in 0.01f64..0.99, alpha in 0.05f64..0.49,
                             beta in 0.51f64..0.99, gamma in 0.05f64..0.49) {
            let s = t * frac;
            let fa = f_curve(t, alpha, s).unwrap();
            let fb = f_curve(t, beta, s).unwrap();
            prop_assume!(fb > fa && fa > 0.0);
            let line = EnvelopeCurve::line(t).unwrap().at(s);
            let ea = entropic_envelope(t, alpha, s).unwrap();
            let eb = entropic_envelope(t, beta, s).unwrap();
            let u = upper_envelope(t, gamma, s).unwrap();
            prop_assert!(eb < ea && ea < line && line < u);
        }

        #[test]
        fn bump_concave_on_first_half(t in 2.0f64..50.0, gamma in 0.05f64..0.99) {
            let n = 200;
            let h = t / 2.0 / n as f64;
            let vals: Vec<f64> = (0..=n).map(|k| f_curve(t, gamma, k as f64 * h).unwrap()).collect();
            for w in vals.windows(3) {
                prop_assert!(w[0] - 2.0 * w[1] + w[2] <= 1e-12);
            }
        }

        #[test]
        fn line_dominates_front(t in 3.0f64..200.0, frac in 0.0f64..1.0) {
            let e = std::f64::consts::E;
            let s = e + (t - e) * frac;
            prop_assume!(s > e + 1e-9 && s < t - 1e-9);
            prop_assert!(s / t * front_m(t).unwrap() > front_m(s).unwrap());
        }

        #[test]
        fn crossing_monotone_in_window(seed in 0u64..500, a in 0.0f64..5.0, b in 5.0f64..10.0,
                                       grow in 0.0f64..3.0) {
            let mut rng = crate::kernels::RngStream::new(seed, 0);
            let pts = crate::kernels::sample_free_path(&mut rng, 10.0, 0.05).unwrap();
            let path = ParticlePath::from_points(&pts).unwrap();
            let curve = EnvelopeCurve::upper(10.0, 0.3).unwrap().shifted(-6.0);
            let inner = path_crosses_above(&path, &curve, (a, b)).unwrap();
            let outer = path_crosses_above(&path, &curve, ((a - grow).max(0.0), (b + grow).min(10.0))).unwrap();
            if inner.is_some() {
                prop_assert!(outer.is_some());
                prop_assert!(outer.unwrap() <= inner.unwrap());
            }
        }
    }
}
