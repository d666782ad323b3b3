//! Envelope and tube violation statistics.
//!
//! A replica stores, for each event, its violation reach: the largest
//! `min(s, t - s)` over checkpoints `s` where the event fires. The event
//! occurs somewhere in `[r, t - r]` exactly when the reach is at least `r`,
//! so one number answers every `r`.

use serde::{Deserialize, Serialize};

use super::inference::Rate;
use super::summary::SummarySet;
use crate::engine::{lineage, ExtremalSnapshot, GenealogyTree, Window};
use crate::envelope::{Curve, EnvelopeSpec};
use crate::error::{invalid, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnvelopeMode {
    /// Some particle goes strictly above `y + U_{t,gamma}`.
    Upper,
    /// An extremal particle reaches `D̄ + E_{t,alpha}`.
    Entropic,
    /// An extremal particle drops to `D̄ + E_{t,beta}`.
    Lower,
    /// An extremal particle leaves the tube between the two.
    Tube,
}

impl EnvelopeMode {
    pub const ALL: [EnvelopeMode; 4] = [Self::Upper, Self::Entropic, Self::Lower, Self::Tube];

    pub fn name(self) -> &'static str {
        match self {
            Self::Upper => "upper",
            Self::Entropic => "entropic",
            Self::Lower => "lower",
            Self::Tube => "tube",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| invalid(format!("unknown envelope mode {s:?}")))
    }
}

#[inline]
fn raise(reach: &mut Option<f64>, value: f64) {
    if reach.is_none_or(|r| value > r) {
        *reach = Some(value);
    }
}

/// Envelope values at every grid time of one horizon.
#[derive(Clone, Debug)]
pub struct EnvelopeTables {
    reach: Vec<f64>,
    upper: Vec<f64>,
    entropic: Vec<f64>,
    lower: Vec<f64>,
}

impl EnvelopeTables {
    pub fn new(spec: &EnvelopeSpec, window: &Window, grid_dt: f64, last_grid: u32) -> Result<Self> {
        spec.validate()?;
        let t = spec.horizon;
        let (upper, entropic, lower) = (spec.upper(), spec.entropic(window.upper()), spec.lower(window.upper()));
        let times: Vec<f64> = (0..=last_grid).map(|k| k as f64 * grid_dt).collect();
        Ok(Self {
            reach: times.iter().map(|s| s.min(t - s)).collect(),
            upper: times.iter().map(|&s| upper.at(s)).collect(),
            entropic: times.iter().map(|&s| entropic.at(s)).collect(),
            lower: times.iter().map(|&s| lower.at(s)).collect(),
        })
    }

    pub fn for_tree(spec: &EnvelopeSpec, window: &Window, tree: &GenealogyTree) -> Result<Self> {
        if spec.horizon != tree.horizon() {
            return Err(invalid(format!(
                "envelope horizon {} differs from the tree horizon {}",
                spec.horizon,
                tree.horizon()
            )));
        }
        Self::new(spec, window, tree.grid_dt(), tree.last_grid_index())
    }
}

/// Upper-envelope reach over the grid checkpoints of every particle.
pub fn upper_violation_reach(tree: &GenealogyTree, tables: &EnvelopeTables) -> Option<f64> {
    let mut reach = None;
    for r in tree.records() {
        let k0 = r.first_grid_index() as usize;
        for (i, &x) in tree.checkpoint_positions(r.id).iter().enumerate() {
            let k = k0 + i;
            if x > tables.upper[k] {
                raise(&mut reach, tables.reach[k]);
            }
        }
    }
    reach
}

/// Entropic and lower reaches along the ancestral line of one extremal particle.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ParticleReach {
    pub entropic: Option<f64>,
    pub lower: Option<f64>,
}

impl ParticleReach {
    pub fn tube(&self) -> Option<f64> {
        match (self.entropic, self.lower) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, b) => a.or(b),
        }
    }

    pub fn get(&self, mode: EnvelopeMode) -> Option<f64> {
        match mode {
            EnvelopeMode::Entropic => self.entropic,
            EnvelopeMode::Lower => self.lower,
            EnvelopeMode::Tube => self.tube(),
            EnvelopeMode::Upper => None,
        }
    }
}

/// Reaches for each particle of the snapshot, in snapshot order.
pub fn extremal_reaches(tree: &GenealogyTree, snapshot: &ExtremalSnapshot, tables: &EnvelopeTables) -> Vec<ParticleReach> {
    snapshot
        .ids
        .iter()
        .map(|&leaf| {
            let mut out = ParticleReach::default();
            for id in lineage(tree, leaf) {
                let k0 = tree.record(id).first_grid_index() as usize;
                for (i, &x) in tree.checkpoint_positions(id).iter().enumerate() {
                    let k = k0 + i;
                    if x >= tables.entropic[k] {
                        raise(&mut out.entropic, tables.reach[k]);
                    }
                    if x <= tables.lower[k] {
                        raise(&mut out.lower, tables.reach[k]);
                    }
                }
            }
            out
        })
        .collect()
}

#[inline]
pub(crate) fn reaches(reach: Option<f64>, r: f64) -> bool {
    reach.is_some_and(|v| v >= r)
}

fn check_r(t: f64, r: f64) -> Result<()> {
    if !(r >= 0.0 && 2.0 * r < t) {
        return Err(invalid(format!("need 0 <= r < t/2 so that [r, t-r] is non-empty, got r = {r}, t = {t}")));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ViolationReport {
    pub mode: EnvelopeMode,
    pub r: f64,
    pub rate: Rate,
    /// `t <= 3r`: outside the regime the theorems are stated for.
    pub outside_regime: bool,
}

/// Fraction of replicas where the named event fires on `[r, t - r]`.
/// Replicas with no extremal particle count as non-violating.
pub fn envelope_violation_rate(set: &SummarySet, mode: EnvelopeMode, r: f64) -> Result<ViolationReport> {
    let t = set.horizon()?;
    check_r(t, r)?;
    let mut hits = 0u64;
    for s in set.replicas() {
        let env = s
            .envelope
            .as_ref()
            .ok_or_else(|| invalid("summaries were built without an envelope spec"))?;
        let fired = match mode {
            EnvelopeMode::Upper => reaches(env.upper, r),
            m => env.extremal.iter().any(|p| reaches(p.get(m), r)),
        };
        hits += fired as u64;
    }
    Ok(ViolationReport {
        mode,
        r,
        rate: Rate::new(hits, set.len() as u64),
        outside_regime: t <= 3.0 * r,
    })
}

/// Fraction of extremal particles, pooled over replicas, whose ancestral path
/// stays strictly inside the tube on `[r, t - r]`.
pub fn tube_containment(set: &SummarySet, r: f64) -> Result<Rate> {
    let t = set.horizon()?;
    check_r(t, r)?;
    let (mut inside, mut total) = (0u64, 0u64);
    for s in set.replicas() {
        let env = s
            .envelope
            .as_ref()
            .ok_or_else(|| invalid("summaries were built without an envelope spec"))?;
        for p in &env.extremal {
            total += 1;
            inside += !reaches(p.tube(), r) as u64;
        }
    }
    Ok(Rate::new(inside, total))
}
