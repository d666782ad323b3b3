//! Estimators for the extremal statistics of a replica campaign.

pub mod counts;
pub mod envelopes;
pub mod gaps;
pub mod genealogy;
pub mod gibbs;
pub mod inference;
pub mod martingale;
pub mod summary;
pub mod tails;

pub use counts::{
    exceedance_counts, exceedance_first_moment, exceedance_formula, local_finiteness_curve, pure_birth_pmf, tightness,
    ExceedanceReport, TightnessReport,
};
pub use envelopes::{envelope_violation_rate, tube_containment, EnvelopeMode, ViolationReport};
pub use gaps::{gap_statistics, poisson_control_gaps, poisson_gap_mean, GapReport, GapRow};
pub use genealogy::{
    extremal_pair_overlaps, genealogy_concentration, OverlapCount, overlap_histogram, overlap_mass_inside, pair_inside_fraction,
    Histogram,
};
pub use gibbs::{gibbs_overlap_distribution, gibbs_pair_indices, overlap_masses, GibbsSample, OverlapMasses};
pub use inference::{MeanEstimate, Rate};
pub use martingale::{derivative_martingale, derivative_martingale_recentred};
pub use summary::{summarize, GibbsConfig, ReplicaSummary, SummaryConfig, SummarySet};
pub use tails::{max_law_tail, TailConfig, TailReport};
