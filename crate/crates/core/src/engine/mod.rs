//! Event-driven branching Brownian motion with full genealogy.

mod dump;
pub mod fixtures;
mod genealogy;
mod resample;
mod simulate;
mod snapshot;
mod tree;

pub use dump::{write_checkpoints, write_records, CHECKPOINT_HEADER, RECORD_HEADER};
pub use genealogy::{ancestral_path, lineage, mrca, overlap_q};
pub use resample::{resample_leaf_positions, resample_positions_on_skeleton};
pub use simulate::{simulate, simulate_into, SimulationConfig, DEFAULT_GRID_DT, DEFAULT_MAX_PARTICLES};
pub use snapshot::{check_window_against_prune, extremal_snapshot, snapshot_from_leaves, ExtremalSnapshot, Window};
pub use tree::{GenealogyTree, ManualParticle, ParticleId, ParticleRecord, PruneConfig, MIN_PRUNE_MARGIN};

