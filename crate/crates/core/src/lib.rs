//! Branching Brownian motion: simulation with exact genealogy, envelope and
//! extremal statistics, Brownian-bridge oracles and an F-KPP front solver.

pub mod bridge;
pub mod campaign;
pub mod engine;
pub mod envelope;
pub mod error;
pub mod fkpp;
pub mod kernels;
pub mod path;
pub mod stats;

pub use error::{Error, Result};
