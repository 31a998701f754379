//! Hierarchical belief-space coverage planning on grid worlds.

pub mod baselines;
pub mod belief;
pub mod executive;
pub mod gcp;
pub mod geometry;
pub mod harness;
pub mod irm;
pub mod lcp;
pub mod reward;
pub mod world;
