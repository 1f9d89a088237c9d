//! Deep multiclass graph description: a node-embedding network trained
//! jointly with one soft hypersphere per community, so that nodes left
//! outside every sphere are reported as community outliers.
//!
//! The usual flow is [`synth`] or [`graph`] for input, [`trainer::train`]
//! for the alternating optimisation, and [`eval`] for scoring.

pub mod autoencoder;
pub mod cli;
pub mod error;
pub mod eval;
pub mod graph;
pub mod spheres;
pub mod synth;
pub mod trainer;

pub use error::{DmgdError, Result};
pub use graph::{Graph, GroundTruth};
pub use spheres::SphereState;
pub use trainer::{train, AlphaSpec, TrainConfig, TrainedArtifacts};
