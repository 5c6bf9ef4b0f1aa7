//! Differentiable single-point GNSS positioning.
//!
//! The crate solves receiver position with Gauss-Newton weighted least
//! squares, differentiates the converged solution with respect to the
//! pseudorange and weight vectors, and pushes those gradients into small
//! multilayer perceptrons that predict per-satellite pseudorange biases
//! and/or weights. Classical elevation and C/N0 weighting models, a seeded
//! urban-canyon scenario generator, and an evaluation harness are included
//! so the learned methods can be benchmarked end to end.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod dataset;
pub mod error;
pub mod geodesy;
pub mod grad;
pub mod model;
pub mod nn;
pub mod pipeline;
pub mod synth;
pub mod wls;

pub use error::{Error, Result};
pub use geodesy::{EcefPosition, EnuVector, GeodeticPosition};
pub use model::{
    Epoch, GnssSystem, PositionState, SatelliteObservation, SolveResult, WeightVector,
};
pub use wls::SolverConfig;
