//! Random circle homeomorphisms: simulation, topological invariants, explicit
//! random conjugacies to the canonical models `g_{k,l}`, and classification of
//! pairs up to orientational or topological conjugacy of their dynamics.
//!
//! Numerical code is generic over [`Real`] (`f32` or `f64`); the aliases at
//! the crate root fix `f64`.

pub mod circle;
pub mod classifier;
pub mod conjugacy;
pub mod dynamics;
pub mod error;
pub mod family;
pub mod scalar;
pub mod structure;

pub use error::{Error, Result};
pub use scalar::Real;

pub type CirclePoint = circle::Point<f64>;
pub type CircleArc = circle::Arc<f64>;
pub type RandomHomeoFamily = family::Family<f64>;
pub type NoiseModel = family::NoiseModel<f64>;
pub type NoiseWindow = dynamics::NoiseWindow<f64>;
pub type PullbackSequence = dynamics::PullbackSequence<f64>;
pub type MinimalStructure = structure::MinimalStructure<f64>;
pub type PiecewiseCircleMap = conjugacy::PiecewiseCircleMap<f64>;
pub type Verdict = classifier::Verdict<f64>;
