//! Simulation and verification engine for two-color randomly reinforced urns
//! with fixed, modified and adaptive replacement thresholds.
//!
//! The numeric core is generic over [`Real`] (or the weaker [`Scalar`] for
//! the bare update rule); the aliases below fix the common choices.

// `!(a < b)` is used deliberately so NaN fails every check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod rng;
mod scalar;
pub mod simulate;
pub mod stats;
pub mod thresholds;
pub mod urn;
pub mod verify;

pub use error::{Error, Result};
pub use scalar::{Real, Scalar};

pub type Rational64 = num_rational::Ratio<i64>;
pub type Rational128 = num_rational::Ratio<i128>;

pub type Urn = urn::UrnState<f64>;
pub type Urn32 = urn::UrnState<f32>;
pub type ExactUrn = urn::UrnState<Rational64>;
pub type RunConfig64 = simulate::RunConfig<f64>;
pub type TrajectoryRecord64 = simulate::TrajectoryRecord<f64>;
pub type Policy64 = thresholds::ThresholdPolicy<f64>;
pub type Reinforcement64 = urn::ReinforcementSpec<f64>;
