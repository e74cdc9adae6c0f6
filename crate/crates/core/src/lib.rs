//! Temporal logic neural network.
//!
//! A differentiable network whose parameters spell out a weighted signal
//! temporal logic formula. It is trained by per-sample gradient descent
//! with online neuron pruning and growth, and a readable formula can be
//! extracted from the trained parameters.
//!
//! All numeric code is generic over [`Scalar`] (`f32` or `f64`); the
//! `*64` / `*32` aliases below name the concrete instantiations.

pub mod error;
pub mod extraction;
pub mod learner;
pub mod logic;
pub mod network;
pub mod quantizer;
pub mod scalar;
pub mod signals;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Formula64 = logic::Formula<f64>;
pub type Formula32 = logic::Formula<f32>;
pub type Signal64 = logic::Signal<f64>;
pub type Signal32 = logic::Signal<f32>;
pub type QuantSpec64 = quantizer::QuantSpec<f64>;
pub type QuantSpec32 = quantizer::QuantSpec<f32>;
pub type TlnnParams64 = network::TlnnParams<f64>;
pub type TlnnParams32 = network::TlnnParams<f32>;
pub type Dataset64 = signals::Dataset<f64>;
pub type Dataset32 = signals::Dataset<f32>;
pub type TrainConfig64 = learner::TrainConfig<f64>;
pub type TrainConfig32 = learner::TrainConfig<f32>;
pub type Metrics64 = learner::Metrics<f64>;
pub type Metrics32 = learner::Metrics<f32>;
