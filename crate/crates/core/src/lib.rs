//! Gibbs sampling for Markov jump processes and continuous-time Bayesian
//! networks via uniformization.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the common types to one precision.

pub mod ctbn;
pub mod diagnostics;
pub mod error;
pub mod experiments;
pub mod ffbs;
pub mod io;
pub mod oracles;
pub mod process;
pub mod sampler;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Generator64 = process::Generator<f64>;
pub type Generator32 = process::Generator<f32>;
pub type MjpPath64 = process::MjpPath<f64>;
pub type MjpPath32 = process::MjpPath<f32>;
pub type MjpProblem64 = sampler::MjpProblem<f64>;
pub type MjpProblem32 = sampler::MjpProblem<f32>;
pub type CtbnModel64 = ctbn::CtbnModel<f64>;
pub type CtbnModel32 = ctbn::CtbnModel<f32>;
pub type CtbnPath64 = ctbn::CtbnPath<f64>;
pub type CtbnPath32 = ctbn::CtbnPath<f32>;
pub type SufficientStats64 = diagnostics::SufficientStats<f64>;
pub type SufficientStats32 = diagnostics::SufficientStats<f32>;
