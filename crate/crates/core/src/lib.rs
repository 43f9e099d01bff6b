//! Allocation-only core of the Breaker single-slot recommender.
//!
//! The crate holds everything that is pure computation: a small dense
//! differentiation engine, the Breaker network with its clustering and
//! multi-tower heads, the training loop with a delayed target network,
//! a synthetic randomized-exposure data generator and the evaluation
//! metrics. File formats and the command-line driver live in the `breaker`
//! crate.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod data;
pub mod engine;
pub mod error;
pub mod eval;
pub mod math;
pub mod metrics;
pub mod model;
pub mod rng;
pub mod tensor;
pub mod trainer;
pub mod verify;

pub use error::{Error, Result};
pub use tensor::Tensor;
