//! Minimal dense differentiation engine.
//!
//! Each primitive exposes a forward function and a matching backward
//! function; the model composes them by hand instead of recording a tape.

pub mod adam;
pub mod gradcheck;
pub mod init;
pub mod ops;
pub mod params;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use gradcheck::{finite_diff_check, finite_diff_check_where, CheckOptions, GradCheck};
pub use ops::{
    affine_backward, affine_forward, embedding_backward, embedding_lookup, relu, relu_backward,
    sigmoid, sigmoid_backward, AffineGrad,
};
pub use params::{GradMap, ParamSet};
