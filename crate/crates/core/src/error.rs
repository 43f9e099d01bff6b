use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("feature {position}: index {index} out of range for cardinality {cardinality}")]
    IndexOutOfRange {
        position: usize,
        index: usize,
        cardinality: usize,
    },
    #[error("shape mismatch in {context}: expected {expected:?}, found {found:?}")]
    ShapeMismatch {
        context: &'static str,
        expected: Vec<usize>,
        found: Vec<usize>,
    },
    #[error("tensor shape {shape:?} does not hold {len} values")]
    BadTensor { shape: Vec<usize>, len: usize },
    #[error("non-finite gradient for parameter `{0}`")]
    NonFiniteGradient(String),
    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),
    #[error("non-finite loss at step {step}: loss={loss} loss_p={loss_p} loss_c={loss_c}")]
    NonFiniteLoss {
        step: u64,
        loss: f64,
        loss_p: f64,
        loss_c: f64,
    },
    #[error("non-finite loss value during gradient check")]
    NonFiniteCheck,
    #[error("label {0} is not 0 or 1")]
    InvalidLabel(u8),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("unknown item id {0}")]
    UnknownItem(usize),
    #[error("{0}")]
    UndefinedMetric(String),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("tower {0} has zero variance")]
    ZeroVariance(usize),
    #[error("cannot form {clusters} clusters from {points} points")]
    TooFewPoints { points: usize, clusters: usize },
}
