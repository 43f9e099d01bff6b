use alloc::vec::Vec;

use crate::math;
use crate::{Error, Result};

/// Predictions are clamped to `[ε, 1 − ε]` before the log loss.
pub const PREDICTION_CLAMP: f64 = 1e-7;

/// Mean binary log loss and its gradient with respect to each prediction.
/// The gradient is zero where the clamp is active.
pub fn classification_loss(scores: &[f64], labels: &[u8]) -> Result<(f64, Vec<f64>)> {
    if scores.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: scores.len(),
            right: labels.len(),
        });
    }
    if scores.is_empty() {
        return Err(Error::InvalidConfig("empty batch".into()));
    }
    let n = scores.len() as f64;
    let mut loss = 0.0;
    let mut grad = Vec::with_capacity(scores.len());
    for (&s, &y) in scores.iter().zip(labels) {
        let clamped = s.clamp(PREDICTION_CLAMP, 1.0 - PREDICTION_CLAMP);
        let active = clamped == s;
        let g = match y {
            1 => {
                loss -= math::ln(clamped);
                -1.0 / clamped
            }
            0 => {
                loss -= math::ln(1.0 - clamped);
                1.0 / (1.0 - clamped)
            }
            other => return Err(Error::InvalidLabel(other)),
        };
        grad.push(if active { g / n } else { 0.0 });
    }
    Ok((loss / n, grad))
}

/// L = L_p + λ·L_c
pub fn total_loss(classification: f64, clustering: f64, lambda: f64) -> f64 {
    classification + lambda * clustering
}

/// ŷ = Σₖ ŷ_c^k · wₖ
pub fn aggregate(tower_scores: &[f64], weights: &[f64]) -> f64 {
    tower_scores.iter().zip(weights).map(|(a, b)| a * b).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::LN_2;

    #[test]
    fn perfect_prediction_is_clamped() {
        let (l, g) = classification_loss(&[1.0], &[1]).unwrap();
        assert!((l - -libm::log(1.0 - PREDICTION_CLAMP)).abs() < 1e-20);
        assert!((l - 1e-7).abs() < 1e-13);
        assert_eq!(g, alloc::vec![0.0]);
    }

    #[test]
    fn coin_flip_losses() {
        assert!((classification_loss(&[0.5], &[1]).unwrap().0 - LN_2).abs() < 1e-15);
        let (l, g) = classification_loss(&[0.5, 0.5], &[1, 0]).unwrap();
        assert!((l - LN_2).abs() < 1e-15);
        assert_eq!(g, alloc::vec![-1.0, 1.0]);
    }

    #[test]
    fn rejects_bad_labels() {
        assert_eq!(
            classification_loss(&[0.5], &[2]).unwrap_err(),
            Error::InvalidLabel(2)
        );
    }

    #[test]
    fn total_and_aggregate() {
        assert_eq!(total_loss(0.7, 0.3, 0.0), 0.7);
        assert!((total_loss(0.7, 0.3, 0.1) - 0.73).abs() < 1e-15);
        assert_eq!(total_loss(0.7, 0.0, 1.0), 0.7);
        assert_eq!(aggregate(&[0.2, 0.6], &[0.0, 1.0]), 0.6);
        assert!((aggregate(&[0.2, 0.6], &[0.5, 0.5]) - 0.4).abs() < 1e-15);
        assert!((aggregate(&[0.3, 0.3, 0.3], &[0.2, 0.5, 0.3]) - 0.3).abs() < 1e-15);
    }
}
