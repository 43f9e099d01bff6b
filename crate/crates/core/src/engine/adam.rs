use alloc::string::ToString;
use alloc::vec::Vec;

use super::params::{GradMap, ParamSet};
use crate::math;
use crate::{Error, Result, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First and second moments aligned with a [`ParamSet`]'s order.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub t: u64,
    pub m: Vec<Tensor>,
    pub v: Vec<Tensor>,
}

impl AdamState {
    pub fn new(params: &ParamSet, config: AdamConfig) -> Self {
        let zeros: Vec<Tensor> = params.iter().map(|(_, p)| Tensor::zeros(p.shape())).collect();
        Self {
            config,
            t: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }
}

/// One bias-corrected Adam update. Parameters without an entry in `grads`
/// keep their values and moments. All gradients are validated before any
/// parameter is touched.
pub fn adam_step(
    params: &mut ParamSet,
    grads: &GradMap,
    state: &mut AdamState,
    lr: f64,
) -> Result<()> {
    if !(lr > 0.0) {
        return Err(Error::InvalidConfig("learning rate must be positive".into()));
    }
    if state.m.len() != params.len() {
        return Err(Error::LengthMismatch {
            left: state.m.len(),
            right: params.len(),
        });
    }
    grads.validate(params)?;
    for (name, g) in grads.iter() {
        if !g.is_finite() {
            return Err(Error::NonFiniteGradient(name.to_string()));
        }
    }

    state.t += 1;
    let AdamConfig { beta1, beta2, eps } = state.config;
    let t = state.t as i32;
    let bc1 = 1.0 - libm::pow(beta1, f64::from(t));
    let bc2 = 1.0 - libm::pow(beta2, f64::from(t));

    for id in 0..params.len() {
        let Some(g) = grads.get(params.name(id)) else {
            continue;
        };
        let m = state.m[id].data_mut();
        let v = state.v[id].data_mut();
        let w = params.values_mut(id);
        for i in 0..w.len() {
            let gi = g.data()[i];
            m[i] = beta1 * m[i] + (1.0 - beta1) * gi;
            v[i] = beta2 * v[i] + (1.0 - beta2) * gi * gi;
            let m_hat = m[i] / bc1;
            let v_hat = v[i] / bc2;
            w[i] -= lr * m_hat / (math::sqrt(v_hat) + eps);
        }
    }
    Ok(())
}
