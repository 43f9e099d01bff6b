//! Fully connected stacks built from the engine's affine and ReLU primitives.

use alloc::vec::Vec;

use crate::engine::{affine_backward, affine_forward, relu, relu_backward, ParamSet};
use crate::{Result, Tensor};

/// One affine layer addressed by parameter ids, optionally followed by ReLU.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layer {
    pub weight: usize,
    pub bias: usize,
    pub relu: bool,
}

/// Per-layer inputs and pre-activations kept for the backward pass.
#[derive(Debug, Clone, Default)]
pub struct MlpTrace {
    inputs: Vec<Tensor>,
    pre: Vec<Tensor>,
}

impl MlpTrace {
    /// Smallest |pre-activation| over the ReLU layers of `layers`.
    pub fn relu_margin(&self, layers: &[Layer]) -> f64 {
        layers
            .iter()
            .zip(&self.pre)
            .filter(|(l, _)| l.relu)
            .flat_map(|(_, z)| z.data().iter())
            .fold(f64::INFINITY, |m, v| m.min(v.abs()))
    }
}

pub fn forward(ps: &ParamSet, layers: &[Layer], x: Tensor) -> Result<(Tensor, MlpTrace)> {
    let mut trace = MlpTrace::default();
    let mut h = x;
    for layer in layers {
        let z = affine_forward(&h, ps.by_id(layer.weight), ps.by_id(layer.bias))?;
        let out = if layer.relu { relu(&z) } else { z.clone() };
        trace.inputs.push(h);
        trace.pre.push(z);
        h = out;
    }
    Ok((h, trace))
}

/// Forward pass without keeping intermediates.
pub fn infer(ps: &ParamSet, layers: &[Layer], x: Tensor) -> Result<Tensor> {
    let mut h = x;
    for layer in layers {
        let z = affine_forward(&h, ps.by_id(layer.weight), ps.by_id(layer.bias))?;
        h = if layer.relu { relu(&z) } else { z };
    }
    Ok(h)
}

/// Accumulates parameter gradients into `grads` (indexed like `ps`) and
/// returns the gradient with respect to the stack's input.
pub fn backward(
    ps: &ParamSet,
    layers: &[Layer],
    trace: &MlpTrace,
    g: Tensor,
    grads: &mut [Tensor],
) -> Result<Tensor> {
    let mut g = g;
    for (l, layer) in layers.iter().enumerate().rev() {
        if layer.relu {
            g = relu_backward(&trace.pre[l], &g);
        }
        let ag = affine_backward(&trace.inputs[l], ps.by_id(layer.weight), &g)?;
        grads[layer.weight].add_assign(&ag.dw);
        grads[layer.bias].add_assign(&ag.db);
        g = ag.dx;
    }
    Ok(g)
}
