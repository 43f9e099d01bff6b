//! Batched forward and backward passes of the full network.

use alloc::vec;
use alloc::vec::Vec;

use super::cluster::{clustering_loss, soft_assign, soft_assign_backward};
use super::dims::ModelDims;
use super::loss::{classification_loss, total_loss};
use super::mlp::{self, Layer, MlpTrace};
use super::params::{BreakerParams, Layout, TargetParams};
use crate::engine::{GradMap, ParamSet};
use crate::math;
use crate::{Error, Result, Tensor};

/// Categorical inputs for a batch: `user_features` holds one row of field
/// indices per record, `items` one item id per record.
#[derive(Debug, Clone, Copy)]
pub struct Inputs<'a> {
    pub user_features: &'a [usize],
    pub items: &'a [usize],
}

impl<'a> Inputs<'a> {
    pub fn new(user_features: &'a [usize], items: &'a [usize]) -> Self {
        Self {
            user_features,
            items,
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

/// How tower outputs are mixed into the final prediction.
#[derive(Debug, Clone, Copy)]
pub enum Weighting<'a> {
    /// Soft assignments of the main network; gradients flow through them.
    Soft,
    /// Equal weights 1/K and no clustering signal.
    Uniform,
    /// Caller-provided constant `[N, K]` weights.
    Fixed(&'a Tensor),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossTerms {
    pub total: f64,
    pub classification: f64,
    pub clustering: f64,
}

impl LossTerms {
    pub fn is_finite(&self) -> bool {
        self.total.is_finite() && self.classification.is_finite() && self.clustering.is_finite()
    }
}

/// Everything the backward pass needs from the forward pass.
#[derive(Debug, Clone)]
pub struct Forward {
    /// E_u, `[N, d_u^e]`
    pub user_rep: Tensor,
    /// E_i, `[N, d_i^e]`
    pub item_rep: Tensor,
    /// Q′ from the main network, `[N, K]`
    pub assign: Tensor,
    /// Mixing weights actually used, `[N, K]`
    pub weights: Tensor,
    /// Per-tower sigmoid outputs ŷ_c, `[N, K]`
    pub tower_out: Tensor,
    /// Mixed prediction ŷ before clamping
    pub score: Vec<f64>,
    soft: bool,
    user_x: Tensor,
    item_x: Tensor,
    user_trace: MlpTrace,
    item_trace: MlpTrace,
    tower_in: Tensor,
    tower_traces: Vec<MlpTrace>,
}

impl Forward {
    /// Distance of the closest ReLU input to its kink, over every MLP of
    /// the pass.
    pub fn relu_margin(&self, layout: &Layout) -> f64 {
        let mut m = self
            .user_trace
            .relu_margin(&layout.user_mlp)
            .min(self.item_trace.relu_margin(&layout.item_mlp));
        for (trace, layers) in self.tower_traces.iter().zip(&layout.towers) {
            m = m.min(trace.relu_margin(layers));
        }
        m
    }
}

fn check_inputs(dims: &ModelDims, inputs: &Inputs<'_>) -> Result<()> {
    let m = dims.user_fields();
    if inputs.user_features.len() != inputs.len() * m {
        return Err(Error::LengthMismatch {
            left: inputs.user_features.len(),
            right: inputs.len() * m,
        });
    }
    Ok(())
}

/// Concatenated user-field embeddings `[N, m·d]`.
fn gather_users(ps: &ParamSet, layout: &Layout, dims: &ModelDims, feats: &[usize]) -> Result<Tensor> {
    let m = dims.user_fields();
    let d = dims.embedding_dim;
    let n = if m == 0 { 0 } else { feats.len() / m };
    let mut x = Tensor::zeros(&[n, m * d]);
    for (r, row) in feats.chunks_exact(m).enumerate() {
        let out = x.row_mut(r);
        for (j, &idx) in row.iter().enumerate() {
            let table = ps.by_id(layout.user_emb[j]);
            if idx >= table.rows() {
                return Err(Error::IndexOutOfRange {
                    position: j,
                    index: idx,
                    cardinality: table.rows(),
                });
            }
            out[j * d..(j + 1) * d].copy_from_slice(table.row(idx));
        }
    }
    Ok(x)
}

fn gather_items(ps: &ParamSet, layout: &Layout, dims: &ModelDims, items: &[usize]) -> Result<Tensor> {
    let table = ps.by_id(layout.item_emb);
    let d = dims.embedding_dim;
    let mut x = Tensor::zeros(&[items.len(), d]);
    for (r, &item) in items.iter().enumerate() {
        if item >= table.rows() {
            return Err(Error::IndexOutOfRange {
                position: dims.user_fields(),
                index: item,
                cardinality: table.rows(),
            });
        }
        x.row_mut(r).copy_from_slice(table.row(item));
    }
    Ok(x)
}

/// E_u from any parameter set that carries the user-side subset (the main
/// network or its target copy).
pub fn user_representations(
    ps: &ParamSet,
    layout: &Layout,
    dims: &ModelDims,
    user_features: &[usize],
) -> Result<Tensor> {
    let x = gather_users(ps, layout, dims, user_features)?;
    mlp::infer(ps, &layout.user_mlp, x)
}

pub fn item_representations(
    ps: &ParamSet,
    layout: &Layout,
    dims: &ModelDims,
    items: &[usize],
) -> Result<Tensor> {
    let x = gather_items(ps, layout, dims, items)?;
    mlp::infer(ps, &layout.item_mlp, x)
}

/// Representation extraction: `(E_u, E_i)` for a batch.
pub fn rem_forward(params: &BreakerParams, inputs: &Inputs<'_>) -> Result<(Tensor, Tensor)> {
    check_inputs(&params.dims, inputs)?;
    let eu = user_representations(&params.params, &params.layout, &params.dims, inputs.user_features)?;
    let ei = item_representations(&params.params, &params.layout, &params.dims, inputs.items)?;
    Ok((eu, ei))
}

/// E_u computed with the stale target parameters.
pub fn target_representations(
    target: &TargetParams,
    main: &BreakerParams,
    user_features: &[usize],
) -> Result<Tensor> {
    user_representations(&target.params, &main.layout, &main.dims, user_features)
}

/// Row-wise concatenation `[E_u ⊕ E_i]`.
pub fn concat_reps(user_rep: &Tensor, item_rep: &Tensor) -> Tensor {
    let n = user_rep.rows();
    let (du, di) = (user_rep.cols(), item_rep.cols());
    let mut out = Tensor::zeros(&[n, du + di]);
    for r in 0..n {
        let row = out.row_mut(r);
        row[..du].copy_from_slice(user_rep.row(r));
        row[du..].copy_from_slice(item_rep.row(r));
    }
    out
}

/// Per-tower scores ŷ_c = sigmoid(MLP_k(E_in)) for a batch, `[N, K]`.
pub fn cpmm_forward(params: &BreakerParams, user_rep: &Tensor, item_rep: &Tensor) -> Result<Tensor> {
    let tower_in = concat_reps(user_rep, item_rep);
    let (out, _) = towers_forward(&params.params, &params.layout.towers, &tower_in, false)?;
    Ok(out)
}

fn towers_forward(
    ps: &ParamSet,
    towers: &[Vec<Layer>],
    tower_in: &Tensor,
    keep: bool,
) -> Result<(Tensor, Vec<MlpTrace>)> {
    let n = tower_in.rows();
    let k = towers.len();
    let mut out = Tensor::zeros(&[n, k]);
    let mut traces = Vec::with_capacity(if keep { k } else { 0 });
    for (t, layers) in towers.iter().enumerate() {
        let logits = if keep {
            let (z, trace) = mlp::forward(ps, layers, tower_in.clone())?;
            traces.push(trace);
            z
        } else {
            mlp::infer(ps, layers, tower_in.clone())?
        };
        for r in 0..n {
            out.row_mut(r)[t] = math::sigmoid(logits.data()[r]);
        }
    }
    Ok((out, traces))
}

fn mixing_weights(weighting: &Weighting<'_>, assign: &Tensor) -> Result<Tensor> {
    match weighting {
        Weighting::Soft => Ok(assign.clone()),
        Weighting::Uniform => {
            let mut w = Tensor::zeros(assign.shape());
            w.fill(1.0 / assign.cols() as f64);
            Ok(w)
        }
        Weighting::Fixed(w) => {
            w.expect_shape("fixed tower weights", assign.shape())?;
            Ok((*w).clone())
        }
    }
}

/// Full forward pass, keeping intermediates for [`backward`].
pub fn forward(params: &BreakerParams, inputs: &Inputs<'_>, weighting: Weighting<'_>) -> Result<Forward> {
    let dims = &params.dims;
    let ps = &params.params;
    let layout = &params.layout;
    check_inputs(dims, inputs)?;
    if inputs.is_empty() {
        return Err(Error::InvalidConfig("empty batch".into()));
    }

    let user_x = gather_users(ps, layout, dims, inputs.user_features)?;
    let (user_rep, user_trace) = mlp::forward(ps, &layout.user_mlp, user_x.clone())?;
    let item_x = gather_items(ps, layout, dims, inputs.items)?;
    let (item_rep, item_trace) = mlp::forward(ps, &layout.item_mlp, item_x.clone())?;

    let assign = soft_assign(&user_rep, params.centroids(), dims.alpha)?;
    let weights = mixing_weights(&weighting, &assign)?;

    let tower_in = concat_reps(&user_rep, &item_rep);
    let (tower_out, tower_traces) = towers_forward(ps, &layout.towers, &tower_in, true)?;

    let score = (0..inputs.len())
        .map(|r| super::loss::aggregate(tower_out.row(r), weights.row(r)))
        .collect();

    Ok(Forward {
        user_rep,
        item_rep,
        assign,
        weights,
        tower_out,
        score,
        soft: matches!(weighting, Weighting::Soft),
        user_x,
        item_x,
        user_trace,
        item_trace,
        tower_in,
        tower_traces,
    })
}

/// Loss terms for a finished forward pass. `targets` are the pseudo-labels
/// `P`; without them the clustering term is zero.
pub fn losses(fwd: &Forward, labels: &[u8], targets: Option<&Tensor>, lambda: f64) -> Result<LossTerms> {
    let (lp, _) = classification_loss(&fwd.score, labels)?;
    let lc = match targets {
        Some(p) => clustering_loss(p, &fwd.assign)?.0,
        None => 0.0,
    };
    Ok(LossTerms {
        total: total_loss(lp, lc, lambda),
        classification: lp,
        clustering: lc,
    })
}

/// Gradients of `L = L_p + λ·L_c` with respect to every parameter,
/// including the centroids. `P` is held constant.
pub fn backward(
    params: &BreakerParams,
    inputs: &Inputs<'_>,
    fwd: &Forward,
    labels: &[u8],
    targets: Option<&Tensor>,
    lambda: f64,
) -> Result<(LossTerms, GradMap)> {
    let dims = &params.dims;
    let ps = &params.params;
    let layout = &params.layout;
    let n = inputs.len();
    let k = dims.clusters;

    let (lp, g_score) = classification_loss(&fwd.score, labels)?;

    let mut g_tower = Tensor::zeros(&[n, k]);
    let mut g_assign = Tensor::zeros(&[n, k]);
    for r in 0..n {
        let w = fwd.weights.row(r);
        let y = fwd.tower_out.row(r);
        let gs = g_score[r];
        let gt = g_tower.row_mut(r);
        for t in 0..k {
            gt[t] = gs * w[t] * y[t] * (1.0 - y[t]);
        }
        if fwd.soft {
            let ga = g_assign.row_mut(r);
            for t in 0..k {
                ga[t] = gs * y[t];
            }
        }
    }

    let mut lc = 0.0;
    if let Some(p) = targets {
        let (loss, g) = clustering_loss(p, &fwd.assign)?;
        lc = loss;
        if lambda != 0.0 {
            for (a, b) in g_assign.data_mut().iter_mut().zip(g.data()) {
                *a += lambda * b;
            }
        }
    }

    let mut grads: Vec<Tensor> = ps.iter().map(|(_, t)| Tensor::zeros(t.shape())).collect();

    let (mut g_user_rep, g_mu) = soft_assign_backward(
        &fwd.user_rep,
        params.centroids(),
        &fwd.assign,
        &g_assign,
        dims.alpha,
    )?;
    grads[layout.centroids].add_assign(&g_mu);

    let mut g_tower_in = Tensor::zeros(fwd.tower_in.shape());
    for (t, layers) in layout.towers.iter().enumerate() {
        let g_logit = Tensor::new(vec![n, 1], (0..n).map(|r| g_tower.row(r)[t]).collect())?;
        let g_in = mlp::backward(ps, layers, &fwd.tower_traces[t], g_logit, &mut grads)?;
        g_tower_in.add_assign(&g_in);
    }

    let du = dims.user_rep_dim();
    let mut g_item_rep = Tensor::zeros(fwd.item_rep.shape());
    for r in 0..n {
        let row = g_tower_in.row(r);
        for (a, b) in g_user_rep.row_mut(r).iter_mut().zip(&row[..du]) {
            *a += b;
        }
        g_item_rep.row_mut(r).copy_from_slice(&row[du..]);
    }

    let g_user_x = mlp::backward(ps, &layout.user_mlp, &fwd.user_trace, g_user_rep, &mut grads)?;
    let g_item_x = mlp::backward(ps, &layout.item_mlp, &fwd.item_trace, g_item_rep, &mut grads)?;
    debug_assert_eq!(g_user_x.shape(), fwd.user_x.shape());
    debug_assert_eq!(g_item_x.shape(), fwd.item_x.shape());

    let d = dims.embedding_dim;
    let m = dims.user_fields();
    for (r, row) in inputs.user_features.chunks_exact(m).enumerate() {
        let g = g_user_x.row(r);
        for (j, &idx) in row.iter().enumerate() {
            let table = &mut grads[layout.user_emb[j]];
            for (a, b) in table.row_mut(idx).iter_mut().zip(&g[j * d..(j + 1) * d]) {
                *a += b;
            }
        }
    }
    for (r, &item) in inputs.items.iter().enumerate() {
        let table = &mut grads[layout.item_emb];
        for (a, b) in table.row_mut(item).iter_mut().zip(g_item_x.row(r)) {
            *a += b;
        }
    }

    let mut map = GradMap::new();
    for (id, g) in grads.into_iter().enumerate() {
        map.insert(ps.name(id), g);
    }
    Ok((
        LossTerms {
            total: total_loss(lp, lc, lambda),
            classification: lp,
            clustering: lc,
        },
        map,
    ))
}

/// Loss of `params` on a batch with fixed pseudo-labels; the function
/// differentiated by [`backward`].
pub fn evaluate_loss(
    params: &BreakerParams,
    inputs: &Inputs<'_>,
    labels: &[u8],
    weighting: Weighting<'_>,
    targets: Option<&Tensor>,
    lambda: f64,
) -> Result<LossTerms> {
    let fwd = forward(params, inputs, weighting)?;
    losses(&fwd, labels, targets, lambda)
}
