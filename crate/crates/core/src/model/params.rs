use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::dims::ModelDims;
use super::mlp::Layer;
use crate::engine::{init, ParamSet};
use crate::rng::{self, Rng};
use crate::{Error, Result, Tensor};

/// Standard deviation for embeddings and output layers.
pub const SMALL_INIT_STD: f64 = 0.01;

pub const CENTROIDS_NAME: &str = "centroids";

/// Parameter ids of every component, resolved once at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    pub user_emb: Vec<usize>,
    pub user_mlp: Vec<Layer>,
    pub item_emb: usize,
    pub item_mlp: Vec<Layer>,
    pub towers: Vec<Vec<Layer>>,
    pub centroids: usize,
    /// Parameters `0..user_len` form the user-side subset mirrored into the
    /// target network.
    pub user_len: usize,
}

/// All trainable arrays of the network plus the cluster centroids.
#[derive(Debug, Clone, PartialEq)]
pub struct BreakerParams {
    pub dims: ModelDims,
    pub params: ParamSet,
    pub layout: Layout,
}

impl BreakerParams {
    /// Draws every tensor from a stream seeded with `seed`, in a fixed
    /// parameter order. Centroids start at zero and are set by K-means.
    pub fn init(dims: ModelDims, seed: u64) -> Result<Self> {
        let mut r = rng::seeded(seed);
        Self::init_with(dims, &mut r)
    }

    pub fn init_with(dims: ModelDims, r: &mut Rng) -> Result<Self> {
        dims.validate()?;
        let d = dims.embedding_dim;
        let mut ps = ParamSet::new();

        let mut user_emb = Vec::new();
        for (j, &card) in dims.user_cardinalities.iter().enumerate() {
            let t = init::normal(r, &[card, d], SMALL_INIT_STD);
            user_emb.push(ps.insert(format!("user.emb.{j}"), t)?);
        }
        let user_mlp = rem_stack(&mut ps, r, "user", dims.user_input_dim(), &dims.rem_widths)?;
        let user_len = ps.len();

        let item_emb = ps.insert("item.emb", init::normal(r, &[dims.n_items, d], SMALL_INIT_STD))?;
        let item_mlp = rem_stack(&mut ps, r, "item", dims.item_input_dim(), &dims.rem_widths)?;

        let mut towers = Vec::with_capacity(dims.clusters);
        for k in 0..dims.clusters {
            let mut layers = Vec::new();
            let mut fan_in = dims.tower_input_dim();
            for (l, &w) in dims.tower_widths.iter().enumerate() {
                layers.push(dense(&mut ps, &format!("tower.{k}.{l}"), init::he_normal(r, w, fan_in), true)?);
                fan_in = w;
            }
            let l = dims.tower_widths.len();
            let out = init::normal(r, &[1, fan_in], SMALL_INIT_STD);
            layers.push(dense(&mut ps, &format!("tower.{k}.{l}"), out, false)?);
            towers.push(layers);
        }

        let centroids = ps.insert(CENTROIDS_NAME, Tensor::zeros(&[dims.clusters, dims.user_rep_dim()]))?;

        Ok(Self {
            dims,
            params: ps,
            layout: Layout {
                user_emb,
                user_mlp,
                item_emb,
                item_mlp,
                towers,
                centroids,
                user_len,
            },
        })
    }

    pub fn centroids(&self) -> &Tensor {
        self.params.by_id(self.layout.centroids)
    }

    pub fn set_centroids(&mut self, mu: Tensor) -> Result<()> {
        self.params.set(CENTROIDS_NAME, mu)
    }

    /// Rebuilds the layout for a parameter set loaded from storage, checking
    /// that every expected tensor is present with the expected shape.
    pub fn from_params(dims: ModelDims, params: ParamSet) -> Result<Self> {
        let fresh = Self::init(dims, 0)?;
        if fresh.params.len() != params.len() {
            return Err(Error::LengthMismatch {
                left: fresh.params.len(),
                right: params.len(),
            });
        }
        for ((expected_name, expected), (name, t)) in fresh.params.iter().zip(params.iter()) {
            if expected_name != name {
                return Err(Error::UnknownParameter(String::from(name)));
            }
            if expected.shape() != t.shape() {
                return Err(Error::ShapeMismatch {
                    context: "stored parameter",
                    expected: expected.shape().to_vec(),
                    found: t.shape().to_vec(),
                });
            }
        }
        Ok(Self {
            dims: fresh.dims,
            params,
            layout: fresh.layout,
        })
    }
}

fn rem_stack(
    ps: &mut ParamSet,
    r: &mut Rng,
    side: &str,
    input_dim: usize,
    widths: &[usize],
) -> Result<Vec<Layer>> {
    let mut layers = Vec::with_capacity(widths.len());
    let mut fan_in = input_dim;
    for (l, &w) in widths.iter().enumerate() {
        // Hidden layers use ReLU; the representation layer stays linear.
        let hidden = l + 1 < widths.len();
        layers.push(dense(ps, &format!("{side}.rem.{l}"), init::he_normal(r, w, fan_in), hidden)?);
        fan_in = w;
    }
    Ok(layers)
}

fn dense(ps: &mut ParamSet, prefix: &str, weight: Tensor, relu: bool) -> Result<Layer> {
    let out = weight.shape()[0];
    let weight = ps.insert(format!("{prefix}.w"), weight)?;
    let bias = ps.insert(format!("{prefix}.b"), Tensor::zeros(&[out]))?;
    Ok(Layer { weight, bias, relu })
}

/// Stale copy of the user embeddings and user representation MLP.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetParams {
    pub params: ParamSet,
}

impl TargetParams {
    pub fn snapshot(main: &BreakerParams) -> Self {
        let mut ps = ParamSet::new();
        for (name, t) in main.params.iter().take(main.layout.user_len) {
            ps.insert(name, t.clone()).expect("names are unique");
        }
        Self { params: ps }
    }

    /// Overwrites the copy with the current user-side subset of `main`.
    pub fn sync(&mut self, main: &BreakerParams) -> Result<()> {
        if self.params.len() != main.layout.user_len {
            return Err(Error::LengthMismatch {
                left: self.params.len(),
                right: main.layout.user_len,
            });
        }
        for id in 0..self.params.len() {
            let src = main.params.by_id(id);
            self.params.by_id(id).expect_shape("target sync", src.shape())?;
            self.params.values_mut(id).copy_from_slice(src.data());
        }
        Ok(())
    }

    /// max |θ⁻ − user-subset(θ)| over all mirrored values.
    pub fn max_abs_diff(&self, main: &BreakerParams) -> f64 {
        (0..self.params.len())
            .map(|id| self.params.by_id(id).max_abs_diff(main.params.by_id(id)))
            .fold(0.0, f64::max)
    }
}

/// Free-function form of [`TargetParams::sync`].
pub fn sync_target(main: &BreakerParams, target: &mut TargetParams) -> Result<()> {
    target.sync(main)
}
