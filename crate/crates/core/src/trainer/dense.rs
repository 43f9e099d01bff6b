//! Representation clustering on dense inputs with no prediction task:
//! an encoder MLP, Student-t soft assignment and the self-training KL loss
//! against pseudo-labels from a delayed encoder copy.

use alloc::format;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use super::kmeans;
use crate::engine::{adam_step, init, AdamConfig, AdamState, GradMap, ParamSet};
use crate::model::mlp::{self, Layer};
use crate::model::{clustering_backward, clustering_loss, hard_assignments, soft_assign, target_distribution};
use crate::rng;
use crate::{Error, Result, Tensor};

#[derive(Debug, Clone, PartialEq)]
pub struct DenseClustererConfig {
    pub clusters: usize,
    pub alpha: f64,
    /// Hidden ReLU widths of the encoder.
    pub hidden: Vec<usize>,
    /// Output width of the (linear) last encoder layer.
    pub rep_dim: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Steps between target syncs.
    pub sync_period: usize,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct DenseClusterer {
    config: DenseClustererConfig,
    params: ParamSet,
    target: ParamSet,
    layers: Vec<Layer>,
    centroids: usize,
    adam: AdamState,
    step: u64,
    epoch: u64,
}

impl DenseClusterer {
    /// Builds the encoder and sets the centroids by K-means on the initial
    /// representations of `points`.
    pub fn new(config: DenseClustererConfig, points: &Tensor) -> Result<Self> {
        if config.clusters == 0 || config.rep_dim == 0 || config.batch_size == 0 || config.sync_period == 0 {
            return Err(Error::InvalidConfig("dense clusterer sizes must be positive".into()));
        }
        let mut r = rng::seeded(config.seed);
        let mut params = ParamSet::new();
        let mut layers = Vec::new();
        let mut fan_in = points.cols();
        let widths: Vec<usize> = config.hidden.iter().copied().chain([config.rep_dim]).collect();
        for (l, &w) in widths.iter().enumerate() {
            let weight = params.insert(format!("enc.{l}.w"), init::he_normal(&mut r, w, fan_in))?;
            let bias = params.insert(format!("enc.{l}.b"), Tensor::zeros(&[w]))?;
            layers.push(Layer { weight, bias, relu: l + 1 < widths.len() });
            fan_in = w;
        }
        let reps = mlp::infer(&params, &layers, points.clone())?;
        let km = kmeans(&reps, config.clusters, rng::derive(config.seed, 1))?;
        let centroids = params.insert("centroids", km.centroids)?;
        let target = params.clone();
        let adam = AdamState::new(&params, AdamConfig::default());
        Ok(Self {
            config,
            params,
            target,
            layers,
            centroids,
            adam,
            step: 0,
            epoch: 0,
        })
    }

    /// Soft assignments Q′ of `points` under the current encoder.
    pub fn assignments(&self, points: &Tensor) -> Result<Tensor> {
        let reps = mlp::infer(&self.params, &self.layers, points.clone())?;
        soft_assign(&reps, self.params.by_id(self.centroids), self.config.alpha)
    }

    /// Hard cluster of every point.
    pub fn predict(&self, points: &Tensor) -> Result<Vec<usize>> {
        Ok(hard_assignments(&self.assignments(points)?))
    }

    /// One shuffled pass over `points`; returns the mean clustering loss.
    pub fn run_epoch(&mut self, points: &Tensor) -> Result<f64> {
        self.epoch += 1;
        let n = points.rows();
        let d = points.cols();
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng::seeded(rng::derive(self.config.seed, 1000 + self.epoch)));
        let mut total = 0.0;
        let mut batches = 0;
        for chunk in order.chunks(self.config.batch_size) {
            let mut x = Tensor::zeros(&[chunk.len(), d]);
            for (row, &i) in chunk.iter().enumerate() {
                x.row_mut(row).copy_from_slice(points.row(i));
            }
            total += self.step(x)?;
            batches += 1;
        }
        Ok(total / batches.max(1) as f64)
    }

    fn step(&mut self, x: Tensor) -> Result<f64> {
        let alpha = self.config.alpha;
        let mu = self.params.by_id(self.centroids).clone();
        let stale = mlp::infer(&self.target, &self.layers, x.clone())?;
        let p = target_distribution(&soft_assign(&stale, &mu, alpha)?);
        let (reps, trace) = mlp::forward(&self.params, &self.layers, x)?;
        let q = soft_assign(&reps, &mu, alpha)?;
        let (loss, _) = clustering_loss(&p, &q)?;
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss { step: self.step, loss, loss_p: 0.0, loss_c: loss });
        }
        let (d_reps, d_mu) = clustering_backward(&reps, &mu, &p, &q, alpha)?;
        let mut grads: Vec<Tensor> = self.params.iter().map(|(_, t)| Tensor::zeros(t.shape())).collect();
        mlp::backward(&self.params, &self.layers, &trace, d_reps, &mut grads)?;
        grads[self.centroids] = d_mu;
        let mut map = GradMap::new();
        for (id, g) in grads.into_iter().enumerate() {
            map.insert(self.params.name(id), g);
        }
        adam_step(&mut self.params, &map, &mut self.adam, self.config.learning_rate)?;
        self.step += 1;
        if self.step % self.config.sync_period as u64 == 0 {
            for layer in &self.layers {
                for id in [layer.weight, layer.bias] {
                    let name = self.params.name(id);
                    self.target.set(name, self.params.by_id(id).clone())?;
                }
            }
        }
        Ok(loss)
    }
}
