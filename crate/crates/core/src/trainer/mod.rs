//! Mini-batch training with K-means centroid initialization and a delayed
//! target network.

mod config;
mod dense;
mod kmeans;

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

pub use config::{TrainConfig, Variant};
pub use dense::{DenseClusterer, DenseClustererConfig};
pub use kmeans::{kmeans, KMeans, KMEANS_MAX_ITERS, KMEANS_TOLERANCE};

use crate::data::{iterate_batches, Batch, Record};
use crate::engine::{adam_step, AdamState};
use crate::model::network::user_representations;
use crate::model::{
    backward, forward, soft_assign, target_distribution, target_representations, BreakerParams,
    LossTerms, Mixing, TargetParams, Weighting,
};
use crate::rng;
use crate::{Error, Result, Tensor};

const STREAM_INIT: u64 = 1;
const STREAM_KMEANS: u64 = 2;
const STREAM_KMEANS_SAMPLE: u64 = 3;
const STREAM_BATCHES: u64 = 4;

/// Per-epoch summary, indexed from 0. Evaluation columns are filled in by
/// the caller.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub loss: f64,
    pub loss_p: f64,
    pub loss_c: f64,
    pub recall_at_1: Option<f64>,
    pub item_auc_macro: Option<f64>,
    pub aer: Option<f64>,
    pub seconds: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    /// Number of optimizer steps taken so far, including this one.
    pub step: u64,
    pub terms: LossTerms,
    /// Whether the target network was refreshed after this step.
    pub synced: bool,
}

/// Deduplicated user feature rows in order of first appearance.
pub fn distinct_users(records: &[Record]) -> Vec<&Record> {
    let mut seen = BTreeSet::new();
    records.iter().filter(|r| seen.insert(r.user_id.as_str())).collect()
}

/// Sets the centroids by K-means over the current representations of (a
/// seeded sample of) the distinct training users.
fn place_centroids(params: &mut BreakerParams, config: &TrainConfig, train: &[Record]) -> Result<()> {
    let users = distinct_users(train);
    let picked: Vec<&Record> = if users.len() > config.kmeans_sample_cap {
        let mut r = rng::seeded(rng::derive(config.seed, STREAM_KMEANS_SAMPLE));
        let mut idx = sample(&mut r, users.len(), config.kmeans_sample_cap).into_vec();
        idx.sort_unstable();
        idx.into_iter().map(|i| users[i]).collect()
    } else {
        users
    };
    let feats: Vec<usize> = picked.iter().flat_map(|r| r.features.iter().copied()).collect();
    let reps = user_representations(&params.params, &params.layout, &params.dims, &feats)?;
    let km = kmeans(&reps, config.clusters, rng::derive(config.seed, STREAM_KMEANS))?;
    params.set_centroids(km.centroids)
}
#[derive(Debug, Clone)]
pub struct Trainer {
    config: TrainConfig,
    params: BreakerParams,
    target: TargetParams,
    adam: AdamState,
    step: u64,
    epochs_done: usize,
    steps_per_epoch: usize,
    sync_period: usize,
}

impl Trainer {
    /// Initializes the network from the config seed, copies it into the
    /// target network and places the centroids with K-means over the user
    /// representations of (a seeded sample of) the distinct training users.
    pub fn new(
        config: TrainConfig,
        user_cardinalities: Vec<usize>,
        n_items: usize,
        train: &[Record],
    ) -> Result<Self> {
        config.validate()?;
        if train.is_empty() {
            return Err(Error::InvalidConfig("training set is empty".into()));
        }
        let dims = config.model_dims(user_cardinalities, n_items);
        let mut params = BreakerParams::init(dims, rng::derive(config.seed, STREAM_INIT))?;
        place_centroids(&mut params, &config, train)?;

        let target = TargetParams::snapshot(&params);
        let adam = AdamState::new(&params.params, config.adam);
        let steps_per_epoch = train.len().div_ceil(config.batch_size);
        let sync_period = config.resolved_sync_period(steps_per_epoch);
        Ok(Self {
            config,
            params,
            target,
            adam,
            step: 0,
            epochs_done: 0,
            steps_per_epoch,
            sync_period,
        })
    }

    /// Re-runs K-means on the current representations and resyncs the
    /// target network.
    pub fn recluster(&mut self, train: &[Record]) -> Result<()> {
        place_centroids(&mut self.params, &self.config, train)?;
        self.target.sync(&self.params)
    }

    /// Tower mixing matching the epochs trained so far.
    pub fn mixing(&self) -> Mixing {
        self.config.mixing_after(self.epochs_done)
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn params(&self) -> &BreakerParams {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut BreakerParams {
        &mut self.params
    }

    pub fn target(&self) -> &TargetParams {
        &self.target
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    pub fn epochs_done(&self) -> usize {
        self.epochs_done
    }

    pub fn sync_period(&self) -> usize {
        self.sync_period
    }

    pub fn steps_per_epoch(&self) -> usize {
        self.steps_per_epoch
    }

    pub fn into_params(self) -> BreakerParams {
        self.params
    }

    /// Pseudo-labels P for a batch of user rows, computed from the target
    /// network's representations and the live centroids.
    pub fn pseudo_labels(&self, user_features: &[usize]) -> Result<Tensor> {
        let reps = target_representations(&self.target, &self.params, user_features)?;
        let q = soft_assign(&reps, self.params.centroids(), self.params.dims.alpha)?;
        Ok(target_distribution(&q))
    }

    /// One optimizer step on `batch`; syncs the target every M steps.
    pub fn step(&mut self, batch: &Batch) -> Result<StepReport> {
        let inputs = batch.inputs();
        let clustering = self.config.clustering_active(self.epochs_done);
        let (weighting, targets) = if clustering {
            (Weighting::Soft, Some(self.pseudo_labels(&batch.user_features)?))
        } else {
            (Weighting::Uniform, None)
        };
        let lambda = if clustering { self.config.effective_lambda() } else { 0.0 };
        let fwd = forward(&self.params, &inputs, weighting)?;
        let (terms, grads) = backward(
            &self.params,
            &inputs,
            &fwd,
            &batch.labels,
            targets.as_ref(),
            lambda,
        )?;
        if !terms.is_finite() {
            return Err(Error::NonFiniteLoss {
                step: self.step,
                loss: terms.total,
                loss_p: terms.classification,
                loss_c: terms.clustering,
            });
        }
        adam_step(&mut self.params.params, &grads, &mut self.adam, self.config.learning_rate)?;
        self.step += 1;
        let synced = self.step % self.sync_period as u64 == 0;
        if synced {
            self.target.sync(&self.params)?;
        }
        Ok(StepReport {
            step: self.step,
            terms,
            synced,
        })
    }

    /// One pass over `train` in an order drawn from `(seed, epoch)`. The
    /// first epoch after warm-up starts with [`Trainer::recluster`].
    pub fn run_epoch(&mut self, train: &[Record]) -> Result<EpochLog> {
        let epoch = self.epochs_done;
        let warm = self.config.warmup_epochs;
        if warm > 0 && epoch == warm && self.config.clustering_active(epoch) {
            self.recluster(train)?;
        }
        let seed = rng::derive(self.config.seed, STREAM_BATCHES);
        let (mut l, mut lp, mut lc, mut n) = (0.0, 0.0, 0.0, 0usize);
        for batch in iterate_batches(train, self.config.batch_size, seed, epoch as u64) {
            let report = self.step(&batch)?;
            l += report.terms.total;
            lp += report.terms.classification;
            lc += report.terms.clustering;
            n += 1;
        }
        self.epochs_done = epoch + 1;
        let n = n.max(1) as f64;
        Ok(EpochLog {
            epoch,
            loss: l / n,
            loss_p: lp / n,
            loss_c: lc / n,
            ..EpochLog::default()
        })
    }

    /// Runs the configured number of epochs, handing each log to
    /// `on_epoch` before it is stored.
    pub fn fit<F>(&mut self, train: &[Record], mut on_epoch: F) -> Result<Vec<EpochLog>>
    where
        F: FnMut(&Trainer, &mut EpochLog) -> Result<()>,
    {
        let mut logs = Vec::with_capacity(self.config.epochs);
        for _ in 0..self.config.epochs {
            let mut log = self.run_epoch(train)?;
            on_epoch(self, &mut log)?;
            logs.push(log);
        }
        Ok(logs)
    }
}
