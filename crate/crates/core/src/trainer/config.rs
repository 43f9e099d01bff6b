use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::engine::AdamConfig;
use crate::math;
use crate::model::{Mixing, ModelDims};
use crate::{Error, Result};

/// Training regime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Variant {
    /// Clustering loss, soft-weighted towers, delayed target network.
    #[default]
    #[serde(rename = "breaker")]
    Breaker,
    /// No clustering loss; towers are averaged with equal weights.
    #[serde(rename = "breaker1-")]
    NoClustering,
    /// Target network re-synced after every step.
    #[serde(rename = "breaker2-")]
    NoDelay,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Breaker => "breaker",
            Variant::NoClustering => "breaker1-",
            Variant::NoDelay => "breaker2-",
        }
    }

    pub fn mixing(self) -> Mixing {
        match self {
            Variant::NoClustering => Mixing::Uniform,
            _ => Mixing::Soft,
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "breaker" => Ok(Variant::Breaker),
            "breaker1-" => Ok(Variant::NoClustering),
            "breaker2-" => Ok(Variant::NoDelay),
            other => Err(Error::InvalidConfig(alloc::format!(
                "unknown variant `{other}` (expected breaker, breaker1- or breaker2-)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub variant: Variant,
    /// Number of clusters and towers K.
    pub clusters: usize,
    /// Weight λ of the clustering loss.
    pub lambda: f64,
    /// Student-t degrees of freedom α.
    pub alpha: f64,
    /// Steps between target syncs M. `None` means a tenth of an epoch.
    pub sync_period: Option<usize>,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Leading epochs trained with equal tower weights and no clustering
    /// loss, after which the centroids are re-placed by K-means.
    pub warmup_epochs: usize,
    pub seed: u64,
    pub embedding_dim: usize,
    pub rem_widths: Vec<usize>,
    pub tower_widths: Vec<usize>,
    /// Users fed to K-means when initializing the centroids.
    pub kmeans_sample_cap: usize,
    pub adam: AdamConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            variant: Variant::Breaker,
            clusters: 4,
            lambda: 0.1,
            alpha: 1.0,
            sync_period: None,
            learning_rate: 1e-3,
            batch_size: 256,
            epochs: 10,
            warmup_epochs: 1,
            seed: 0,
            embedding_dim: 10,
            rem_widths: vec![256, 64],
            tower_widths: vec![32, 10],
            kmeans_sample_cap: 100_000,
            adam: AdamConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(String::from(msg)));
        if self.clusters == 0 {
            return bad("clusters must be at least 1");
        }
        if !self.lambda.is_finite() || self.lambda < 0.0 {
            return bad("lambda must be a finite non-negative number");
        }
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return bad("alpha must be positive");
        }
        if self.sync_period == Some(0) {
            return bad("sync_period must be at least 1");
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return bad("learning_rate must be positive");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1");
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1");
        }
        if self.warmup_epochs >= self.epochs && self.variant != Variant::NoClustering {
            return bad("warmup_epochs must be smaller than epochs");
        }
        if self.embedding_dim == 0 {
            return bad("embedding_dim must be at least 1");
        }
        if self.kmeans_sample_cap == 0 {
            return bad("kmeans_sample_cap must be at least 1");
        }
        if self.rem_widths.contains(&0) || self.tower_widths.contains(&0) {
            return bad("layer widths must be positive");
        }
        Ok(())
    }

    pub fn model_dims(&self, user_cardinalities: Vec<usize>, n_items: usize) -> ModelDims {
        ModelDims {
            user_cardinalities,
            n_items,
            embedding_dim: self.embedding_dim,
            rem_widths: self.rem_widths.clone(),
            tower_widths: self.tower_widths.clone(),
            clusters: self.clusters,
            alpha: self.alpha,
        }
    }

    /// λ actually applied: zero when clustering is disabled.
    pub fn effective_lambda(&self) -> f64 {
        match self.variant {
            Variant::NoClustering => 0.0,
            _ => self.lambda,
        }
    }

    /// Whether the clustering loss and soft tower weights apply after
    /// `epochs_done` completed epochs.
    pub fn clustering_active(&self, epochs_done: usize) -> bool {
        self.variant != Variant::NoClustering && epochs_done >= self.warmup_epochs
    }

    /// Mixing used for scoring after `epochs_done` completed epochs.
    pub fn mixing_after(&self, epochs_done: usize) -> Mixing {
        if self.clustering_active(epochs_done.saturating_sub(1)) {
            Mixing::Soft
        } else {
            Mixing::Uniform
        }
    }

    /// M for an epoch of `steps_per_epoch` steps.
    pub fn resolved_sync_period(&self, steps_per_epoch: usize) -> usize {
        if self.variant == Variant::NoDelay {
            return 1;
        }
        match self.sync_period {
            Some(m) => m,
            None => (math::ceil(0.1 * steps_per_epoch as f64) as usize).max(1),
        }
    }
}
