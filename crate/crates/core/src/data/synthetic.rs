//! Planted-cluster data under randomized single-item exposure.
//!
//! Each user belongs to a hidden cluster `c`. Informative fields copy `c`
//! (or a random value with probability η), noise fields are uniform, the
//! exposed item comes from [`rct_assign`], and each impression is labelled
//! positive with probability `sigmoid(β_c + γ·A[c, item])`. The cluster
//! offset β is the item-independent tendency; `A` carries the item
//! preferences and has zero-mean rows.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{
    count_positives, count_users, rct_assign, DatasetManifest, FeatureSpec, Record,
    DATASET_FORMAT_VERSION,
};
use crate::math;
use crate::rng;
use crate::{Error, Result};

fn default_true_clusters() -> usize {
    4
}
fn default_informative() -> usize {
    4
}
fn default_noise() -> usize {
    4
}
fn default_noise_cardinality() -> usize {
    10
}
fn default_corruption() -> f64 {
    0.2
}
fn default_scale() -> f64 {
    1.0
}
fn default_impressions() -> usize {
    1
}
fn default_test_fraction() -> f64 {
    0.2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticConfig {
    pub n_users: usize,
    pub n_items: usize,
    /// Planted cluster count K_true.
    #[serde(default = "default_true_clusters")]
    pub true_clusters: usize,
    /// Fields that copy the planted cluster.
    #[serde(default = "default_informative")]
    pub informative_features: usize,
    /// Fields drawn uniformly, independent of everything else.
    #[serde(default = "default_noise")]
    pub noise_features: usize,
    #[serde(default = "default_noise_cardinality")]
    pub noise_cardinality: usize,
    /// η: probability that an informative field is replaced by a uniform draw.
    #[serde(default = "default_corruption")]
    pub corruption: f64,
    /// β: per-cluster tendency logits. Empty means evenly spaced over [−3, −1].
    #[serde(default)]
    pub tendency: Vec<f64>,
    /// γ: scale applied to the preference matrix.
    #[serde(default = "default_scale")]
    pub preference_scale: f64,
    /// A: `[K_true][n_items]` with zero row means. Drawn from N(0, 1) and
    /// centred when absent.
    #[serde(default)]
    pub preference: Option<Vec<Vec<f64>>>,
    #[serde(default = "default_impressions")]
    pub impressions_per_user: usize,
    /// Share of users placed in the test split.
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
    #[serde(default)]
    pub seed: u64,
}

impl SyntheticConfig {
    pub fn new(n_users: usize, n_items: usize, seed: u64) -> Self {
        Self {
            n_users,
            n_items,
            true_clusters: default_true_clusters(),
            informative_features: default_informative(),
            noise_features: default_noise(),
            noise_cardinality: default_noise_cardinality(),
            corruption: default_corruption(),
            tendency: Vec::new(),
            preference_scale: default_scale(),
            preference: None,
            impressions_per_user: default_impressions(),
            test_fraction: default_test_fraction(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.n_users == 0 {
            return bad("n_users must be at least 1".into());
        }
        if self.n_items == 0 {
            return bad("n_items must be at least 1".into());
        }
        if self.true_clusters < 2 {
            return bad("true_clusters must be at least 2".into());
        }
        if self.informative_features + self.noise_features == 0 {
            return bad("at least one user feature is required".into());
        }
        if self.noise_features > 0 && self.noise_cardinality == 0 {
            return bad("noise_cardinality must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.corruption) {
            return bad("corruption must lie in [0, 1]".into());
        }
        if !(0.0..=1.0).contains(&self.test_fraction) {
            return bad("test_fraction must lie in [0, 1]".into());
        }
        if self.impressions_per_user == 0 {
            return bad("impressions_per_user must be at least 1".into());
        }
        if !self.tendency.is_empty() && self.tendency.len() != self.true_clusters {
            return bad(format!(
                "tendency has {} entries, expected {}",
                self.tendency.len(),
                self.true_clusters
            ));
        }
        if !self.preference_scale.is_finite() || self.tendency.iter().any(|v| !v.is_finite()) {
            return bad("tendency and preference_scale must be finite".into());
        }
        if let Some(a) = &self.preference {
            if a.len() != self.true_clusters || a.iter().any(|r| r.len() != self.n_items) {
                return bad(format!(
                    "preference must be {} x {}",
                    self.true_clusters, self.n_items
                ));
            }
            for (c, row) in a.iter().enumerate() {
                let sum: f64 = row.iter().sum();
                if !(sum.abs() <= 1e-9) {
                    return bad(format!("preference row {c} sums to {sum}, expected 0"));
                }
            }
        }
        Ok(())
    }

    /// β with the default filled in.
    pub fn resolved_tendency(&self) -> Vec<f64> {
        if !self.tendency.is_empty() {
            return self.tendency.clone();
        }
        let k = self.true_clusters;
        (0..k)
            .map(|c| -3.0 + 2.0 * c as f64 / (k - 1) as f64)
            .collect()
    }

    /// A with the default drawn from the configured seed.
    pub fn resolved_preference(&self) -> Vec<Vec<f64>> {
        if let Some(a) = &self.preference {
            return a.clone();
        }
        let mut r = rng::seeded(rng::derive(self.seed, u64::MAX));
        (0..self.true_clusters)
            .map(|_| {
                let mut row: Vec<f64> = (0..self.n_items).map(|_| rng::normal(&mut r, 0.0, 1.0)).collect();
                let mean = row.iter().sum::<f64>() / row.len() as f64;
                row.iter_mut().for_each(|v| *v -= mean);
                row
            })
            .collect()
    }

    pub fn feature_count(&self) -> usize {
        self.informative_features + self.noise_features
    }

    pub fn feature_specs(&self) -> Vec<FeatureSpec> {
        let inf = (0..self.informative_features).map(|j| FeatureSpec {
            name: format!("inf{j}"),
            cardinality: self.true_clusters,
        });
        let noise = (0..self.noise_features).map(|j| FeatureSpec {
            name: format!("noise{j}"),
            cardinality: self.noise_cardinality,
        });
        inf.chain(noise).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticData {
    pub train: Vec<Record>,
    pub test: Vec<Record>,
    pub manifest: DatasetManifest,
}

/// Generates the train/test split for `cfg`. Users are processed with
/// independent streams derived from `(seed, user index)` and emitted in
/// user order, so output does not depend on processing order.
pub fn generate_synthetic(cfg: &SyntheticConfig) -> Result<SyntheticData> {
    cfg.validate()?;
    let beta = cfg.resolved_tendency();
    let a = cfg.resolved_preference();
    let k = cfg.true_clusters;

    let mut train = Vec::new();
    let mut test = Vec::new();
    let mut features = vec![0usize; cfg.feature_count()];
    for u in 0..cfg.n_users {
        let mut r = rng::seeded(rng::derive(cfg.seed, u as u64));
        let c = r.random_range(0..k);
        for slot in features.iter_mut().take(cfg.informative_features) {
            *slot = if r.random::<f64>() < cfg.corruption {
                r.random_range(0..k)
            } else {
                c
            };
        }
        for slot in features.iter_mut().skip(cfg.informative_features) {
            *slot = r.random_range(0..cfg.noise_cardinality);
        }
        let user_id = format!("u{u}");
        let item = rct_assign(&user_id, cfg.n_items);
        let in_test = r.random::<f64>() < cfg.test_fraction;
        let p = math::sigmoid(beta[c] + cfg.preference_scale * a[c][item]);
        let sink = if in_test { &mut test } else { &mut train };
        for _ in 0..cfg.impressions_per_user {
            let label = u8::from(r.random::<f64>() < p);
            sink.push(Record {
                user_id: user_id.clone(),
                item_id: item,
                label,
                features: features.clone(),
                true_cluster: Some(c),
            });
        }
    }

    let mut echo = cfg.clone();
    echo.tendency = beta;
    echo.preference = Some(a);
    let manifest = DatasetManifest {
        format_version: DATASET_FORMAT_VERSION,
        n_items: cfg.n_items,
        features: cfg.feature_specs(),
        train_records: train.len(),
        test_records: test.len(),
        train_positives: count_positives(&train),
        test_positives: count_positives(&test),
        train_users: count_users(&train),
        test_users: count_users(&test),
        generator: Some(echo),
    };
    Ok(SyntheticData {
        train,
        test,
        manifest,
    })
}
