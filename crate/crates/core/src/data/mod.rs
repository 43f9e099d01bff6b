//! Records, randomized item exposure, the planted-cluster generator and
//! mini-batching.

mod batch;
mod rct;
mod synthetic;

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub use batch::{iterate_batches, Batch};
pub use rct::{fnv1a64, rct_assign};
pub use synthetic::{generate_synthetic, SyntheticConfig, SyntheticData};

use crate::{Error, Result};

/// Version of the dataset file layout described by [`DatasetManifest`].
pub const DATASET_FORMAT_VERSION: u32 = 1;

/// One user–item impression.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Record {
    pub user_id: String,
    pub item_id: usize,
    pub label: u8,
    /// One category index per user field.
    pub features: Vec<usize>,
    /// Planted cluster; only known for synthetic data, never fed to a model.
    pub true_cluster: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureSpec {
    pub name: String,
    pub cardinality: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub format_version: u32,
    pub n_items: usize,
    /// User fields, in column order `f0..f{m-1}`.
    pub features: Vec<FeatureSpec>,
    pub train_records: usize,
    pub test_records: usize,
    pub train_positives: usize,
    pub test_positives: usize,
    pub train_users: usize,
    pub test_users: usize,
    #[serde(default)]
    pub generator: Option<SyntheticConfig>,
}

impl DatasetManifest {
    pub fn user_cardinalities(&self) -> Vec<usize> {
        self.features.iter().map(|f| f.cardinality).collect()
    }

    /// Checks `records` against the declared schema: field count,
    /// cardinalities, item range and labels.
    pub fn check_records(&self, records: &[Record]) -> Result<()> {
        let m = self.features.len();
        for (row, r) in records.iter().enumerate() {
            if r.features.len() != m {
                return Err(Error::InvalidConfig(format!(
                    "record {row}: {} features, manifest declares {m}",
                    r.features.len()
                )));
            }
            for (j, (&v, spec)) in r.features.iter().zip(&self.features).enumerate() {
                if v >= spec.cardinality {
                    return Err(Error::InvalidConfig(format!(
                        "record {row}: feature f{j} value {v} exceeds cardinality {}",
                        spec.cardinality
                    )));
                }
            }
            if r.item_id >= self.n_items {
                return Err(Error::InvalidConfig(format!(
                    "record {row}: item {} outside 0..{}",
                    r.item_id, self.n_items
                )));
            }
            if r.label > 1 {
                return Err(Error::InvalidLabel(r.label));
            }
        }
        Ok(())
    }
}

pub fn count_positives(records: &[Record]) -> usize {
    records.iter().filter(|r| r.label == 1).count()
}

/// Number of distinct user ids.
pub fn count_users(records: &[Record]) -> usize {
    let mut ids: Vec<&str> = records.iter().map(|r| r.user_id.as_str()).collect();
    ids.sort_unstable();
    ids.dedup();
    ids.len()
}

/// Flattened user-field indices of `records`, one row per record.
pub fn flat_features(records: &[Record]) -> Vec<usize> {
    records.iter().flat_map(|r| r.features.iter().copied()).collect()
}
