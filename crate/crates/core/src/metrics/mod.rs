//! Offline evaluation metrics.

mod auc;
mod clustering;
mod policy;

pub use auc::{auc, item_based_auc, ItemAuc};
pub use clustering::{adjusted_rand_index, matched_accuracy, silhouette, tower_correlation};
pub use policy::{aer, recall_at_1, LoggedOutcome};
