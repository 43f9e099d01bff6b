use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Shape of a Breaker network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDims {
    /// Cardinality of each categorical user field.
    pub user_cardinalities: Vec<usize>,
    /// The item field is the item id.
    pub n_items: usize,
    pub embedding_dim: usize,
    /// Widths of the representation MLPs (shared layout for users and items).
    /// Empty means the concatenated embeddings are used directly.
    pub rem_widths: Vec<usize>,
    /// Hidden widths of every tower; a one-unit sigmoid output follows.
    pub tower_widths: Vec<usize>,
    /// Number of clusters and towers.
    pub clusters: usize,
    /// Degrees of freedom of the Student-t kernel.
    pub alpha: f64,
}

impl ModelDims {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.into()));
        if self.clusters == 0 {
            return bad("cluster count K must be at least 1");
        }
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return bad("alpha must be positive");
        }
        if self.embedding_dim == 0 {
            return bad("embedding_dim must be at least 1");
        }
        if self.n_items == 0 {
            return bad("n_items must be at least 1");
        }
        if self.user_cardinalities.is_empty() {
            return bad("at least one user feature is required");
        }
        if let Some(j) = self.user_cardinalities.iter().position(|&c| c == 0) {
            return Err(Error::InvalidConfig(format!(
                "user feature {j} has cardinality 0"
            )));
        }
        if self.rem_widths.contains(&0) || self.tower_widths.contains(&0) {
            return bad("layer widths must be positive");
        }
        Ok(())
    }

    pub fn user_fields(&self) -> usize {
        self.user_cardinalities.len()
    }

    pub fn user_input_dim(&self) -> usize {
        self.user_fields() * self.embedding_dim
    }

    pub fn item_input_dim(&self) -> usize {
        self.embedding_dim
    }

    /// d_u^e
    pub fn user_rep_dim(&self) -> usize {
        self.rem_widths
            .last()
            .copied()
            .unwrap_or_else(|| self.user_input_dim())
    }

    /// d_i^e
    pub fn item_rep_dim(&self) -> usize {
        self.rem_widths
            .last()
            .copied()
            .unwrap_or_else(|| self.item_input_dim())
    }

    pub fn tower_input_dim(&self) -> usize {
        self.user_rep_dim() + self.item_rep_dim()
    }
}
