//! The Breaker network: representation extraction, user clustering with a
//! delayed target copy, and cluster-weighted preference towers.

pub mod cluster;
pub mod dims;
pub mod loss;
pub mod mlp;
pub mod network;
pub mod params;
pub mod rank;

pub use cluster::{
    closed_form_cluster_gradients, clustering_backward, clustering_loss, hard_assignments,
    soft_assign, soft_assign_backward, target_distribution,
};
pub use dims::ModelDims;
pub use loss::{aggregate, classification_loss, total_loss, PREDICTION_CLAMP};
pub use network::{
    backward, cpmm_forward, evaluate_loss, forward, rem_forward, target_representations, Forward,
    Inputs, LossTerms, Weighting,
};
pub use params::{sync_target, BreakerParams, Layout, TargetParams, CENTROIDS_NAME};
pub use rank::{predict_rank, Scorer, UserScores};

/// How tower outputs are combined at scoring time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mixing {
    /// Weighted by the main network's soft assignments.
    Soft,
    /// Equal weights.
    Uniform,
}

impl Mixing {
    pub fn weighting(self) -> Weighting<'static> {
        match self {
            Mixing::Soft => Weighting::Soft,
            Mixing::Uniform => Weighting::Uniform,
        }
    }
}
