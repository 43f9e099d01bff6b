//! Scoring users against candidate items and ranking the candidates.

use alloc::vec::Vec;

use super::cluster::soft_assign;
use super::network::{concat_reps, item_representations, user_representations};
use super::params::BreakerParams;
use super::Mixing;
use crate::math;
use crate::model::mlp;
use crate::{Error, Result, Tensor};

/// Scores for one user against every item of a [`Scorer`].
#[derive(Debug, Clone, PartialEq)]
pub struct UserScores {
    /// E_u
    pub rep: Vec<f64>,
    /// Q′ row
    pub assign: Vec<f64>,
    /// ŷ_c per item, `[items, K]`
    pub towers: Tensor,
    /// ŷ per item
    pub scores: Vec<f64>,
}

/// Holds precomputed item representations for repeated scoring.
#[derive(Debug, Clone)]
pub struct Scorer<'a> {
    params: &'a BreakerParams,
    items: Vec<usize>,
    item_reps: Tensor,
    mixing: Mixing,
}

impl<'a> Scorer<'a> {
    /// Scorer over the full item catalogue.
    pub fn new(params: &'a BreakerParams, mixing: Mixing) -> Result<Self> {
        let items: Vec<usize> = (0..params.dims.n_items).collect();
        Self::with_items(params, mixing, items)
    }

    pub fn with_items(params: &'a BreakerParams, mixing: Mixing, items: Vec<usize>) -> Result<Self> {
        if let Some(&bad) = items.iter().find(|&&i| i >= params.dims.n_items) {
            return Err(Error::UnknownItem(bad));
        }
        let item_reps = item_representations(&params.params, &params.layout, &params.dims, &items)?;
        Ok(Self {
            params,
            items,
            item_reps,
            mixing,
        })
    }

    pub fn items(&self) -> &[usize] {
        &self.items
    }

    /// Scores a batch of users (`[N, m]` field indices, flattened).
    pub fn score_users(&self, user_features: &[usize]) -> Result<Vec<UserScores>> {
        let p = self.params;
        let reps = user_representations(&p.params, &p.layout, &p.dims, user_features)?;
        let assign = soft_assign(&reps, p.centroids(), p.dims.alpha)?;
        (0..reps.rows())
            .map(|r| self.score_rep(reps.row(r), assign.row(r)))
            .collect()
    }

    fn score_rep(&self, rep: &[f64], assign: &[f64]) -> Result<UserScores> {
        let p = self.params;
        let n = self.items.len();
        let k = p.dims.clusters;
        let mut user_block = Tensor::zeros(&[n, rep.len()]);
        for r in 0..n {
            user_block.row_mut(r).copy_from_slice(rep);
        }
        let tower_in = concat_reps(&user_block, &self.item_reps);
        let mut towers = Tensor::zeros(&[n, k]);
        for (t, layers) in p.layout.towers.iter().enumerate() {
            let logits = mlp::infer(&p.params, layers, tower_in.clone())?;
            for r in 0..n {
                towers.row_mut(r)[t] = math::sigmoid(logits.data()[r]);
            }
        }
        let uniform = 1.0 / k as f64;
        let scores = (0..n)
            .map(|r| match self.mixing {
                Mixing::Soft => super::loss::aggregate(towers.row(r), assign),
                Mixing::Uniform => towers.row(r).iter().map(|y| y * uniform).sum(),
            })
            .collect();
        Ok(UserScores {
            rep: rep.to_vec(),
            assign: assign.to_vec(),
            towers,
            scores,
        })
    }
}

/// Orders `(item, score)` pairs by score descending, ties by ascending id.
pub fn sort_ranked(ranked: &mut [(usize, f64)]) {
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
}

/// Index of the best score; ties go to the lowest position.
pub fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

/// Scores every candidate for one user and returns them best first.
pub fn predict_rank(
    params: &BreakerParams,
    mixing: Mixing,
    user_features: &[usize],
    candidates: &[usize],
) -> Result<Vec<(usize, f64)>> {
    if candidates.is_empty() {
        return Err(Error::InvalidConfig("at least one candidate item is required".into()));
    }
    if user_features.len() != params.dims.user_fields() {
        return Err(Error::LengthMismatch {
            left: user_features.len(),
            right: params.dims.user_fields(),
        });
    }
    let scorer = Scorer::with_items(params, mixing, candidates.to_vec())?;
    let scored = scorer.score_users(user_features)?;
    let mut ranked: Vec<(usize, f64)> = candidates
        .iter()
        .copied()
        .zip(scored[0].scores.iter().copied())
        .collect();
    sort_ranked(&mut ranked);
    Ok(ranked)
}
