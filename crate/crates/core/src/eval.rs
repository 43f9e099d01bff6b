//! Offline evaluation of a trained network on held-out records.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::data::Record;
use crate::metrics::{
    adjusted_rand_index, aer, item_based_auc, recall_at_1, silhouette, tower_correlation,
    LoggedOutcome,
};
use crate::model::rank::argmax;
use crate::model::{BreakerParams, Mixing, Scorer};
use crate::trainer::kmeans;
use crate::{rng, Error, Result, Tensor};

/// Users scored per call into the network.
const SCORE_CHUNK: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalOptions {
    /// Users sampled for the silhouette coefficient.
    pub silhouette_cap: usize,
    pub seed: u64,
    /// Also compute the representation metrics (silhouette, ARI, tower
    /// correlation); otherwise only the ranking metrics.
    pub representation: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            silhouette_cap: 3000,
            seed: 0,
            representation: true,
        }
    }
}

/// Metrics that cannot be computed on the given data are `None`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EvalReport {
    pub records: usize,
    pub positives: usize,
    pub users: usize,
    pub recall_at_1: Option<f64>,
    pub aer: Option<f64>,
    pub item_auc_macro: Option<f64>,
    pub item_auc: BTreeMap<usize, f64>,
    pub item_auc_excluded: Vec<usize>,
    /// Silhouette of user representations labelled by their argmax soft
    /// assignment.
    pub silhouette: Option<f64>,
    /// Silhouette of the same representations labelled by K-means.
    pub silhouette_kmeans: Option<f64>,
    /// Agreement between argmax assignments and planted clusters.
    pub ari: Option<f64>,
    /// Pearson correlation between tower outputs on the logged items.
    pub tower_correlation: Option<Vec<Vec<f64>>>,
    /// Mean tower output on the logged items.
    pub tower_means: Vec<f64>,
    /// Users per argmax cluster.
    pub cluster_sizes: Vec<usize>,
}

/// Everything computed for one distinct user.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredUser {
    pub user_id: alloc::string::String,
    pub rep: Vec<f64>,
    pub assign: Vec<f64>,
    pub true_cluster: Option<usize>,
    /// ŷ per item id.
    pub scores: Vec<f64>,
    /// `[n_items, K]` tower outputs.
    pub towers: Tensor,
}

/// Scores every distinct user of `records` against the full catalogue, in
/// order of first appearance. Returns the users and, for each record, the
/// index of its user.
pub fn score_records(
    params: &BreakerParams,
    mixing: Mixing,
    records: &[Record],
) -> Result<(Vec<ScoredUser>, Vec<usize>)> {
    let scorer = Scorer::new(params, mixing)?;
    let mut index: BTreeMap<&str, usize> = BTreeMap::new();
    let mut firsts: Vec<&Record> = Vec::new();
    let mut of_record = Vec::with_capacity(records.len());
    for r in records {
        let next = firsts.len();
        let id = *index.entry(r.user_id.as_str()).or_insert(next);
        if id == next {
            firsts.push(r);
        }
        of_record.push(id);
    }
    let mut users = Vec::with_capacity(firsts.len());
    for chunk in firsts.chunks(SCORE_CHUNK) {
        let feats: Vec<usize> = chunk.iter().flat_map(|r| r.features.iter().copied()).collect();
        for (r, s) in chunk.iter().zip(scorer.score_users(&feats)?) {
            users.push(ScoredUser {
                user_id: r.user_id.clone(),
                rep: s.rep,
                assign: s.assign,
                true_cluster: r.true_cluster,
                scores: s.scores,
                towers: s.towers,
            });
        }
    }
    Ok((users, of_record))
}

fn defined<T>(r: Result<T>) -> Result<Option<T>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::UndefinedMetric(_)) | Err(Error::ZeroVariance(_)) | Err(Error::TooFewPoints { .. }) => {
            Ok(None)
        }
        Err(e) => Err(e),
    }
}

pub fn evaluate(
    params: &BreakerParams,
    mixing: Mixing,
    records: &[Record],
    opts: &EvalOptions,
) -> Result<EvalReport> {
    let n_items = params.dims.n_items;
    let k = params.dims.clusters;
    let (users, of_record) = score_records(params, mixing, records)?;

    let mut pos_scores: Vec<&[f64]> = Vec::new();
    let mut pos_items = Vec::new();
    let mut log = Vec::with_capacity(records.len());
    let mut items = Vec::with_capacity(records.len());
    let mut logged_scores = Vec::with_capacity(records.len());
    let mut labels = Vec::with_capacity(records.len());
    let mut tower_rows = Tensor::zeros(&[records.len(), k]);
    for (row, (rec, &u)) in records.iter().zip(&of_record).enumerate() {
        let user = &users[u];
        if rec.item_id >= n_items {
            return Err(Error::UnknownItem(rec.item_id));
        }
        if rec.label == 1 {
            pos_scores.push(&user.scores);
            pos_items.push(rec.item_id);
        }
        log.push(LoggedOutcome {
            logged_item: rec.item_id,
            label: rec.label,
            policy_choice: argmax(&user.scores),
        });
        items.push(rec.item_id);
        logged_scores.push(user.scores[rec.item_id]);
        labels.push(rec.label);
        tower_rows.row_mut(row).copy_from_slice(user.towers.row(rec.item_id));
    }

    let candidates: Vec<usize> = (0..n_items).collect();
    let item_auc = defined(item_based_auc(&items, &logged_scores, &labels))?;
    let mut report = EvalReport {
        records: records.len(),
        positives: pos_items.len(),
        users: users.len(),
        recall_at_1: defined(recall_at_1(&pos_scores, &pos_items))?,
        aer: defined(aer(&log, &candidates))?,
        item_auc_macro: item_auc.as_ref().map(|a| a.macro_mean),
        ..EvalReport::default()
    };
    if let Some(a) = item_auc {
        report.item_auc = a.per_item;
        report.item_auc_excluded = a.excluded;
    }
    if !records.is_empty() {
        report.tower_means = (0..k)
            .map(|t| (0..records.len()).map(|r| tower_rows.row(r)[t]).sum::<f64>() / records.len() as f64)
            .collect();
    }
    if !opts.representation || users.is_empty() {
        return Ok(report);
    }

    let hard: Vec<usize> = users.iter().map(|u| argmax(&u.assign)).collect();
    let mut sizes = vec![0usize; k];
    for &c in &hard {
        sizes[c] += 1;
    }
    report.cluster_sizes = sizes;

    let truth: Option<Vec<usize>> = users.iter().map(|u| u.true_cluster).collect();
    if let Some(truth) = truth {
        report.ari = defined(adjusted_rand_index(&hard, &truth))?;
    }

    let picked: Vec<usize> = if users.len() > opts.silhouette_cap {
        let mut idx = sample(&mut rng::seeded(opts.seed), users.len(), opts.silhouette_cap).into_vec();
        idx.sort_unstable();
        idx
    } else {
        (0..users.len()).collect()
    };
    let d = users[0].rep.len();
    let mut reps = Tensor::zeros(&[picked.len(), d]);
    for (row, &u) in picked.iter().enumerate() {
        reps.row_mut(row).copy_from_slice(&users[u].rep);
    }
    let labels: Vec<usize> = picked.iter().map(|&u| hard[u]).collect();
    let cap = picked.len();
    report.silhouette = defined(silhouette(&reps, &labels, cap, opts.seed))?;
    if let Some(km) = defined(kmeans(&reps, k, rng::derive(opts.seed, 1)))? {
        report.silhouette_kmeans = defined(silhouette(&reps, &km.labels, cap, opts.seed))?;
    }

    report.tower_correlation = defined(tower_correlation(&tower_rows))?.map(|c| {
        (0..k).map(|a| c.row(a).to_vec()).collect()
    });
    Ok(report)
}
