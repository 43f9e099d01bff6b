use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Rank-based (Mann–Whitney) AUC; tied scores contribute one half.
pub fn auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: scores.len(),
            right: labels.len(),
        });
    }
    let pos = labels.iter().filter(|&&y| y == 1).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::UndefinedMetric(
            "AUC needs at least one positive and one negative".into(),
        ));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // Sum of midranks of the positives.
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let midrank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            if labels[idx] == 1 {
                rank_sum += midrank;
            }
        }
        i = j + 1;
    }
    let (p, n) = (pos as f64, neg as f64);
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ItemAuc {
    pub per_item: BTreeMap<usize, f64>,
    pub macro_mean: f64,
    /// Items whose records lack one of the two classes.
    pub excluded: Vec<usize>,
}

/// AUC within the records of each item, plus the unweighted mean over
/// items where it is defined.
pub fn item_based_auc(items: &[usize], scores: &[f64], labels: &[u8]) -> Result<ItemAuc> {
    if items.len() != scores.len() || items.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: items.len(),
            right: scores.len().min(labels.len()),
        });
    }
    let mut groups: BTreeMap<usize, (Vec<f64>, Vec<u8>)> = BTreeMap::new();
    for ((&item, &s), &y) in items.iter().zip(scores).zip(labels) {
        let g = groups.entry(item).or_default();
        g.0.push(s);
        g.1.push(y);
    }
    let mut per_item = BTreeMap::new();
    let mut excluded = Vec::new();
    for (item, (s, y)) in &groups {
        match auc(s, y) {
            Ok(v) => {
                per_item.insert(*item, v);
            }
            Err(Error::UndefinedMetric(_)) => excluded.push(*item),
            Err(e) => return Err(e),
        }
    }
    if per_item.is_empty() {
        return Err(Error::UndefinedMetric(
            "no item has both positive and negative records".into(),
        ));
    }
    let macro_mean = per_item.values().sum::<f64>() / per_item.len() as f64;
    Ok(ItemAuc {
        per_item,
        macro_mean,
        excluded,
    })
}
