use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::index::sample;

use crate::math::{sq_dist, sqrt};
use crate::rng::seeded;
use crate::{Error, Result, Tensor};

/// Mean silhouette coefficient over a seeded sample of at most `cap` points.
///
/// Points alone in their cluster score 0. Points whose intra- and
/// nearest-cluster distances are both zero score 0.
pub fn silhouette(points: &Tensor, labels: &[usize], cap: usize, seed: u64) -> Result<f64> {
    let n = points.rows();
    if labels.len() != n {
        return Err(Error::LengthMismatch { left: n, right: labels.len() });
    }
    if n == 0 || cap == 0 {
        return Err(Error::UndefinedMetric("silhouette needs at least one point".into()));
    }
    let chosen: Vec<usize> = if n > cap {
        let mut idx = sample(&mut seeded(seed), n, cap).into_vec();
        idx.sort_unstable();
        idx
    } else {
        (0..n).collect()
    };
    // Dense cluster ids over the sample.
    let mut ids: BTreeMap<usize, usize> = BTreeMap::new();
    for &i in &chosen {
        let next = ids.len();
        ids.entry(labels[i]).or_insert(next);
    }
    let k = ids.len();
    if k < 2 {
        return Err(Error::UndefinedMetric(
            "silhouette needs at least two clusters".into(),
        ));
    }
    let lab: Vec<usize> = chosen.iter().map(|&i| ids[&labels[i]]).collect();
    let mut sizes = vec![0usize; k];
    for &c in &lab {
        sizes[c] += 1;
    }
    let mut total = 0.0;
    let mut sums = vec![0.0; k];
    for (a_pos, &a) in chosen.iter().enumerate() {
        let own = lab[a_pos];
        if sizes[own] == 1 {
            continue;
        }
        sums.iter_mut().for_each(|s| *s = 0.0);
        let pa = points.row(a);
        for (b_pos, &b) in chosen.iter().enumerate() {
            if a_pos != b_pos {
                sums[lab[b_pos]] += sqrt(sq_dist(pa, points.row(b)));
            }
        }
        let intra = sums[own] / (sizes[own] - 1) as f64;
        let nearest = (0..k)
            .filter(|&c| c != own)
            .map(|c| sums[c] / sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let denom = intra.max(nearest);
        if denom > 0.0 {
            total += (nearest - intra) / denom;
        }
    }
    Ok(total / chosen.len() as f64)
}

fn comb2(n: usize) -> f64 {
    let n = n as f64;
    n * (n - 1.0) / 2.0
}

/// Adjusted Rand index between two labelings of the same points.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch { left: a.len(), right: b.len() });
    }
    if a.is_empty() {
        return Err(Error::UndefinedMetric("ARI needs at least one point".into()));
    }
    let mut table: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut rows: BTreeMap<usize, usize> = BTreeMap::new();
    let mut cols: BTreeMap<usize, usize> = BTreeMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *table.entry((x, y)).or_default() += 1;
        *rows.entry(x).or_default() += 1;
        *cols.entry(y).or_default() += 1;
    }
    let index: f64 = table.values().map(|&c| comb2(c)).sum();
    let sum_a: f64 = rows.values().map(|&c| comb2(c)).sum();
    let sum_b: f64 = cols.values().map(|&c| comb2(c)).sum();
    let total = comb2(a.len());
    let expected = if total > 0.0 { sum_a * sum_b / total } else { 0.0 };
    let max_index = (sum_a + sum_b) / 2.0;
    let denom = max_index - expected;
    if denom == 0.0 {
        // Both labelings are trivial in the same way.
        return Ok(1.0);
    }
    Ok((index - expected) / denom)
}

/// Accuracy of `pred` against `truth` under the best one-to-one relabeling
/// of the predicted clusters. Searches all permutations, so `k` must be
/// small.
pub fn matched_accuracy(pred: &[usize], truth: &[usize], k: usize) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::LengthMismatch { left: pred.len(), right: truth.len() });
    }
    if pred.is_empty() || k == 0 || k > 8 {
        return Err(Error::UndefinedMetric(
            "matched accuracy needs points and 1..=8 clusters".into(),
        ));
    }
    let mut counts = vec![vec![0usize; k]; k];
    for (&p, &t) in pred.iter().zip(truth) {
        if p >= k || t >= k {
            return Err(Error::IndexOutOfRange { position: 0, index: p.max(t), cardinality: k });
        }
        counts[p][t] += 1;
    }
    let mut perm: Vec<usize> = (0..k).collect();
    let mut best = 0;
    permute(&mut perm, 0, &counts, &mut best);
    Ok(best as f64 / pred.len() as f64)
}

fn permute(perm: &mut [usize], at: usize, counts: &[Vec<usize>], best: &mut usize) {
    if at == perm.len() {
        let hits = perm.iter().enumerate().map(|(p, &t)| counts[p][t]).sum();
        *best = (*best).max(hits);
        return;
    }
    for i in at..perm.len() {
        perm.swap(at, i);
        permute(perm, at + 1, counts, best);
        perm.swap(at, i);
    }
}

/// Pearson correlation between the columns of an `[N, K]` score matrix.
/// A constant column is reported as [`Error::ZeroVariance`].
pub fn tower_correlation(scores: &Tensor) -> Result<Tensor> {
    let (n, k) = (scores.rows(), scores.cols());
    if n < 2 {
        return Err(Error::UndefinedMetric("correlation needs two rows".into()));
    }
    let mut means = vec![0.0; k];
    for r in 0..n {
        for (m, v) in means.iter_mut().zip(scores.row(r)) {
            *m += v;
        }
    }
    means.iter_mut().for_each(|m| *m /= n as f64);
    let mut cov = vec![0.0; k * k];
    for r in 0..n {
        let row = scores.row(r);
        for a in 0..k {
            let da = row[a] - means[a];
            for b in a..k {
                cov[a * k + b] += da * (row[b] - means[b]);
            }
        }
    }
    for a in 0..k {
        if cov[a * k + a] <= 0.0 {
            return Err(Error::ZeroVariance(a));
        }
    }
    let mut out = Tensor::zeros(&[k, k]);
    for a in 0..k {
        for b in a..k {
            let v = if a == b {
                1.0
            } else {
                let r = cov[a * k + b] / sqrt(cov[a * k + a] * cov[b * k + b]);
                r.clamp(-1.0, 1.0)
            };
            out.data_mut()[a * k + b] = v;
            out.data_mut()[b * k + a] = v;
        }
    }
    Ok(out)
}
