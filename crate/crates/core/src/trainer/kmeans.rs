use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;

use crate::math::{sq_dist, sqrt};
use crate::rng;
use crate::{Error, Result, Tensor};

pub const KMEANS_MAX_ITERS: usize = 100;
pub const KMEANS_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeans {
    /// `[K, d]`
    pub centroids: Tensor,
    pub labels: Vec<usize>,
    pub inertia: f64,
    pub iterations: usize,
}

fn nearest(point: &[f64], centroids: &Tensor) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for j in 0..centroids.rows() {
        let d = sq_dist(point, centroids.row(j));
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

/// k-means++ seeding followed by Lloyd iterations until the largest
/// centroid move drops below [`KMEANS_TOLERANCE`] or
/// [`KMEANS_MAX_ITERS`] is reached. An emptied cluster is moved onto the
/// point farthest from its current centroid.
pub fn kmeans(points: &Tensor, k: usize, seed: u64) -> Result<KMeans> {
    let n = points.rows();
    let d = points.cols();
    if k == 0 || n < k {
        return Err(Error::TooFewPoints { points: n, clusters: k });
    }
    let mut r = rng::seeded(seed);

    let mut centroids = Tensor::zeros(&[k, d]);
    let mut chosen = vec![false; n];
    let first = r.random_range(0..n);
    chosen[first] = true;
    centroids.row_mut(0).copy_from_slice(points.row(first));
    let mut dist: Vec<f64> = (0..n).map(|i| sq_dist(points.row(i), points.row(first))).collect();
    for c in 1..k {
        let total: f64 = dist.iter().sum();
        let pick = if total > 0.0 {
            let mut target = r.random::<f64>() * total;
            let mut pick = None;
            for (i, &w) in dist.iter().enumerate() {
                if w > 0.0 {
                    pick = Some(i);
                    if target < w {
                        break;
                    }
                    target -= w;
                }
            }
            pick.unwrap_or(0)
        } else {
            // All remaining points coincide with a chosen centre.
            chosen.iter().position(|&c| !c).unwrap_or(0)
        };
        chosen[pick] = true;
        centroids.row_mut(c).copy_from_slice(points.row(pick));
        for (i, di) in dist.iter_mut().enumerate() {
            *di = di.min(sq_dist(points.row(i), points.row(pick)));
        }
    }

    let mut labels = vec![0usize; n];
    let mut iterations = 0;
    while iterations < KMEANS_MAX_ITERS {
        iterations += 1;
        let mut far = vec![(usize::MAX, -1.0f64); k];
        for (i, label) in labels.iter_mut().enumerate() {
            let (j, dd) = nearest(points.row(i), &centroids);
            *label = j;
            if dd > far[j].1 {
                far[j] = (i, dd);
            }
        }
        let mut sums = Tensor::zeros(&[k, d]);
        let mut counts = vec![0usize; k];
        for (i, &j) in labels.iter().enumerate() {
            counts[j] += 1;
            for (s, v) in sums.row_mut(j).iter_mut().zip(points.row(i)) {
                *s += v;
            }
        }
        let mut shift: f64 = 0.0;
        for j in 0..k {
            let next: Vec<f64> = if counts[j] > 0 {
                sums.row(j).iter().map(|s| s / counts[j] as f64).collect()
            } else {
                // Farthest point overall from its assigned centroid.
                let (i, _) = far
                    .iter()
                    .copied()
                    .filter(|f| f.0 != usize::MAX)
                    .fold((0, -1.0), |a, b| if b.1 > a.1 { b } else { a });
                points.row(i).to_vec()
            };
            shift = shift.max(sqrt(sq_dist(&next, centroids.row(j))));
            centroids.row_mut(j).copy_from_slice(&next);
        }
        if shift < KMEANS_TOLERANCE {
            break;
        }
    }
    let mut inertia = 0.0;
    for (i, label) in labels.iter_mut().enumerate() {
        let (j, dd) = nearest(points.row(i), &centroids);
        *label = j;
        inertia += dd;
    }
    Ok(KMeans {
        centroids,
        labels,
        inertia,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separates_two_groups() {
        let pts = Tensor::from_rows(&[&[0.0, 0.0], &[0.1, 0.0], &[10.0, 10.0], &[10.1, 10.0]]).unwrap();
        let km = kmeans(&pts, 2, 3).unwrap();
        assert_eq!(km.labels[0], km.labels[1]);
        assert_eq!(km.labels[2], km.labels[3]);
        assert_ne!(km.labels[0], km.labels[2]);
    }

    #[test]
    fn k_equals_n_and_too_few() {
        let pts = Tensor::from_rows(&[&[0.0], &[1.0], &[5.0]]).unwrap();
        let km = kmeans(&pts, 3, 0).unwrap();
        assert!(km.inertia < 1e-24);
        assert!(matches!(kmeans(&pts, 4, 0), Err(Error::TooFewPoints { .. })));
    }

    #[test]
    fn duplicate_points() {
        let pts = Tensor::from_rows(&[&[1.0], &[1.0], &[1.0]]).unwrap();
        let km = kmeans(&pts, 2, 0).unwrap();
        assert_eq!(km.centroids.data(), &[1.0, 1.0]);
    }
}
