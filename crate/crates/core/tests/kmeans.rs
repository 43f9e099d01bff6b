use breaker_core::metrics::matched_accuracy;
use breaker_core::rng;
use breaker_core::trainer::{kmeans, DenseClusterer, DenseClustererConfig};
use breaker_core::Tensor;
use proptest::prelude::*;

#[test]
fn two_separable_groups() {
    let mut rows = vec![[0.0, 0.0]; 10];
    rows.extend(vec![[10.0, 10.0]; 10]);
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    let km = kmeans(&Tensor::matrix(20, 2, flat).unwrap(), 2, 1).unwrap();
    let mut c: Vec<Vec<f64>> = (0..2).map(|j| km.centroids.row(j).to_vec()).collect();
    c.sort_by(|a, b| a[0].total_cmp(&b[0]));
    assert_eq!(c, vec![vec![0.0, 0.0], vec![10.0, 10.0]]);
    assert_eq!(km.inertia, 0.0);
}

proptest! {
    #[test]
    fn single_cluster_is_the_mean(pts in prop::collection::vec(-10.0f64..10.0, 3..60), seed in any::<u64>()) {
        let n = pts.len() / 3;
        let t = Tensor::matrix(n, 3, pts[..n * 3].to_vec()).unwrap();
        let km = kmeans(&t, 1, seed).unwrap();
        for j in 0..3 {
            let mean = (0..n).map(|i| t.row(i)[j]).sum::<f64>() / n as f64;
            prop_assert!((km.centroids.row(0)[j] - mean).abs() <= 1e-9);
        }
    }

    #[test]
    fn same_seed_same_result(pts in prop::collection::vec(-10.0f64..10.0, 20..80), seed in any::<u64>()) {
        let n = pts.len() / 2;
        let t = Tensor::matrix(n, 2, pts[..n * 2].to_vec()).unwrap();
        prop_assert_eq!(kmeans(&t, 3, seed).unwrap(), kmeans(&t, 3, seed).unwrap());
    }
}

#[test]
fn one_cluster_per_point() {
    let t = Tensor::matrix(4, 1, vec![3.0, -1.0, 7.0, 0.5]).unwrap();
    let km = kmeans(&t, 4, 2).unwrap();
    assert_eq!(km.inertia, 0.0);
    let mut c: Vec<f64> = km.centroids.data().to_vec();
    c.sort_by(f64::total_cmp);
    assert_eq!(c, vec![-1.0, 0.5, 3.0, 7.0]);
}

#[test]
fn dense_clusterer_recovers_gaussian_toy() {
    let mut r = rng::seeded(21);
    let centers = [[0.0, 0.0], [10.0, 0.0], [5.0, 9.0]];
    let n = 300;
    let mut pts = Vec::new();
    let mut truth = Vec::new();
    for i in 0..n {
        let c = i % 3;
        pts.push(centers[c][0] + rng::normal(&mut r, 0.0, 1.0));
        pts.push(centers[c][1] + rng::normal(&mut r, 0.0, 1.0));
        truth.push(c);
    }
    let points = Tensor::matrix(n, 2, pts).unwrap();
    let config = DenseClustererConfig {
        clusters: 3,
        alpha: 1.0,
        hidden: vec![16],
        rep_dim: 4,
        learning_rate: 1e-3,
        batch_size: 64,
        sync_period: 2,
        seed: 3,
    };
    let mut dc = DenseClusterer::new(config, &points).unwrap();
    for _ in 0..20 {
        assert!(dc.run_epoch(&points).unwrap().is_finite());
    }
    let acc = matched_accuracy(&dc.predict(&points).unwrap(), &truth, 3).unwrap();
    assert!(acc >= 0.95, "{acc}");
}
