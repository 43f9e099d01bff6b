use breaker_core::model::{
    aggregate, clustering_loss, forward, backward, soft_assign, target_distribution, BreakerParams,
    Inputs, Weighting,
};
use breaker_core::verify::check_dims;
use breaker_core::Tensor;
use proptest::prelude::*;

fn matrix(rows: usize, cols: usize, values: &[f64]) -> Tensor {
    Tensor::matrix(rows, cols, values[..rows * cols].to_vec()).unwrap()
}

fn row_sums(t: &Tensor) -> Vec<f64> {
    (0..t.rows()).map(|r| t.row(r).iter().sum()).collect()
}

/// Student-t kernel written out directly.
fn reference_q(reps: &Tensor, mu: &Tensor, alpha: f64) -> Vec<Vec<f64>> {
    (0..reps.rows())
        .map(|i| {
            let w: Vec<f64> = (0..mu.rows())
                .map(|j| {
                    let d2: f64 = reps.row(i).iter().zip(mu.row(j)).map(|(a, b)| (a - b) * (a - b)).sum();
                    (1.0 + d2 / alpha).powf(-(alpha + 1.0) / 2.0)
                })
                .collect();
            let s: f64 = w.iter().sum();
            w.iter().map(|v| v / s).collect()
        })
        .collect()
}

fn reps_strategy() -> impl Strategy<Value = (usize, usize, usize, Vec<f64>, Vec<f64>, f64)> {
    (1usize..12, 1usize..5, 1usize..5).prop_flat_map(|(n, k, d)| {
        (
            Just(n),
            Just(k),
            Just(d),
            prop::collection::vec(-5.0f64..5.0, n * d),
            prop::collection::vec(-5.0f64..5.0, k * d),
            0.5f64..3.0,
        )
    })
}

proptest! {
    #[test]
    fn assignment_rows_are_distributions((n, k, d, x, m, alpha) in reps_strategy()) {
        let reps = matrix(n, d, &x);
        let mu = matrix(k, d, &m);
        let q = soft_assign(&reps, &mu, alpha).unwrap();
        let p = target_distribution(&q);
        for s in row_sums(&q).into_iter().chain(row_sums(&p)) {
            prop_assert!((s - 1.0).abs() <= 1e-9);
        }
        prop_assert!(p.data().iter().all(|&v| (0.0..=1.0).contains(&v)));
        let expected = reference_q(&reps, &mu, alpha);
        for i in 0..n {
            for j in 0..k {
                prop_assert!((q.row(i)[j] - expected[i][j]).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn single_sample_target_is_q((_, k, d, x, m, alpha) in reps_strategy()) {
        let reps = matrix(1, d, &x);
        let mu = matrix(k, d, &m);
        let q = soft_assign(&reps, &mu, alpha).unwrap();
        prop_assert_eq!(target_distribution(&q), q);
    }

    #[test]
    fn kl_is_non_negative((n, k, d, x, m, alpha) in reps_strategy(), shift in -2.0f64..2.0) {
        let reps = matrix(n, d, &x);
        let mu = matrix(k, d, &m);
        let q = soft_assign(&reps, &mu, alpha).unwrap();
        let moved: Vec<f64> = x.iter().map(|v| v + shift).collect();
        let p = target_distribution(&soft_assign(&matrix(n, d, &moved), &mu, alpha).unwrap());
        prop_assert!(clustering_loss(&p, &q).unwrap().0 >= -1e-12);
        prop_assert!(clustering_loss(&q, &q).unwrap().0.abs() <= 1e-12);
    }

    #[test]
    fn aggregate_with_one_hot_selects_tower(
        towers in prop::collection::vec(0.0f64..1.0, 1..6),
        pick in any::<prop::sample::Index>(),
    ) {
        let k = pick.index(towers.len());
        let mut w = vec![0.0; towers.len()];
        w[k] = 1.0;
        prop_assert_eq!(aggregate(&towers, &w), towers[k]);
    }
}

#[test]
fn target_distribution_matches_hand_formula() {
    let q = Tensor::matrix(2, 2, vec![0.8, 0.2, 0.4, 0.6]).unwrap();
    let f = [0.8 + 0.4, 0.2 + 0.6];
    let raw = |i: usize, j: usize| q.row(i)[j] * q.row(i)[j] / f[j];
    let p = target_distribution(&q);
    for i in 0..2 {
        let z = raw(i, 0) + raw(i, 1);
        for j in 0..2 {
            assert!((p.row(i)[j] - raw(i, j) / z).abs() < 1e-15);
        }
    }
}

struct Batch {
    feats: Vec<usize>,
    items: Vec<usize>,
    labels: Vec<u8>,
}

fn tiny_batch() -> Batch {
    Batch {
        feats: vec![0, 1, 2, 3, 1, 0, 2, 2, 0, 3, 1, 1],
        items: vec![0, 2, 1, 2, 0, 1],
        labels: vec![1, 0, 0, 1, 1, 0],
    }
}

fn tower_grads(params: &BreakerParams, weights: &Tensor) -> Vec<Vec<f64>> {
    let b = tiny_batch();
    let inputs = Inputs::new(&b.feats, &b.items);
    let fwd = forward(params, &inputs, Weighting::Fixed(weights)).unwrap();
    let (_, grads) = backward(params, &inputs, &fwd, &b.labels, None, 0.0).unwrap();
    (0..params.dims.clusters)
        .map(|k| {
            params
                .params
                .names()
                .filter(|n| n.starts_with(&format!("tower.{k}.")))
                .flat_map(|n| grads.get(n).unwrap().data().to_vec())
                .collect()
        })
        .collect()
}

fn constant_weights(rows: usize, w: &[f64]) -> Tensor {
    Tensor::matrix(rows, w.len(), w.repeat(rows)).unwrap()
}

#[test]
fn one_hot_weights_silence_other_towers() {
    let params = BreakerParams::init(check_dims(), 11).unwrap();
    for k in 0..2 {
        let mut w = vec![0.0; 2];
        w[k] = 1.0;
        let g = tower_grads(&params, &constant_weights(6, &w));
        assert!(g[1 - k].iter().all(|&v| v == 0.0));
        assert!(g[k].iter().any(|&v| v != 0.0));
    }
}

#[test]
fn fractional_weights_scale_tower_gradients() {
    let mut params = BreakerParams::init(check_dims(), 5).unwrap();
    // Make both towers identical so only the weights tell them apart.
    let names: Vec<String> = params.params.names().filter(|n| n.starts_with("tower.0.")).map(String::from).collect();
    for n in names {
        let t = params.params.get(&n).unwrap().clone();
        params.params.set(&n.replacen("tower.0.", "tower.1.", 1), t).unwrap();
    }
    let w = [0.3, 0.7];
    let g = tower_grads(&params, &constant_weights(6, &w));
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let (n0, n1) = (norm(&g[0]), norm(&g[1]));
    assert!(n0 > 0.0);
    assert!((n0 / w[0] - n1 / w[1]).abs() <= 1e-10, "{n0} {n1}");
    for (a, b) in g[0].iter().zip(&g[1]) {
        assert!((a / w[0] - b / w[1]).abs() <= 1e-10);
    }
}
