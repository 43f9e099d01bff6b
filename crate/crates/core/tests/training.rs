use breaker_core::data::{generate_synthetic, iterate_batches, Record, SyntheticConfig};
use breaker_core::engine::ParamSet;
use breaker_core::model::{sync_target, BreakerParams};
use breaker_core::trainer::{EpochLog, Trainer, TrainConfig, Variant};
use breaker_core::{rng, Error};

fn dataset(seed: u64) -> (Vec<Record>, Vec<usize>, usize) {
    let d = generate_synthetic(&SyntheticConfig::new(600, 4, seed)).unwrap();
    let cards = d.manifest.user_cardinalities();
    (d.train, cards, d.manifest.n_items)
}

fn small(variant: Variant) -> TrainConfig {
    TrainConfig {
        variant,
        embedding_dim: 4,
        rem_widths: vec![8, 4],
        tower_widths: vec![6],
        batch_size: 32,
        epochs: 3,
        seed: 17,
        ..TrainConfig::default()
    }
}

fn fit(config: TrainConfig, train: &[Record], cards: &[usize], items: usize) -> (Vec<EpochLog>, BreakerParams) {
    let mut t = Trainer::new(config, cards.to_vec(), items, train).unwrap();
    let logs = t.fit(train, |_, _| Ok(())).unwrap();
    (logs, t.into_params())
}

/// Dense layer stack with ReLU on all but the last layer, from raw tensors.
fn mlp(ps: &ParamSet, prefix: &str, layers: usize, mut x: Vec<f64>, relu_last: bool) -> Vec<f64> {
    for l in 0..layers {
        let w = ps.get(&format!("{prefix}.{l}.w")).unwrap();
        let b = ps.get(&format!("{prefix}.{l}.b")).unwrap();
        let mut y: Vec<f64> = (0..w.rows())
            .map(|o| w.row(o).iter().zip(&x).map(|(a, v)| a * v).sum::<f64>() + b.data()[o])
            .collect();
        if l + 1 < layers || relu_last {
            y.iter_mut().for_each(|v| *v = v.max(0.0));
        }
        x = y;
    }
    x
}

/// Mean clamped cross-entropy of a single pointwise network.
fn plain_loss(ps: &ParamSet, records: &[&Record], rem_layers: usize, tower_layers: usize) -> f64 {
    let mut total = 0.0;
    for r in records {
        let mut u = Vec::new();
        for (j, &v) in r.features.iter().enumerate() {
            u.extend_from_slice(ps.get(&format!("user.emb.{j}")).unwrap().row(v));
        }
        let mut x = mlp(ps, "user.rem", rem_layers, u, false);
        let i = ps.get("item.emb").unwrap().row(r.item_id).to_vec();
        x.extend(mlp(ps, "item.rem", rem_layers, i, false));
        let logit = mlp(ps, "tower.0", tower_layers, x, false)[0];
        let y = (1.0 / (1.0 + (-logit).exp())).clamp(1e-7, 1.0 - 1e-7);
        total -= if r.label == 1 { y.ln() } else { (1.0 - y).ln() };
    }
    total / records.len() as f64
}

#[test]
fn single_tower_without_clustering_is_a_plain_network() {
    let (train, cards, items) = dataset(1);
    let cfg = |variant| TrainConfig { clusters: 1, lambda: 0.0, warmup_epochs: 0, ..small(variant) };

    let mut t = Trainer::new(cfg(Variant::Breaker), cards.clone(), items, &train).unwrap();
    let seed = rng::derive(17, 4);
    let batch = iterate_batches(&train, 32, seed, 0).next().unwrap();
    let rows: Vec<&Record> = batch.rows.iter().map(|&i| &train[i]).collect();
    let expected = plain_loss(&t.params().params, &rows, 2, 2);
    let report = t.step(&batch).unwrap();
    assert!((report.terms.classification - expected).abs() < 1e-12);

    let (a, pa) = fit(cfg(Variant::Breaker), &train, &cards, items);
    let (b, pb) = fit(cfg(Variant::NoClustering), &train, &cards, items);
    for (x, y) in a.iter().zip(&b) {
        assert!((x.loss - y.loss).abs() < 1e-12);
    }
    for ((name, x), (_, y)) in pa.params.iter().zip(pb.params.iter()) {
        if name != "centroids" {
            assert!(x.max_abs_diff(y) < 1e-9, "{name}");
        }
    }
}

#[test]
fn target_is_frozen_between_syncs() {
    let (train, cards, items) = dataset(2);
    let mut t = Trainer::new(TrainConfig { sync_period: Some(5), ..small(Variant::Breaker) }, cards, items, &train).unwrap();
    assert_eq!(t.sync_period(), 5);
    let mut drifted = 0;
    for epoch in 0..2u64 {
        for batch in iterate_batches(&train, 32, 99, epoch) {
            let frozen = t.target().clone();
            let report = t.step(&batch).unwrap();
            assert_eq!(report.synced, report.step % 5 == 0);
            if report.synced {
                assert_eq!(t.target().max_abs_diff(t.params()), 0.0);
            } else {
                assert_eq!(t.target(), &frozen);
                if t.target().max_abs_diff(t.params()) > 0.0 {
                    drifted += 1;
                }
            }
        }
    }
    assert!(drifted > 0);
}

#[test]
fn no_delay_variant_equals_unit_sync_period() {
    let (train, cards, items) = dataset(3);
    let (a, pa) = fit(small(Variant::NoDelay), &train, &cards, items);
    let (b, pb) = fit(TrainConfig { sync_period: Some(1), ..small(Variant::Breaker) }, &train, &cards, items);
    assert_eq!(a, b);
    assert_eq!(pa, pb);
}

#[test]
fn training_is_deterministic() {
    let (train, cards, items) = dataset(4);
    let (a, pa) = fit(small(Variant::Breaker), &train, &cards, items);
    let (b, pb) = fit(small(Variant::Breaker), &train, &cards, items);
    assert_eq!(a, b);
    assert_eq!(pa, pb);
    assert!(a.iter().all(|l| l.loss.is_finite() && l.loss_c >= 0.0));
    assert_eq!(a.iter().map(|l| l.epoch).collect::<Vec<_>>(), vec![0, 1, 2]);
}

#[test]
fn warmup_epochs_skip_the_clustering_loss() {
    let (train, cards, items) = dataset(5);
    let (logs, _) = fit(TrainConfig { warmup_epochs: 1, ..small(Variant::Breaker) }, &train, &cards, items);
    assert_eq!(logs[0].loss_c, 0.0);
    assert!(logs[1].loss_c > 0.0);
    let (plain, _) = fit(small(Variant::NoClustering), &train, &cards, items);
    assert_eq!(logs[0], plain[0]);
}

#[test]
fn sync_copies_only_the_user_side() {
    let (train, cards, items) = dataset(6);
    let t = Trainer::new(small(Variant::Breaker), cards, items, &train).unwrap();
    let mut params = t.params().clone();
    let mut target = t.target().clone();
    let n = target.params.len();
    assert!(target.params.names().all(|n| n.starts_with("user.")));
    params.params.values_mut(0)[0] += 1.0;
    assert_eq!(target.max_abs_diff(&params), 1.0);
    sync_target(&params, &mut target).unwrap();
    assert_eq!(target.max_abs_diff(&params), 0.0);
    assert_eq!(target.params.len(), n);
}

#[test]
fn non_finite_loss_aborts_with_step_and_terms() {
    let (train, cards, items) = dataset(7);
    let mut t = Trainer::new(small(Variant::Breaker), cards, items, &train).unwrap();
    t.fit(&train, |_, _| Ok(())).unwrap();
    let ps = &mut t.params_mut().params;
    let bias = ps.index_of("tower.0.1.b").unwrap();
    ps.values_mut(bias).fill(f64::NAN);
    let batch = iterate_batches(&train, 32, 0, 0).next().unwrap();
    let before = t.params().clone();
    match t.step(&batch) {
        Err(Error::NonFiniteLoss { step, loss, .. }) => {
            assert_eq!(step, t.steps());
            assert!(loss.is_nan());
        }
        other => panic!("{other:?}"),
    }
    let same = before.params.iter().zip(t.params().params.iter()).all(|((_, a), (_, b))| {
        a.data().iter().zip(b.data()).all(|(x, y)| x.to_bits() == y.to_bits())
    });
    assert!(same, "parameters changed after the abort");
}

#[test]
fn empty_training_set_is_rejected() {
    let (_, cards, items) = dataset(8);
    assert!(Trainer::new(small(Variant::Breaker), cards, items, &[]).is_err());
}
