//! Subcommand implementations. Each writes its outputs and returns the
//! line printed to standard output.

use std::fs;
use std::path::Path;
use std::time::Instant;

use breaker_core::data::{generate_synthetic, Record};
use breaker_core::eval::{evaluate, EvalReport};
use breaker_core::model::network::user_representations;
use breaker_core::model::rank::argmax;
use breaker_core::model::soft_assign;
use breaker_core::rng;
use breaker_core::trainer::{distinct_users, EpochLog, Trainer, Variant};
use breaker_core::verify::{run_gradient_suite, Fault, SuiteReport};
use rand::seq::index::sample;

use crate::checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CheckpointMeta, VERSION};
use crate::config::{CliConfig, EvalConfig, RESOLVED_CONFIG_FILE};
use crate::dataset::{load_dataset, to_json, write_dataset, write_file, Dataset};
use crate::error::{Error, Result};
use crate::report::{epochs_csv, EPOCHS_FILE};

pub const CHECKPOINT_FILE: &str = "checkpoint.brkr";

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn parent_dir(path: &Path) -> &Path {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    }
}

fn write_resolved(dir: &Path, cfg: &CliConfig) -> Result<()> {
    write_file(&dir.join(RESOLVED_CONFIG_FILE), &to_json(cfg))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.6}"))
}

pub fn gen(config: &Path, out: &Path) -> Result<String> {
    let mut cfg = CliConfig::load(config)?;
    let data_cfg = cfg
        .data
        .clone()
        .ok_or_else(|| Error::Config(format!("{}: missing required key `data`", config.display())))?;
    let data: Dataset = generate_synthetic(&data_cfg)?.into();
    write_dataset(out, &data)?;
    cfg.data = data.manifest.generator.clone();
    write_resolved(out, &cfg)?;
    let m = &data.manifest;
    Ok(format!(
        "train_records={} test_records={} train_positives={} test_positives={}",
        m.train_records, m.test_records, m.train_positives, m.test_positives
    ))
}

/// Outcome of a training run before anything is written.
#[derive(Debug, Clone)]
pub struct TrainRun {
    pub checkpoint: Checkpoint,
    pub logs: Vec<EpochLog>,
    pub config: CliConfig,
}

/// Trains on `data.train`, evaluating on `data.test` after every epoch when
/// enabled.
pub fn train_on(data: &Dataset, mut cfg: CliConfig) -> Result<TrainRun> {
    let mut trainer = Trainer::new(
        cfg.train.clone(),
        data.manifest.user_cardinalities(),
        data.manifest.n_items,
        &data.train,
    )?;
    cfg.train.sync_period = Some(trainer.sync_period());
    cfg.data = data.manifest.generator.clone();
    let eval = EvalConfig {
        representation: false,
        ..cfg.eval.clone()
    };
    let mut started = Instant::now();
    let logs = trainer.fit(&data.train, |t, log| {
        if cfg.eval.timing {
            log.seconds = Some(started.elapsed().as_secs_f64());
        }
        if cfg.eval.per_epoch && !data.test.is_empty() {
            let r = evaluate(t.params(), t.mixing(), &data.test, &eval.options())?;
            log.recall_at_1 = r.recall_at_1;
            log.item_auc_macro = r.item_auc_macro;
            log.aer = r.aer;
        }
        started = Instant::now();
        Ok(())
    })?;
    let checkpoint = Checkpoint {
        meta: CheckpointMeta {
            format_version: VERSION,
            train: cfg.train.clone(),
            dims: trainer.params().dims.clone(),
            step: trainer.steps(),
            epochs: trainer.epochs_done(),
        },
        params: trainer.params().clone(),
        target: trainer.target().clone(),
    };
    Ok(TrainRun {
        checkpoint,
        logs,
        config: cfg,
    })
}

pub fn train(data_dir: &Path, config: Option<&Path>, out: &Path, variant: Option<&str>) -> Result<String> {
    let mut cfg = CliConfig::load_or_default(config)?;
    if let Some(v) = variant {
        cfg.train.variant = v.parse::<Variant>()?;
    }
    let data = load_dataset(data_dir)?;
    create_dir(out)?;
    let run = train_on(&data, cfg)?;
    save_checkpoint(&out.join(CHECKPOINT_FILE), &run.checkpoint)?;
    write_file(&out.join(EPOCHS_FILE), epochs_csv(&run.logs).as_bytes())?;
    write_resolved(out, &run.config)?;
    let last = run.logs.last().expect("at least one epoch");
    Ok(format!(
        "variant={} epoch={} loss={:.6} loss_p={:.6} loss_c={:.6} recall_at_1={} item_auc_macro={} aer={}",
        run.config.train.variant,
        last.epoch,
        last.loss,
        last.loss_p,
        last.loss_c,
        fmt_opt(last.recall_at_1),
        fmt_opt(last.item_auc_macro),
        fmt_opt(last.aer)
    ))
}

fn load_matching(data_dir: &Path, ckpt: &Path) -> Result<(Dataset, Checkpoint)> {
    let ck = load_checkpoint(ckpt)?;
    let data = load_dataset(data_dir)?;
    let want = (data.manifest.user_cardinalities(), data.manifest.n_items);
    let have = (ck.meta.dims.user_cardinalities.clone(), ck.meta.dims.n_items);
    if want != have {
        return Err(Error::Config(format!(
            "checkpoint expects user fields {:?} and {} items, dataset has user fields {:?} and {} items",
            have.0, have.1, want.0, want.1
        )));
    }
    Ok((data, ck))
}

pub fn eval_report(data: &Dataset, ck: &Checkpoint, eval: &EvalConfig) -> Result<EvalReport> {
    Ok(evaluate(&ck.params, ck.meta.train.mixing_after(ck.meta.epochs), &data.test, &eval.options())?)
}

pub fn eval(data_dir: &Path, ckpt: &Path, report: &Path, config: Option<&Path>) -> Result<String> {
    let cfg = CliConfig::load_or_default(config)?;
    let (data, ck) = load_matching(data_dir, ckpt)?;
    let r = eval_report(&data, &ck, &cfg.eval)?;
    let dir = parent_dir(report);
    create_dir(dir)?;
    write_file(report, &to_json(&r))?;
    write_resolved(
        dir,
        &CliConfig {
            data: data.manifest.generator.clone(),
            train: ck.meta.train.clone(),
            eval: cfg.eval,
        },
    )?;
    Ok(format!(
        "recall_at_1={} aer={} item_auc_macro={} silhouette={} ari={}",
        fmt_opt(r.recall_at_1),
        fmt_opt(r.aer),
        fmt_opt(r.item_auc_macro),
        fmt_opt(r.silhouette),
        fmt_opt(r.ari)
    ))
}

pub fn gradcheck(seed: u64, fault: Option<Fault>) -> Result<(SuiteReport, String)> {
    let report = run_gradient_suite(seed, fault)?;
    let mut lines = String::new();
    for g in &report.groups {
        lines.push_str(&format!(
            "{:<34} max_error={:.3e} tolerance={:.0e} {}\n",
            g.group,
            g.max_error,
            g.tolerance,
            if g.passed() { "ok" } else { "FAIL" }
        ));
    }
    Ok((report, lines))
}

/// Representation rows for a seeded sample of at most `cap` distinct
/// users, as CSV text.
pub fn export_rows(records: &[Record], ck: &Checkpoint, cap: usize, seed: u64) -> Result<String> {
    let users = distinct_users(records);
    let picked: Vec<&Record> = if users.len() > cap {
        let mut idx = sample(&mut rng::seeded(seed), users.len(), cap).into_vec();
        idx.sort_unstable();
        idx.into_iter().map(|i| users[i]).collect()
    } else {
        users
    };
    let p = &ck.params;
    let k = p.dims.clusters;
    let d = p.dims.user_rep_dim();
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["user_id".to_string(), "cluster".to_string()];
    header.extend((0..k).map(|j| format!("q{j}")));
    header.extend((0..d).map(|j| format!("e{j}")));
    header.push("true_cluster".into());
    let csv_err = |e: csv::Error| Error::Config(e.to_string());
    w.write_record(&header).map_err(csv_err)?;
    for chunk in picked.chunks(512) {
        let feats: Vec<usize> = chunk.iter().flat_map(|r| r.features.iter().copied()).collect();
        let reps = user_representations(&p.params, &p.layout, &p.dims, &feats)?;
        let q = soft_assign(&reps, p.centroids(), p.dims.alpha)?;
        for (i, r) in chunk.iter().enumerate() {
            let mut row = vec![r.user_id.clone(), argmax(q.row(i)).to_string()];
            row.extend(q.row(i).iter().map(f64::to_string));
            row.extend(reps.row(i).iter().map(f64::to_string));
            row.push(r.true_cluster.map(|c| c.to_string()).unwrap_or_default());
            w.write_record(&row).map_err(csv_err)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Config(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("CSV of UTF-8 fields"))
}

pub fn export_reps(data_dir: &Path, ckpt: &Path, out: &Path, config: Option<&Path>) -> Result<String> {
    let cfg = CliConfig::load_or_default(config)?;
    let (data, ck) = load_matching(data_dir, ckpt)?;
    let text = export_rows(&data.test, &ck, cfg.eval.export_cap, cfg.eval.seed)?;
    let dir = parent_dir(out);
    create_dir(dir)?;
    write_file(out, text.as_bytes())?;
    write_resolved(
        dir,
        &CliConfig {
            data: data.manifest.generator.clone(),
            train: ck.meta.train.clone(),
            eval: cfg.eval,
        },
    )?;
    Ok(format!("users={}", text.lines().count().saturating_sub(1)))
}
