use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_breaker");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

struct Fixture {
    _dir: tempfile::TempDir,
    root: PathBuf,
    config: PathBuf,
    data: PathBuf,
}

const CONFIG: &str = r#"{
  "data": {"n_users": 1000, "n_items": 4, "seed": 5},
  "train": {"epochs": 2, "embedding_dim": 4, "rem_widths": [8, 4], "tower_widths": [4], "batch_size": 64, "seed": 3},
  "eval": {"silhouette_cap": 200}
}"#;

fn fixture() -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().to_path_buf();
    let config = root.join("config.json");
    fs::write(&config, CONFIG).unwrap();
    let data = root.join("data");
    let out = run(&["gen", "--config", p(&config), "--out", p(&data)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    Fixture {
        _dir: dir,
        root,
        config,
        data,
    }
}

fn train(f: &Fixture, name: &str, extra: &[&str]) -> PathBuf {
    let out_dir = f.root.join(name);
    let mut args = vec!["train", "--data", p(&f.data), "--config", p(&f.config), "--out", p(&out_dir)];
    args.extend_from_slice(extra);
    let out = run(&args);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    out_dir
}

fn read(path: &Path) -> Vec<u8> {
    fs::read(path).unwrap()
}

#[test]
fn gen_writes_consistent_files_deterministically() {
    let f = fixture();
    for file in ["train.csv", "test.csv", "manifest.json", "resolved_config.json"] {
        assert!(f.data.join(file).exists(), "{file}");
    }
    let manifest: serde_json::Value = serde_json::from_slice(&read(&f.data.join("manifest.json"))).unwrap();
    let train_lines = String::from_utf8(read(&f.data.join("train.csv"))).unwrap().lines().count() - 1;
    let test_lines = String::from_utf8(read(&f.data.join("test.csv"))).unwrap().lines().count() - 1;
    assert_eq!(manifest["train_records"], train_lines);
    assert_eq!(manifest["test_records"], test_lines);
    assert_eq!(train_lines + test_lines, 1000);

    let again = f.root.join("again");
    assert_eq!(code(&run(&["gen", "--config", p(&f.config), "--out", p(&again)])), 0);
    for file in ["train.csv", "test.csv", "manifest.json"] {
        assert_eq!(read(&f.data.join(file)), read(&again.join(file)));
    }
}

#[test]
fn config_errors_exit_2_and_name_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(&cfg, r#"{"train": {}}"#).unwrap();
    let out = run(&["gen", "--config", p(&cfg), "--out", p(&dir.path().join("d"))]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("`data`"), "{}", stderr(&out));

    fs::write(&cfg, r#"{"data": {"n_items": 4}}"#).unwrap();
    let out = run(&["gen", "--config", p(&cfg), "--out", p(&dir.path().join("d"))]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("n_users"), "{}", stderr(&out));

    let out = run(&["gen", "--config", p(&dir.path().join("absent.json")), "--out", p(&dir.path().join("d"))]);
    assert_eq!(code(&out), 3);
    let out = run(&["train", "--data", p(&dir.path().join("nowhere")), "--out", p(&dir.path().join("r"))]);
    assert_eq!(code(&out), 3);
}

#[test]
fn training_and_evaluation_are_reproducible() {
    let f = fixture();
    let a = train(&f, "a", &[]);
    let b = train(&f, "b", &[]);
    for file in ["checkpoint.brkr", "epochs.csv", "resolved_config.json"] {
        assert_eq!(read(&a.join(file)), read(&b.join(file)), "{file}");
    }
    let resolved: serde_json::Value = serde_json::from_slice(&read(&a.join("resolved_config.json"))).unwrap();
    assert!(resolved["train"]["sync_period"].is_u64());
    assert_eq!(resolved["data"]["n_users"], 1000);

    let ckpt = a.join("checkpoint.brkr");
    let mut reports = Vec::new();
    for name in ["r1.json", "r2.json"] {
        let report = f.root.join(name);
        let out = run(&["eval", "--data", p(&f.data), "--ckpt", p(&ckpt), "--report", p(&report)]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        reports.push(read(&report));
    }
    assert_eq!(reports[0], reports[1]);
    let json: serde_json::Value = serde_json::from_slice(&reports[0]).unwrap();
    for key in ["recall_at_1", "aer", "item_auc", "item_auc_macro", "silhouette", "ari", "tower_correlation"] {
        assert!(json.get(key).is_some(), "{key}");
    }
}

#[test]
fn no_delay_variant_matches_unit_sync_period() {
    let f = fixture();
    let a = train(&f, "nodelay", &["--variant", "breaker2-"]);
    let cfg = f.root.join("m1.json");
    fs::write(&cfg, CONFIG.replace(r#""seed": 3}"#, r#""seed": 3, "sync_period": 1}"#)).unwrap();
    let out_dir = f.root.join("m1");
    let out = run(&["train", "--data", p(&f.data), "--config", p(&cfg), "--out", p(&out_dir)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(read(&a.join("epochs.csv")), read(&out_dir.join("epochs.csv")));
}

#[test]
fn unknown_variant_is_a_config_error() {
    let f = fixture();
    let out = run(&["train", "--data", p(&f.data), "--out", p(&f.root.join("x")), "--variant", "breaker3"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn mismatched_checkpoint_exits_2_with_both_shapes() {
    let f = fixture();
    let a = train(&f, "a", &[]);
    let other_cfg = f.root.join("other.json");
    fs::write(&other_cfg, r#"{"data": {"n_users": 500, "n_items": 4, "noise_features": 2}}"#).unwrap();
    let other = f.root.join("other");
    assert_eq!(code(&run(&["gen", "--config", p(&other_cfg), "--out", p(&other)])), 0);
    let out = run(&["eval", "--data", p(&other), "--ckpt", p(&a.join("checkpoint.brkr")), "--report", p(&f.root.join("r.json"))]);
    assert_eq!(code(&out), 2);
    let msg = stderr(&out);
    assert!(msg.contains("[4, 4, 4, 4, 10, 10, 10, 10]") && msg.contains("[4, 4, 4, 4, 10, 10]"), "{msg}");
}

#[test]
fn gradcheck_seeds_pass_and_injected_fault_fails() {
    for seed in ["0", "1", "2"] {
        let out = run(&["gradcheck", "--seed", seed]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    }
    let out = run(&["gradcheck", "--inject-fault", "flip-centroid-sign"]);
    assert_eq!(code(&out), 5);
    assert!(stderr(&out).contains("centroids"), "{}", stderr(&out));
}

#[test]
fn export_reps_schema_and_sample() {
    let f = fixture();
    let a = train(&f, "a", &[]);
    let ckpt = a.join("checkpoint.brkr");
    let mut texts = Vec::new();
    for name in ["e1.csv", "e2.csv"] {
        let path = f.root.join("exports").join(name);
        let out = run(&["export-reps", "--data", p(&f.data), "--ckpt", p(&ckpt), "--out", p(&path)]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        texts.push(String::from_utf8(read(&path)).unwrap());
    }
    assert_eq!(texts[0], texts[1]);
    assert!(f.root.join("exports").join("resolved_config.json").exists());
    let mut lines = texts[0].lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(header[..2], ["user_id", "cluster"]);
    assert_eq!(header.iter().filter(|h| h.starts_with('q')).count(), 4);
    assert_eq!(header.iter().filter(|h| h.starts_with('e')).count(), 4);
    assert_eq!(header.last(), Some(&"true_cluster"));
    let mut rows = 0;
    for line in lines {
        let cells: Vec<&str> = line.split(',').collect();
        let q: f64 = cells[2..6].iter().map(|c| c.parse::<f64>().unwrap()).sum();
        assert!((q - 1.0).abs() <= 1e-9);
        rows += 1;
    }
    assert!(rows > 0 && rows <= 3000);
}
