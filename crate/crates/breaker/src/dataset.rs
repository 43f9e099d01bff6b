//! Dataset directories: `train.csv`, `test.csv` and `manifest.json`.

use std::fs;
use std::path::{Path, PathBuf};

use breaker_core::data::{count_positives, count_users, DatasetManifest, Record, SyntheticData};

use crate::error::{Error, Result};

pub const TRAIN_FILE: &str = "train.csv";
pub const TEST_FILE: &str = "test.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub train: Vec<Record>,
    pub test: Vec<Record>,
    pub manifest: DatasetManifest,
}

impl From<SyntheticData> for Dataset {
    fn from(d: SyntheticData) -> Self {
        Self {
            train: d.train,
            test: d.test,
            manifest: d.manifest,
        }
    }
}

pub fn header(features: usize) -> Vec<String> {
    let mut h: Vec<String> = ["user_id", "item_id", "label", "true_cluster"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    h.extend((0..features).map(|j| format!("f{j}")));
    h
}

/// Serializes records to CSV bytes.
pub fn records_to_csv(records: &[Record], features: usize) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Config(e.to_string());
    w.write_record(header(features)).map_err(csv_err)?;
    let mut row: Vec<String> = Vec::with_capacity(4 + features);
    for r in records {
        row.clear();
        row.push(r.user_id.clone());
        row.push(r.item_id.to_string());
        row.push(r.label.to_string());
        row.push(r.true_cluster.map(|c| c.to_string()).unwrap_or_default());
        row.extend(r.features.iter().map(usize::to_string));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| Error::Config(e.to_string()))
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: serde::Serialize>(value: &T) -> Vec<u8> {
    let mut s = serde_json::to_vec_pretty(value).expect("serializable value");
    s.push(b'\n');
    s
}

pub fn write_dataset(dir: &Path, data: &Dataset) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let m = data.manifest.features.len();
    write_file(&dir.join(TRAIN_FILE), &records_to_csv(&data.train, m)?)?;
    write_file(&dir.join(TEST_FILE), &records_to_csv(&data.test, m)?)?;
    write_file(&dir.join(MANIFEST_FILE), &to_json(&data.manifest))
}

fn read_records(path: &Path, features: usize) -> Result<Vec<Record>> {
    let bad = |message: String| Error::Dataset {
        path: path.to_path_buf(),
        message,
    };
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::Reader::from_reader(bytes.as_slice());
    let found = rdr.headers().map_err(|e| bad(e.to_string()))?.clone();
    let expected = header(features);
    if found.iter().ne(expected.iter().map(String::as_str)) {
        return Err(bad(format!(
            "header has {} columns, manifest implies `{}`",
            found.len(),
            expected.join(",")
        )));
    }
    let mut out = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let field = |i: usize| -> Result<usize> {
            rec[i].parse::<usize>().map_err(|_| {
                bad(format!("row {row}: column `{}` is not an integer: `{}`", expected[i], &rec[i]))
            })
        };
        let label = field(2)?;
        if label > 1 {
            return Err(bad(format!("row {row}: label {label} is not 0 or 1")));
        }
        let true_cluster = if rec[3].is_empty() { None } else { Some(field(3)?) };
        out.push(Record {
            user_id: rec[0].to_string(),
            item_id: field(1)?,
            label: label as u8,
            features: (4..4 + features).map(field).collect::<Result<_>>()?,
            true_cluster,
        });
    }
    Ok(out)
}

pub fn read_manifest(dir: &Path) -> Result<DatasetManifest> {
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Dataset {
        path,
        message: e.to_string(),
    })
}

fn check_split(path: PathBuf, records: &[Record], m: &DatasetManifest, count: usize, positives: usize, users: usize) -> Result<()> {
    let bad = |message: String| Error::Dataset {
        path: path.clone(),
        message,
    };
    if records.len() != count {
        return Err(bad(format!("{} records, manifest declares {count}", records.len())));
    }
    let pos = count_positives(records);
    if pos != positives {
        return Err(bad(format!("{pos} positive records, manifest declares {positives}")));
    }
    let u = count_users(records);
    if u != users {
        return Err(bad(format!("{u} users, manifest declares {users}")));
    }
    m.check_records(records).map_err(|e| bad(e.to_string()))
}

/// Loads both splits and checks them against the manifest.
pub fn load_dataset(dir: &Path) -> Result<Dataset> {
    let manifest = read_manifest(dir)?;
    let m = manifest.features.len();
    let train_path = dir.join(TRAIN_FILE);
    let test_path = dir.join(TEST_FILE);
    let train = read_records(&train_path, m)?;
    let test = read_records(&test_path, m)?;
    check_split(train_path, &train, &manifest, manifest.train_records, manifest.train_positives, manifest.train_users)?;
    check_split(test_path, &test, &manifest, manifest.test_records, manifest.test_positives, manifest.test_users)?;
    Ok(Dataset {
        train,
        test,
        manifest,
    })
}
