//! Binary checkpoint format.
//!
//! Layout: magic `BRKR`, one version byte, a `u32` little-endian length
//! followed by that many bytes of UTF-8 JSON metadata, then one entry per
//! tensor (`u16` name length, name, `u8` rank, `u32` dims, `f64` values,
//! all little-endian) and finally the CRC32 of everything before it.

use std::fs;
use std::path::{Path, PathBuf};

use breaker_core::engine::ParamSet;
use breaker_core::model::{BreakerParams, ModelDims, TargetParams};
use breaker_core::trainer::TrainConfig;
use breaker_core::Tensor;
use serde::{Deserialize, Serialize};

pub const MAGIC: &[u8; 4] = b"BRKR";
pub const VERSION: u8 = 0x01;
pub const TARGET_PREFIX: &str = "target.";

#[derive(Debug, thiserror::Error)]
pub enum CheckpointError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("corrupt checkpoint: {0}")]
    Corrupt(String),
    #[error("unknown checkpoint version {0:#04x} (supported: {VERSION:#04x})")]
    UnknownVersion(u8),
    #[error("checkpoint tensor `{name}` has shape {found:?}, config implies {expected:?}")]
    ShapeMismatch {
        name: String,
        expected: Vec<usize>,
        found: Vec<usize>,
    },
}

type Result<T> = std::result::Result<T, CheckpointError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointMeta {
    pub format_version: u8,
    pub train: TrainConfig,
    pub dims: ModelDims,
    /// Optimizer steps taken.
    pub step: u64,
    pub epochs: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub meta: CheckpointMeta,
    pub params: BreakerParams,
    pub target: TargetParams,
}

fn put_tensor(out: &mut Vec<u8>, name: &str, t: &Tensor) {
    out.extend_from_slice(&(name.len() as u16).to_le_bytes());
    out.extend_from_slice(name.as_bytes());
    out.push(t.shape().len() as u8);
    for &d in t.shape() {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for v in t.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

pub fn encode(ckpt: &Checkpoint) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    let meta = serde_json::to_vec(&ckpt.meta).expect("serializable metadata");
    out.extend_from_slice(&(meta.len() as u32).to_le_bytes());
    out.extend_from_slice(&meta);
    for (name, t) in ckpt.params.params.iter() {
        put_tensor(&mut out, name, t);
    }
    for (name, t) in ckpt.target.params.iter() {
        put_tensor(&mut out, &format!("{TARGET_PREFIX}{name}"), t);
    }
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| CheckpointError::Corrupt(format!("truncated at byte {}", self.pos)))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

fn check_shapes(expected: &ParamSet, found: &[(String, Tensor)], prefix: &str) -> Result<()> {
    for (i, (name, t)) in expected.iter().enumerate() {
        let full = format!("{prefix}{name}");
        match found.get(i) {
            Some((n, _)) if *n != full => {
                return Err(CheckpointError::Corrupt(format!("expected tensor `{full}`, found `{n}`")));
            }
            Some((_, f)) if f.shape() != t.shape() => {
                return Err(CheckpointError::ShapeMismatch {
                    name: full,
                    expected: t.shape().to_vec(),
                    found: f.shape().to_vec(),
                });
            }
            Some(_) => {}
            None => return Err(CheckpointError::Corrupt(format!("missing tensor `{full}`"))),
        }
    }
    Ok(())
}

pub fn decode(bytes: &[u8]) -> Result<Checkpoint> {
    if bytes.len() < MAGIC.len() + 1 + 4 + 4 || &bytes[..4] != MAGIC {
        return Err(CheckpointError::Corrupt("missing BRKR header".into()));
    }
    if bytes[4] != VERSION {
        return Err(CheckpointError::UnknownVersion(bytes[4]));
    }
    let (body, tail) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes(tail.try_into().unwrap());
    if crc32fast::hash(body) != stored {
        return Err(CheckpointError::Corrupt("CRC32 mismatch".into()));
    }
    let mut cur = Cursor { buf: body, pos: 5 };
    let meta_len = cur.u32()? as usize;
    let meta: CheckpointMeta = serde_json::from_slice(cur.take(meta_len)?)
        .map_err(|e| CheckpointError::Corrupt(format!("metadata: {e}")))?;

    let mut tensors = Vec::new();
    while cur.pos < body.len() {
        let name_len = cur.u16()? as usize;
        let name = std::str::from_utf8(cur.take(name_len)?)
            .map_err(|_| CheckpointError::Corrupt("tensor name is not UTF-8".into()))?
            .to_string();
        let ndim = cur.take(1)?[0] as usize;
        let shape: Vec<usize> = (0..ndim).map(|_| cur.u32().map(|d| d as usize)).collect::<Result<_>>()?;
        let len: usize = shape.iter().product();
        let raw = cur.take(len.checked_mul(8).ok_or_else(|| CheckpointError::Corrupt("tensor too large".into()))?)?;
        let data = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        let t = Tensor::new(shape, data).map_err(|e| CheckpointError::Corrupt(e.to_string()))?;
        tensors.push((name, t));
    }

    let fresh = BreakerParams::init(meta.dims.clone(), 0)
        .map_err(|e| CheckpointError::Corrupt(format!("metadata: {e}")))?;
    let n_main = fresh.params.len();
    let n_target = fresh.layout.user_len;
    if tensors.len() != n_main + n_target {
        return Err(CheckpointError::Corrupt(format!(
            "{} tensors, config implies {}",
            tensors.len(),
            n_main + n_target
        )));
    }
    check_shapes(&fresh.params, &tensors[..n_main], "")?;
    check_shapes(&TargetParams::snapshot(&fresh).params, &tensors[n_main..], TARGET_PREFIX)?;

    let mut main = ParamSet::new();
    let mut target = ParamSet::new();
    for (i, (name, t)) in tensors.into_iter().enumerate() {
        let res = if i < n_main {
            main.insert(name, t)
        } else {
            target.insert(&name[TARGET_PREFIX.len()..], t)
        };
        res.map_err(|e| CheckpointError::Corrupt(e.to_string()))?;
    }
    let params = BreakerParams::from_params(meta.dims.clone(), main)
        .map_err(|e| CheckpointError::Corrupt(e.to_string()))?;
    Ok(Checkpoint {
        meta,
        params,
        target: TargetParams { params: target },
    })
}

pub fn save_checkpoint(path: &Path, ckpt: &Checkpoint) -> Result<()> {
    fs::write(path, encode(ckpt)).map_err(|source| CheckpointError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let bytes = fs::read(path).map_err(|source| CheckpointError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    decode(&bytes)
}
