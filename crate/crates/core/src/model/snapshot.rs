//! Parameter snapshot format (version 1).
//!
//! ```text
//! magic        8 bytes   b"MGDRPAR1"
//! header_len   u64 LE    length of the JSON header in bytes
//! header       JSON      SnapshotHeader, UTF-8
//! params       f64 LE    `len` values in registry order
//! ```

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Objective, RecommenderParams, REGISTRY};
use crate::error::{Error, Result};

pub const SNAPSHOT_MAGIC: &[u8; 8] = b"MGDRPAR1";
pub const SNAPSHOT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotHeader {
    pub version: u32,
    pub n_items: usize,
    pub hidden: usize,
    pub registry: Vec<String>,
    pub len: usize,
    pub seed: u64,
    /// Objectives the parameters were trained on, if known.
    #[serde(default)]
    pub objectives: Vec<Objective>,
}

impl SnapshotHeader {
    pub fn for_params(params: &RecommenderParams, seed: u64, objectives: Vec<Objective>) -> Self {
        Self {
            version: SNAPSHOT_VERSION,
            n_items: params.n_items(),
            hidden: params.hidden(),
            registry: REGISTRY.iter().map(|s| s.to_string()).collect(),
            len: params.as_slice().len(),
            seed,
            objectives,
        }
    }
}

pub fn write_snapshot(path: &Path, params: &RecommenderParams, header: &SnapshotHeader) -> Result<()> {
    let json = serde_json::to_vec(header)?;
    let mut buf = Vec::with_capacity(16 + json.len() + 8 * params.as_slice().len());
    buf.extend_from_slice(SNAPSHOT_MAGIC);
    buf.extend_from_slice(&(json.len() as u64).to_le_bytes());
    buf.extend_from_slice(&json);
    for v in params.as_slice() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&buf).map_err(|e| Error::io(path, e))
}

pub fn read_snapshot(path: &Path) -> Result<(SnapshotHeader, RecommenderParams)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let bad = |m: &str| Error::Data(format!("{}: {m}", path.display()));
    if bytes.len() < 16 || &bytes[..8] != SNAPSHOT_MAGIC {
        return Err(bad("not a parameter snapshot"));
    }
    let hlen = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    let body = 16usize
        .checked_add(hlen)
        .filter(|&b| b <= bytes.len())
        .ok_or_else(|| bad("truncated header"))?;
    let header: SnapshotHeader = serde_json::from_slice(&bytes[16..body])?;
    if header.version != SNAPSHOT_VERSION {
        return Err(bad(&format!("unsupported snapshot version {}", header.version)));
    }
    if header.registry.iter().map(String::as_str).ne(REGISTRY.iter().copied()) {
        return Err(bad("unexpected parameter registry order"));
    }
    let expected = RecommenderParams::flat_len(header.n_items, header.hidden);
    if header.len != expected || bytes.len() - body != 8 * expected {
        return Err(bad(&format!(
            "payload holds {} bytes, header promises {expected} values",
            bytes.len() - body
        )));
    }
    let data = bytes[body..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let params = RecommenderParams::from_flat(header.n_items, header.hidden, data)?;
    Ok((header, params))
}
