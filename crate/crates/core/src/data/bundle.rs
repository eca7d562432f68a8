//! Dataset bundle directory.
//!
//! `meta.json` holds item ids, item metadata and user ids per split. Each of
//! `train.bin`, `val.bin` and `test.bin` holds the interactions:
//!
//! ```text
//! magic     8 bytes  b"MGDRSPL1"
//! n_users   u32 LE
//! per user, in the order of the split's user ids in meta.json:
//!   n_visible u32 LE, n_held u32 LE,
//!   n_visible item indices u32 LE (ascending),
//!   n_held item indices u32 LE (ascending)
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Dataset, DatasetStats, UserRow};
use crate::error::{Error, Result};
use crate::model::ItemMeta;

pub const SPLIT_MAGIC: &[u8; 8] = b"MGDRSPL1";
pub const BUNDLE_FILES: [&str; 4] = ["meta.json", "train.bin", "val.bin", "test.bin"];
const BUNDLE_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct SplitUsers {
    train: Vec<String>,
    validation: Vec<String>,
    test: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct BundleMeta {
    version: u32,
    stats: DatasetStats,
    item_ids: Vec<String>,
    items: ItemMeta,
    users: SplitUsers,
}

fn encode_split(rows: &[UserRow]) -> Vec<u8> {
    let mut buf = Vec::with_capacity(12 + rows.iter().map(|u| 8 + 4 * u.n_positives()).sum::<usize>());
    buf.extend_from_slice(SPLIT_MAGIC);
    buf.extend_from_slice(&(rows.len() as u32).to_le_bytes());
    for u in rows {
        buf.extend_from_slice(&(u.visible.len() as u32).to_le_bytes());
        buf.extend_from_slice(&(u.held_out.len() as u32).to_le_bytes());
        for &i in u.visible.iter().chain(&u.held_out) {
            buf.extend_from_slice(&i.to_le_bytes());
        }
    }
    buf
}

fn decode_split(path: &Path, bytes: &[u8], ids: Vec<String>) -> Result<Vec<UserRow>> {
    let bad = |m: &str| Error::Data(format!("{}: {m}", path.display()));
    if bytes.len() < 12 || &bytes[..8] != SPLIT_MAGIC {
        return Err(bad("not a split file"));
    }
    let mut words = bytes[8..]
        .chunks(4)
        .map(|c| <[u8; 4]>::try_from(c).map(u32::from_le_bytes));
    let mut next = || -> Result<u32> {
        words
            .next()
            .and_then(|w| w.ok())
            .ok_or_else(|| bad("truncated"))
    };
    let n = next()? as usize;
    if n != ids.len() {
        return Err(bad(&format!("{n} users on disk, meta.json lists {}", ids.len())));
    }
    let mut rows = Vec::with_capacity(n);
    for user_id in ids {
        let nv = next()? as usize;
        let nh = next()? as usize;
        let visible = (0..nv).map(|_| next()).collect::<Result<Vec<_>>>()?;
        let held_out = (0..nh).map(|_| next()).collect::<Result<Vec<_>>>()?;
        rows.push(UserRow {
            user_id,
            visible,
            held_out,
        });
    }
    if next().is_ok() {
        return Err(bad("trailing bytes"));
    }
    Ok(rows)
}

pub fn save_bundle(dir: &Path, ds: &Dataset) -> Result<()> {
    ds.validate()?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let ids = |rows: &[UserRow]| rows.iter().map(|u| u.user_id.clone()).collect();
    let meta = BundleMeta {
        version: BUNDLE_VERSION,
        stats: ds.stats(),
        item_ids: ds.item_ids.clone(),
        items: ds.meta.clone(),
        users: SplitUsers {
            train: ids(&ds.train),
            validation: ids(&ds.validation),
            test: ids(&ds.test),
        },
    };
    let mut json = serde_json::to_vec_pretty(&meta)?;
    json.push(b'\n');
    let files: [(&str, Vec<u8>); 4] = [
        (BUNDLE_FILES[0], json),
        (BUNDLE_FILES[1], encode_split(&ds.train)),
        (BUNDLE_FILES[2], encode_split(&ds.validation)),
        (BUNDLE_FILES[3], encode_split(&ds.test)),
    ];
    for (name, bytes) in files {
        let p = dir.join(name);
        fs::write(&p, bytes).map_err(|e| Error::io(&p, e))?;
    }
    Ok(())
}

pub fn load_bundle(dir: &Path) -> Result<Dataset> {
    let read = |name: &str| {
        let p = dir.join(name);
        fs::read(&p).map_err(|e| Error::io(&p, e))
    };
    let meta: BundleMeta = serde_json::from_slice(&read(BUNDLE_FILES[0])?)?;
    if meta.version != BUNDLE_VERSION {
        return Err(Error::Data(format!(
            "{}: unsupported bundle version {}",
            dir.display(),
            meta.version
        )));
    }
    let split = |i: usize, ids: Vec<String>| -> Result<Vec<UserRow>> {
        decode_split(&dir.join(BUNDLE_FILES[i]), &read(BUNDLE_FILES[i])?, ids)
    };
    let ds = Dataset {
        item_ids: meta.item_ids,
        train: split(1, meta.users.train)?,
        validation: split(2, meta.users.validation)?,
        test: split(3, meta.users.test)?,
        meta: meta.items,
    };
    ds.validate()?;
    Ok(ds)
}
