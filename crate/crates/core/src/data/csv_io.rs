use std::path::Path;

use super::{InteractionsTable, ItemRecord, Rating};
use crate::error::{Error, Result};

fn parse_err(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.into(),
        line,
        message: message.into(),
    }
}

fn column(header: &csv::StringRecord, path: &Path, name: &str) -> Result<usize> {
    header
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| parse_err(path, 1, format!("missing column `{name}`")))
}

fn reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    csv::ReaderBuilder::new()
        .flexible(true)
        .from_path(path)
        .map_err(|e| Error::csv_open(path, e))
}

fn record_line(rec: &csv::StringRecord) -> u64 {
    rec.position().map_or(0, |p| p.line())
}

/// Reads `user_id,item_id,rating[,timestamp]` with a header row.
pub fn read_interactions_csv(path: &Path) -> Result<InteractionsTable> {
    let mut r = reader(path)?;
    let header = r.headers()?.clone();
    let cu = column(&header, path, "user_id")?;
    let ci = column(&header, path, "item_id")?;
    let cr = column(&header, path, "rating")?;
    let ct = header.iter().position(|h| h.trim() == "timestamp");

    let mut records = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(path, line, e.to_string())
        })?;
        let line = record_line(&rec);
        let field = |c: usize, name: &str| {
            rec.get(c)
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .ok_or_else(|| parse_err(path, line, format!("missing `{name}`")))
        };
        let user_id = field(cu, "user_id")?.to_string();
        let item_id = field(ci, "item_id")?.to_string();
        let raw = field(cr, "rating")?;
        let rating = raw
            .parse::<u8>()
            .ok()
            .filter(|r| (1..=5).contains(r))
            .ok_or_else(|| parse_err(path, line, format!("rating `{raw}` is not an integer in 1..=5")))?;
        let timestamp = match ct.and_then(|c| rec.get(c)).map(str::trim) {
            None | Some("") => None,
            Some(t) => Some(
                t.parse::<i64>()
                    .map_err(|_| parse_err(path, line, format!("bad timestamp `{t}`")))?,
            ),
        };
        records.push(Rating {
            user_id,
            item_id,
            rating,
            timestamp,
        });
    }
    InteractionsTable::new(records)
}

/// Reads `item_id,price,genres`; an empty price means unknown.
pub fn read_item_meta_csv(path: &Path) -> Result<Vec<ItemRecord>> {
    let mut r = reader(path)?;
    let header = r.headers()?.clone();
    let ci = column(&header, path, "item_id")?;
    let cp = column(&header, path, "price")?;
    let cg = column(&header, path, "genres")?;

    let mut out = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(path, line, e.to_string())
        })?;
        let line = record_line(&rec);
        let item_id = rec
            .get(ci)
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .ok_or_else(|| parse_err(path, line, "missing `item_id`"))?
            .to_string();
        if !seen.insert(item_id.clone()) {
            return Err(parse_err(path, line, format!("duplicate item `{item_id}`")));
        }
        let price = match rec.get(cp).map(str::trim) {
            None | Some("") => None,
            Some(p) => Some(
                p.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite() && *v >= 0.0)
                    .ok_or_else(|| parse_err(path, line, format!("bad price `{p}`")))?,
            ),
        };
        let genres = rec
            .get(cg)
            .unwrap_or("")
            .split('|')
            .map(str::trim)
            .filter(|g| !g.is_empty())
            .map(str::to_string)
            .collect();
        out.push(ItemRecord {
            item_id,
            price,
            genres,
        });
    }
    Ok(out)
}

pub fn write_interactions_csv(path: &Path, table: &InteractionsTable) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv_open(path, e))?;
    let with_ts = table.records().iter().any(|r| r.timestamp.is_some());
    if with_ts {
        w.write_record(["user_id", "item_id", "rating", "timestamp"])?;
    } else {
        w.write_record(["user_id", "item_id", "rating"])?;
    }
    for r in table.records() {
        let rating = r.rating.to_string();
        if with_ts {
            let ts = r.timestamp.map(|t| t.to_string()).unwrap_or_default();
            w.write_record([r.user_id.as_str(), &r.item_id, &rating, &ts])?;
        } else {
            w.write_record([r.user_id.as_str(), &r.item_id, &rating])?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_item_meta_csv(path: &Path, items: &[ItemRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv_open(path, e))?;
    w.write_record(["item_id", "price", "genres"])?;
    for it in items {
        let price = it.price.map(|p| p.to_string()).unwrap_or_default();
        w.write_record([it.item_id.as_str(), &price, &it.genres.join("|")])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
