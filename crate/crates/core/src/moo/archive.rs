//! Non-dominated archive with optional crowding-based capacity.
//!
//! On-disk form is a CSV with header `payload_id,obj_1,...,obj_n` (plus an
//! optional trailing `selected` column) and a sidecar JSON next to it,
//! same stem, `.json` extension, holding [`ArchiveSchema`].

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{dominates, ObjectivePoint, Orientation};
use crate::error::{Error, Result};

/// Names and orientations of the archive axes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchiveSchema {
    pub names: Vec<String>,
    pub orientations: Vec<Orientation>,
}

impl ArchiveSchema {
    pub fn new(names: Vec<String>, orientations: Vec<Orientation>) -> Result<Self> {
        if names.is_empty() {
            return Err(Error::contract("archive needs at least one objective"));
        }
        Error::check_len("archive schema", names.len(), orientations.len())?;
        Ok(Self {
            names,
            orientations,
        })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn point(&self, values: Vec<f64>) -> Result<ObjectivePoint> {
        Error::check_len("archive point", self.len(), values.len())?;
        ObjectivePoint::new(values, self.orientations.clone())
    }

    pub fn sidecar_path(csv_path: &Path) -> PathBuf {
        csv_path.with_extension("json")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArchiveEntry<T> {
    pub id: String,
    pub point: ObjectivePoint,
    pub payload: T,
}

#[derive(Debug, Clone, PartialEq)]
pub enum InsertOutcome<T> {
    Accepted,
    /// Dominated by (or equal to) a member, or crowded out at capacity.
    Rejected,
    /// Inserted; the listed members were dominated by the new point or
    /// crowded out to respect capacity.
    AcceptedEvicting(Vec<ArchiveEntry<T>>),
}

impl<T> InsertOutcome<T> {
    pub fn is_accepted(&self) -> bool {
        !matches!(self, InsertOutcome::Rejected)
    }

    pub fn evicted_ids(&self) -> Vec<&str> {
        match self {
            InsertOutcome::AcceptedEvicting(v) => v.iter().map(|e| e.id.as_str()).collect(),
            _ => Vec::new(),
        }
    }
}

/// A set of mutually non-dominated points with unique payload ids.
#[derive(Debug, Clone)]
pub struct ParetoArchive<T = ()> {
    schema: ArchiveSchema,
    entries: Vec<ArchiveEntry<T>>,
    capacity: Option<usize>,
}

impl<T> ParetoArchive<T> {
    pub fn new(schema: ArchiveSchema) -> Self {
        Self {
            schema,
            entries: Vec::new(),
            capacity: None,
        }
    }

    pub fn with_capacity_limit(schema: ArchiveSchema, capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::contract("archive capacity must be positive"));
        }
        Ok(Self {
            schema,
            entries: Vec::new(),
            capacity: Some(capacity),
        })
    }

    pub fn schema(&self) -> &ArchiveSchema {
        &self.schema
    }

    pub fn capacity(&self) -> Option<usize> {
        self.capacity
    }

    pub fn entries(&self) -> &[ArchiveEntry<T>] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&ArchiveEntry<T>> {
        self.entries.iter().find(|e| e.id == id)
    }

    pub fn contains_id(&self, id: &str) -> bool {
        self.get(id).is_some()
    }

    /// Convenience over [`insert`](Self::insert) using the schema's orientations.
    pub fn insert_values(
        &mut self,
        values: Vec<f64>,
        id: impl Into<String>,
        payload: T,
    ) -> Result<InsertOutcome<T>> {
        let point = self.schema.point(values)?;
        self.insert(point, id, payload)
    }

    pub fn insert(
        &mut self,
        point: ObjectivePoint,
        id: impl Into<String>,
        payload: T,
    ) -> Result<InsertOutcome<T>> {
        let id = id.into();
        Error::check_len("archive insert", self.schema.len(), point.len())?;
        if point.orientation() != self.schema.orientations.as_slice() {
            return Err(Error::contract(
                "point orientation differs from archive schema",
            ));
        }
        if self.contains_id(&id) {
            return Err(Error::contract(format!("duplicate payload id `{id}`")));
        }

        let canon = point.canonical();
        for e in &self.entries {
            if dominates(&e.point, &point)? || e.point.canonical() == canon {
                return Ok(InsertOutcome::Rejected);
            }
        }

        let mut evicted = Vec::new();
        let mut kept = Vec::with_capacity(self.entries.len() + 1);
        for e in self.entries.drain(..) {
            if dominates(&point, &e.point)? {
                evicted.push(e);
            } else {
                kept.push(e);
            }
        }
        self.entries = kept;
        self.entries.push(ArchiveEntry { id, point, payload });

        if let Some(cap) = self.capacity {
            while self.entries.len() > cap {
                let victim = self.most_crowded();
                let e = self.entries.remove(victim);
                if victim == self.entries.len() {
                    // The newcomer itself was crowded out; nothing else changed
                    // because a capacity overflow implies no dominance evictions.
                    debug_assert!(evicted.is_empty());
                    return Ok(InsertOutcome::Rejected);
                }
                evicted.push(e);
            }
        }

        Ok(if evicted.is_empty() {
            InsertOutcome::Accepted
        } else {
            InsertOutcome::AcceptedEvicting(evicted)
        })
    }

    /// Index of the member with the smallest nearest-neighbour distance in
    /// min-max normalized objective space; ties go to the latest inserted.
    fn most_crowded(&self) -> usize {
        let pts: Vec<Vec<f64>> = self.entries.iter().map(|e| e.point.canonical()).collect();
        let n_axes = self.schema.len();
        let mut lo = vec![f64::INFINITY; n_axes];
        let mut hi = vec![f64::NEG_INFINITY; n_axes];
        for p in &pts {
            for (j, &v) in p.iter().enumerate() {
                lo[j] = lo[j].min(v);
                hi[j] = hi[j].max(v);
            }
        }
        let scaled: Vec<Vec<f64>> = pts
            .iter()
            .map(|p| {
                p.iter()
                    .enumerate()
                    .map(|(j, &v)| {
                        let span = hi[j] - lo[j];
                        if span > 0.0 {
                            (v - lo[j]) / span
                        } else {
                            0.0
                        }
                    })
                    .collect()
            })
            .collect();

        let mut best = (f64::INFINITY, 0usize);
        for (i, p) in scaled.iter().enumerate() {
            let nearest = scaled
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, q)| {
                    p.iter()
                        .zip(q)
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum::<f64>()
                })
                .fold(f64::INFINITY, f64::min);
            if nearest <= best.0 {
                best = (nearest, i);
            }
        }
        best.1
    }

    pub fn rows(&self) -> Vec<PointRow> {
        self.entries
            .iter()
            .map(|e| PointRow {
                id: e.id.clone(),
                values: e.point.values().to_vec(),
                selected: None,
            })
            .collect()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_points_csv(path, &self.schema, &self.rows())
    }

    /// Drops payloads, keeping ids and points.
    pub fn without_payloads(&self) -> ParetoArchive<()> {
        ParetoArchive {
            schema: self.schema.clone(),
            entries: self
                .entries
                .iter()
                .map(|e| ArchiveEntry {
                    id: e.id.clone(),
                    point: e.point.clone(),
                    payload: (),
                })
                .collect(),
            capacity: self.capacity,
        }
    }
}

impl ParetoArchive<()> {
    /// Loads an archive CSV; every row must survive insertion.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let (schema, rows) = read_points_csv(path)?;
        let mut archive = ParetoArchive::new(schema);
        for row in rows {
            let id = row.id.clone();
            if !archive.insert_values(row.values, row.id, ())?.is_accepted() {
                return Err(Error::Data(format!(
                    "{}: row `{id}` is dominated; not a Pareto front",
                    path.display()
                )));
            }
        }
        Ok(archive)
    }
}

/// One CSV row of a front or archive export.
#[derive(Debug, Clone, PartialEq)]
pub struct PointRow {
    pub id: String,
    pub values: Vec<f64>,
    pub selected: Option<bool>,
}

pub fn write_points_csv(path: &Path, schema: &ArchiveSchema, rows: &[PointRow]) -> Result<()> {
    let with_selected = rows.iter().any(|r| r.selected.is_some());
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv_open(path, e))?;
    let mut header = vec!["payload_id".to_string()];
    header.extend((1..=schema.len()).map(|i| format!("obj_{i}")));
    if with_selected {
        header.push("selected".into());
    }
    w.write_record(&header)?;
    for r in rows {
        Error::check_len("front row", schema.len(), r.values.len())?;
        let mut rec = vec![r.id.clone()];
        rec.extend(r.values.iter().map(|v| v.to_string()));
        if with_selected {
            rec.push(if r.selected.unwrap_or(false) { "1" } else { "0" }.into());
        }
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;

    let sidecar = ArchiveSchema::sidecar_path(path);
    let json = serde_json::to_string_pretty(schema)?;
    fs::write(&sidecar, json + "\n").map_err(|e| Error::io(&sidecar, e))
}

pub fn read_points_csv(path: &Path) -> Result<(ArchiveSchema, Vec<PointRow>)> {
    let sidecar = ArchiveSchema::sidecar_path(path);
    let text = fs::read_to_string(&sidecar).map_err(|e| Error::io(&sidecar, e))?;
    let schema: ArchiveSchema = serde_json::from_str(&text)?;
    ArchiveSchema::new(schema.names.clone(), schema.orientations.clone())?;

    let mut r = csv::Reader::from_path(path).map_err(|e| Error::csv_open(path, e))?;
    let header = r.headers()?.clone();
    let n = schema.len();
    let with_selected = match header.len() {
        l if l == n + 1 => false,
        l if l == n + 2 && &header[n + 1] == "selected" => true,
        l => {
            return Err(Error::Parse {
                path: path.into(),
                line: 1,
                message: format!("expected {} objective columns, header has {l} fields", n),
            })
        }
    };

    let mut rows = Vec::new();
    let mut seen = HashSet::new();
    for (i, rec) in r.records().enumerate() {
        let line = i as u64 + 2;
        let rec = rec?;
        let bad = |message: String| Error::Parse {
            path: path.into(),
            line,
            message,
        };
        if rec.len() != header.len() {
            return Err(bad(format!("expected {} fields, got {}", header.len(), rec.len())));
        }
        let id = rec[0].to_string();
        if !seen.insert(id.clone()) {
            return Err(bad(format!("duplicate payload id `{id}`")));
        }
        let values = (1..=n)
            .map(|j| {
                rec[j]
                    .parse::<f64>()
                    .map_err(|e| bad(format!("column {}: {e}", j + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        let selected = if with_selected {
            Some(match &rec[n + 1] {
                "1" => true,
                "0" => false,
                other => return Err(bad(format!("selected must be 0 or 1, got `{other}`"))),
            })
        } else {
            None
        };
        rows.push(PointRow {
            id,
            values,
            selected,
        });
    }
    Ok((schema, rows))
}
