//! Picking one operating point from a Pareto front with LINMAP.
//!
//! Each axis is min-max normalized over the front (maximize orientation,
//! best = 1) and the point closest to the all-ones ideal wins. Axes on which
//! every point agrees carry no information and are left out of the distance.

use std::cmp::Ordering;
use std::path::Path;

use crate::error::{Error, Result};
use crate::moo::{
    dominates, read_points_csv, write_points_csv, ArchiveSchema, ObjectivePoint, Orientation,
    ParetoArchive, PointRow,
};

const DIST_TIE: f64 = 1e-12;

/// A mutually non-dominated set of points with ids.
#[derive(Debug, Clone, PartialEq)]
pub struct FrontView {
    schema: ArchiveSchema,
    ids: Vec<String>,
    raw: Vec<Vec<f64>>,
}

impl FrontView {
    pub fn new(schema: ArchiveSchema, rows: Vec<(String, Vec<f64>)>) -> Result<Self> {
        let mut points = Vec::with_capacity(rows.len());
        for (_, v) in &rows {
            points.push(schema.point(v.clone())?);
        }
        for (i, a) in points.iter().enumerate() {
            for (j, b) in points.iter().enumerate() {
                if i != j && dominates(a, b)? {
                    return Err(Error::contract(format!(
                        "front point `{}` dominates `{}`",
                        rows[i].0, rows[j].0
                    )));
                }
            }
        }
        let (ids, raw) = rows.into_iter().unzip();
        Ok(Self { schema, ids, raw })
    }

    pub fn from_archive<T>(archive: &ParetoArchive<T>) -> Self {
        Self {
            schema: archive.schema().clone(),
            ids: archive.entries().iter().map(|e| e.id.clone()).collect(),
            raw: archive.entries().iter().map(|e| e.point.values().to_vec()).collect(),
        }
    }

    /// Reads a front or archive CSV (with its sidecar schema).
    pub fn read_csv(path: &Path) -> Result<Self> {
        let (schema, rows) = read_points_csv(path)?;
        Self::new(schema, rows.into_iter().map(|r| (r.id, r.values)).collect())
    }

    pub fn schema(&self) -> &ArchiveSchema {
        &self.schema
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    /// Values as stored, in the schema's orientations.
    pub fn raw(&self) -> &[Vec<f64>] {
        &self.raw
    }

    /// Values with every axis turned into "larger is better".
    pub fn maximized(&self) -> Vec<Vec<f64>> {
        self.raw
            .iter()
            .map(|v| {
                v.iter()
                    .zip(&self.schema.orientations)
                    .map(|(&x, o)| match o {
                        Orientation::Maximize => x,
                        Orientation::Minimize => -x,
                    })
                    .collect()
            })
            .collect()
    }

    fn require_non_empty(&self) -> Result<()> {
        if self.is_empty() {
            Err(Error::contract("front is empty"))
        } else {
            Ok(())
        }
    }
}

/// Componentwise best value over the front, in maximize orientation.
pub fn ideal_point(front: &FrontView) -> Result<ObjectivePoint> {
    front.require_non_empty()?;
    let pts = front.maximized();
    let ideal = (0..front.schema.len())
        .map(|j| pts.iter().map(|p| p[j]).fold(f64::NEG_INFINITY, f64::max))
        .collect();
    ObjectivePoint::maximize(ideal)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub index: usize,
    pub id: String,
    pub distance: f64,
    /// Normalized coordinates of every front point; constant axes are 1.
    pub normalized: Vec<Vec<f64>>,
}

/// Min-max normalizes every axis; constant axes map to 1 and are reported
/// as inactive.
pub fn normalize_front(front: &FrontView) -> (Vec<Vec<f64>>, Vec<bool>) {
    let pts = front.maximized();
    let dims = front.schema.len();
    let mut active = vec![false; dims];
    let mut out = vec![vec![1.0; dims]; pts.len()];
    for j in 0..dims {
        let lo = pts.iter().map(|p| p[j]).fold(f64::INFINITY, f64::min);
        let hi = pts.iter().map(|p| p[j]).fold(f64::NEG_INFINITY, f64::max);
        if hi > lo {
            active[j] = true;
            for (o, p) in out.iter_mut().zip(&pts) {
                o[j] = (p[j] - lo) / (hi - lo);
            }
        }
    }
    (out, active)
}

pub fn linmap_select(front: &FrontView) -> Result<Selection> {
    front.require_non_empty()?;
    let (norm, active) = normalize_front(front);
    let dist: Vec<f64> = norm
        .iter()
        .map(|p| {
            p.iter()
                .zip(&active)
                .filter(|(_, &a)| a)
                .fold(0.0, |acc: f64, (x, _)| acc + (1.0 - x) * (1.0 - x))
                .sqrt()
        })
        .collect();
    let better = |a: usize, b: usize| -> Ordering {
        if (dist[a] - dist[b]).abs() > DIST_TIE {
            return dist[b].total_cmp(&dist[a]);
        }
        for (x, y) in norm[a].iter().zip(&norm[b]) {
            match x.total_cmp(y) {
                Ordering::Equal => continue,
                o => return o,
            }
        }
        front.ids[b].cmp(&front.ids[a])
    };
    let best = (1..front.len()).fold(0, |best, i| if better(i, best) == Ordering::Greater { i } else { best });
    Ok(Selection {
        index: best,
        id: front.ids[best].clone(),
        distance: dist[best],
        normalized: norm,
    })
}

/// Writes the front CSV with a `selected` column and returns the selected id.
pub fn export_front(front: &FrontView, path: &Path) -> Result<String> {
    let sel = linmap_select(front)?;
    let rows: Vec<PointRow> = front
        .ids
        .iter()
        .zip(&front.raw)
        .enumerate()
        .map(|(i, (id, v))| PointRow {
            id: id.clone(),
            values: v.clone(),
            selected: Some(i == sel.index),
        })
        .collect();
    write_points_csv(path, &front.schema, &rows)?;
    Ok(sel.id)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn schema2() -> ArchiveSchema {
        ArchiveSchema::new(
            vec!["recall".into(), "revenue".into()],
            vec![Orientation::Maximize; 2],
        )
        .unwrap()
    }

    fn front(points: &[(f64, f64)]) -> FrontView {
        FrontView::new(
            schema2(),
            points
                .iter()
                .enumerate()
                .map(|(i, &(a, b))| (format!("p{i}"), vec![a, b]))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn ideal_examples() {
        let f = front(&[(0.9, 0.1), (0.1, 0.9)]);
        assert_eq!(ideal_point(&f).unwrap().values(), &[0.9, 0.9]);
        let s = front(&[(0.3, 0.4)]);
        assert_eq!(ideal_point(&s).unwrap().values(), &[0.3, 0.4]);
    }

    #[test]
    fn dominated_insert_leaves_ideal() {
        let mut a: ParetoArchive = ParetoArchive::new(schema2());
        a.insert_values(vec![0.5, 0.5], "a", ()).unwrap();
        assert!(!a.insert_values(vec![0.4, 0.5], "b", ()).unwrap().is_accepted());
        let f = FrontView::from_archive(&a);
        assert_eq!(ideal_point(&f).unwrap().values(), &[0.5, 0.5]);
    }

    #[test]
    fn linmap_picks_the_knee() {
        let f = front(&[(0.9, 0.1), (0.1, 0.9), (0.6, 0.6)]);
        let s = linmap_select(&f).unwrap();
        assert_eq!(s.id, "p2");
        assert!((s.normalized[2][0] - 0.625).abs() < 1e-12);
        // sqrt(2) * 0.375
        assert!((s.distance - 0.530_330_085_889_910_6).abs() < 1e-12);
    }

    #[test]
    fn singleton_and_constant_axis() {
        assert_eq!(linmap_select(&front(&[(0.2, 0.3)])).unwrap().id, "p0");
        let f = FrontView::new(
            schema2(),
            vec![("lo".into(), vec![0.5, 0.1]), ("hi".into(), vec![0.5, 0.9])],
        );
        // (0.5, 0.1) is dominated by (0.5, 0.9); a genuine front cannot hold both.
        assert!(f.is_err());
        let s3 = ArchiveSchema::new(
            vec!["a".into(), "b".into(), "c".into()],
            vec![Orientation::Maximize; 3],
        )
        .unwrap();
        let f = FrontView::new(
            s3,
            vec![("x".into(), vec![0.5, 0.1, 0.9]), ("y".into(), vec![0.5, 0.9, 0.2])],
        )
        .unwrap();
        let (_, active) = normalize_front(&f);
        assert_eq!(active, vec![false, true, true]);
    }

    #[test]
    fn constant_axis_dropped_when_selecting() {
        // The constant first axis would otherwise be undefined; the decision
        // then rests on the second axis alone.
        let s = ArchiveSchema::new(vec!["a".into(), "b".into()], vec![Orientation::Maximize, Orientation::Minimize]).unwrap();
        let f = FrontView::new(s, vec![("p".into(), vec![0.5, 0.1])]).unwrap();
        let d = linmap_select(&f).unwrap().distance;
        assert_eq!(d.to_bits(), 0.0f64.to_bits());
        let mut a: ParetoArchive = ParetoArchive::new(schema2());
        a.insert_values(vec![0.5, 0.1], "lo", ()).unwrap();
        a.insert_values(vec![0.5, 0.9], "hi", ()).unwrap();
        let f = FrontView::from_archive(&a);
        assert_eq!(linmap_select(&f).unwrap().id, "hi");
    }

    #[test]
    fn ties_prefer_larger_tuple_then_id() {
        let f = front(&[(1.0, 0.0), (0.0, 1.0)]);
        assert_eq!(linmap_select(&f).unwrap().id, "p0");
        let f = FrontView::new(
            schema2(),
            vec![("b".into(), vec![0.0, 1.0]), ("a".into(), vec![0.0, 1.0]), ("c".into(), vec![1.0, 0.0])],
        )
        .unwrap();
        assert_eq!(linmap_select(&f).unwrap().id, "c");
    }

    #[test]
    fn empty_front_errors_and_writes_nothing() {
        let f = FrontView::new(schema2(), vec![]).unwrap();
        assert!(linmap_select(&f).is_err());
        assert!(ideal_point(&f).is_err());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("front.csv");
        assert!(export_front(&f, &path).is_err());
        assert!(!path.exists());
    }

    #[test]
    fn export_round_trips_with_one_selected() {
        let f = front(&[(0.9, 0.1), (0.1, 0.9), (0.6, 0.6)]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("front.csv");
        assert_eq!(export_front(&f, &path).unwrap(), "p2");
        let (_, rows) = read_points_csv(&path).unwrap();
        assert_eq!(rows.iter().filter(|r| r.selected == Some(true)).count(), 1);
        assert_eq!(FrontView::read_csv(&path).unwrap(), f);
    }

    #[test]
    fn minimize_axes_are_flipped() {
        let s = ArchiveSchema::new(vec!["loss".into(), "gain".into()], vec![Orientation::Minimize, Orientation::Maximize]).unwrap();
        let f = FrontView::new(
            s,
            vec![("a".into(), vec![0.1, 0.1]), ("b".into(), vec![0.9, 0.9]), ("c".into(), vec![0.4, 0.6])],
        )
        .unwrap();
        assert_eq!(linmap_select(&f).unwrap().id, "c");
        assert_eq!(ideal_point(&f).unwrap().values(), &[-0.1, 0.9]);
    }

    fn arb_front() -> impl Strategy<Value = Vec<(f64, f64)>> {
        // Points on a strictly decreasing curve are mutually non-dominated.
        prop::collection::btree_set(0u32..1000, 1..12).prop_map(|xs| {
            xs.into_iter()
                .map(|x| {
                    let x = x as f64 / 1000.0;
                    (x, (1.0 - x * x).sqrt())
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn affine_rescaling_keeps_selection(
            pts in arb_front(),
            axis in 0usize..2,
            scale in 0.01f64..1000.0,
            offset in -100.0f64..100.0,
        ) {
            let base = linmap_select(&front(&pts)).unwrap();
            let scaled: Vec<(f64, f64)> = pts
                .iter()
                .map(|&(a, b)| if axis == 0 { (a * scale + offset, b) } else { (a, b * scale + offset) })
                .collect();
            let s = linmap_select(&front(&scaled)).unwrap();
            prop_assert_eq!(s.id, base.id);
            prop_assert!(s.index < pts.len());
        }
    }
}
