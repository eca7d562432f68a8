//! Multi-objective primitives: objective vectors, Pareto dominance, the
//! non-dominated archive and the common descent vector.
//!
//! Every comparison is carried out in a canonical "minimize" frame: axes
//! marked [`Orientation::Maximize`] are negated before any dominance test,
//! so a single code path handles mixed orientations.

mod archive;
pub(crate) mod descent;

pub use archive::{
    read_points_csv, write_points_csv, ArchiveEntry, ArchiveSchema, InsertOutcome, ParetoArchive,
    PointRow,
};
pub use descent::{combine_gradients, stationarity_residual, AlphaVector, SIMPLEX_TOL};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Minimize,
    Maximize,
}

impl Orientation {
    pub fn flipped(self) -> Self {
        match self {
            Orientation::Minimize => Orientation::Maximize,
            Orientation::Maximize => Orientation::Minimize,
        }
    }

    /// Maps a raw value into the minimize frame.
    #[inline]
    pub fn to_minimize(self, v: f64) -> f64 {
        match self {
            Orientation::Minimize => v,
            Orientation::Maximize => -v,
        }
    }
}

/// One solution's objective values together with the orientation of each axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectivePoint {
    values: Vec<f64>,
    orientation: Vec<Orientation>,
}

impl ObjectivePoint {
    pub fn new(values: Vec<f64>, orientation: Vec<Orientation>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::contract("objective point needs at least one value"));
        }
        Error::check_len("objective orientation", values.len(), orientation.len())?;
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::contract(format!(
                "objective values must be finite, got {v}"
            )));
        }
        Ok(Self {
            values,
            orientation,
        })
    }

    pub fn minimize(values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        Self::new(values, vec![Orientation::Minimize; n])
    }

    pub fn maximize(values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        Self::new(values, vec![Orientation::Maximize; n])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn orientation(&self) -> &[Orientation] {
        &self.orientation
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Values expressed in the minimize frame.
    pub fn canonical(&self) -> Vec<f64> {
        self.values
            .iter()
            .zip(&self.orientation)
            .map(|(&v, o)| o.to_minimize(v))
            .collect()
    }

    /// Same comparisons, opposite bookkeeping: each axis has its value negated
    /// and its orientation flipped.
    pub fn flipped(&self) -> Self {
        Self {
            values: self.values.iter().map(|v| -v).collect(),
            orientation: self.orientation.iter().map(|o| o.flipped()).collect(),
        }
    }
}

/// `true` iff `a` is no worse than `b` on every axis and strictly better on one.
pub fn dominates(a: &ObjectivePoint, b: &ObjectivePoint) -> Result<bool> {
    Error::check_len("dominance", a.len(), b.len())?;
    if a.orientation != b.orientation {
        return Err(Error::contract(
            "dominance requires identical orientation flags",
        ));
    }
    let mut strictly = false;
    for ((&av, &bv), o) in a.values.iter().zip(&b.values).zip(&a.orientation) {
        let (av, bv) = (o.to_minimize(av), o.to_minimize(bv));
        if av > bv {
            return Ok(false);
        }
        if av < bv {
            strictly = true;
        }
    }
    Ok(strictly)
}
