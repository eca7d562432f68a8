use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance on `Σ αᵢ = 1`.
pub const SIMPLEX_TOL: f64 = 1e-9;

/// Convex-combination weights on the unit simplex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct AlphaVector(Vec<f64>);

impl AlphaVector {
    pub fn new(alphas: Vec<f64>) -> Result<Self> {
        if alphas.is_empty() {
            return Err(Error::contract("alpha vector must be non-empty"));
        }
        if alphas.iter().any(|a| !a.is_finite() || *a < 0.0) {
            return Err(Error::contract(format!(
                "alpha entries must be finite and non-negative: {alphas:?}"
            )));
        }
        let sum: f64 = alphas.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::contract(format!(
                "alpha entries must sum to 1, got {sum}"
            )));
        }
        Ok(Self(alphas))
    }

    pub fn uniform(n: usize) -> Self {
        assert!(n > 0, "uniform alpha over zero objectives");
        Self(vec![1.0 / n as f64; n])
    }

    /// Unit vector on axis `i` of an `n`-simplex.
    pub fn vertex(n: usize, i: usize) -> Self {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        Self(v)
    }

    /// Builds from weights known to lie on the simplex up to rounding;
    /// clamps tiny negatives and rescales the sum to exactly one.
    pub(crate) fn from_raw(mut alphas: Vec<f64>) -> Self {
        for a in alphas.iter_mut() {
            if *a < 0.0 {
                *a = 0.0;
            }
        }
        let sum: f64 = alphas.iter().sum();
        if sum > 0.0 {
            alphas.iter_mut().for_each(|a| *a /= sum);
        } else {
            let n = alphas.len() as f64;
            alphas.iter_mut().for_each(|a| *a = 1.0 / n);
        }
        Self(alphas)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl TryFrom<Vec<f64>> for AlphaVector {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<AlphaVector> for Vec<f64> {
    fn from(a: AlphaVector) -> Self {
        a.0
    }
}

impl std::ops::Index<usize> for AlphaVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// `Σ αᵢ gᵢ`, the common descent vector.
pub fn combine_gradients<G: AsRef<[f64]>>(grads: &[G], alphas: &AlphaVector) -> Result<Vec<f64>> {
    Error::check_len("combine_gradients: alphas vs gradients", grads.len(), alphas.len())?;
    let dim = grads[0].as_ref().len();
    let mut out = vec![0.0; dim];
    for (g, &a) in grads.iter().zip(alphas.as_slice()) {
        let g = g.as_ref();
        Error::check_len("combine_gradients: gradient length", dim, g.len())?;
        for (o, &x) in out.iter_mut().zip(g) {
            *o += a * x;
        }
    }
    Ok(out)
}

/// L2 norm of the combined vector. Zero means the full-gradient bundle is
/// Pareto stationary; under mini-batch gradients it is only a diagnostic.
pub fn stationarity_residual<G: AsRef<[f64]>>(grads: &[G], alphas: &AlphaVector) -> Result<f64> {
    Ok(norm(&combine_gradients(grads, alphas)?))
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
