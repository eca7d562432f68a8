//! Python bindings: the min-norm solvers, the Pareto archive, LINMAP
//! selection, and the dataset / train / evaluate pipeline.

use std::path::PathBuf;

use pyo3::exceptions::{PyArithmeticError, PyOSError, PyValueError};
use pyo3::prelude::*;

use ::mgdrec::data::{self, SplitName, SynthConfig};
use ::mgdrec::moo::{self, ArchiveSchema, Orientation};
use ::mgdrec::run::{self, RunConfig};
use ::mgdrec::{qcop, selection, Error};

fn to_py(e: Error) -> PyErr {
    let msg = e.to_string();
    match e {
        Error::Numerical { .. } => PyArithmeticError::new_err(msg),
        Error::Io { .. } => PyOSError::new_err(msg),
        _ => PyValueError::new_err(msg),
    }
}

fn schema(names: Vec<String>, maximize: Vec<bool>) -> PyResult<ArchiveSchema> {
    let orientations = maximize
        .into_iter()
        .map(|m| if m { Orientation::Maximize } else { Orientation::Minimize })
        .collect();
    ArchiveSchema::new(names, orientations).map_err(to_py)
}

/// Closed-form min-norm weights for two gradients.
#[pyfunction]
fn alpha_two(g1: Vec<f64>, g2: Vec<f64>) -> PyResult<Vec<f64>> {
    Ok(qcop::alpha_two(&g1, &g2).map_err(to_py)?.into_inner())
}

/// Min-norm weights for any number of gradients.
/// Returns `(alpha, norm_sq, converged)`.
#[pyfunction]
#[pyo3(signature = (grads, tol = qcop::DEFAULT_TOL, max_iters = qcop::DEFAULT_MAX_ITERS))]
fn solve_qcop(grads: Vec<Vec<f64>>, tol: f64, max_iters: usize) -> PyResult<(Vec<f64>, f64, bool)> {
    let n = grads.len();
    let bundle = qcop::GradientBundle::new(grads, vec![1.0; n]).map_err(to_py)?;
    let sol = qcop::solve_qcop(&bundle, tol, max_iters).map_err(to_py)?;
    Ok((sol.alpha.into_inner(), sol.norm_sq, sol.converged))
}

/// Non-dominated set of labelled points.
#[pyclass(name = "ParetoArchive")]
struct PyArchive {
    inner: moo::ParetoArchive,
}

#[pymethods]
impl PyArchive {
    #[new]
    #[pyo3(signature = (names, maximize, capacity = None))]
    fn new(names: Vec<String>, maximize: Vec<bool>, capacity: Option<usize>) -> PyResult<Self> {
        let s = schema(names, maximize)?;
        let inner = match capacity {
            Some(c) => moo::ParetoArchive::with_capacity_limit(s, c).map_err(to_py)?,
            None => moo::ParetoArchive::new(s),
        };
        Ok(Self { inner })
    }

    /// Offers a point; returns whether it was kept.
    fn insert(&mut self, values: Vec<f64>, id: String) -> PyResult<bool> {
        Ok(self.inner.insert_values(values, id, ()).map_err(to_py)?.is_accepted())
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn entries(&self) -> Vec<(String, Vec<f64>)> {
        self.inner
            .entries()
            .iter()
            .map(|e| (e.id.clone(), e.point.values().to_vec()))
            .collect()
    }

    /// LINMAP pick: `(id, distance)`.
    fn select(&self) -> PyResult<(String, f64)> {
        let sel = selection::linmap_select(&selection::FrontView::from_archive(&self.inner)).map_err(to_py)?;
        Ok((sel.id, sel.distance))
    }

    fn write_csv(&self, path: PathBuf) -> PyResult<()> {
        self.inner.write_csv(&path).map_err(to_py)
    }
}

/// LINMAP over an explicit front: `(id, distance)`.
#[pyfunction]
fn linmap_select(
    ids: Vec<String>,
    points: Vec<Vec<f64>>,
    names: Vec<String>,
    maximize: Vec<bool>,
) -> PyResult<(String, f64)> {
    let front = selection::FrontView::new(schema(names, maximize)?, ids.into_iter().zip(points).collect())
        .map_err(to_py)?;
    let sel = selection::linmap_select(&front).map_err(to_py)?;
    Ok((sel.id, sel.distance))
}

/// Writes `interactions.csv` and `items.csv` into `out_dir`. `config` is a
/// JSON object with synthetic-generator fields.
#[pyfunction]
#[pyo3(signature = (out_dir, seed = 0, config = None))]
fn synthesize(out_dir: PathBuf, seed: u64, config: Option<&str>) -> PyResult<usize> {
    let cfg: SynthConfig = match config {
        Some(s) => serde_json::from_str(s).map_err(|e| PyValueError::new_err(e.to_string()))?,
        None => SynthConfig::default(),
    };
    let (table, items) = data::generate_synthetic(&cfg, seed).map_err(to_py)?;
    run::create_dir(&out_dir).map_err(to_py)?;
    data::write_interactions_csv(&out_dir.join("interactions.csv"), &table).map_err(to_py)?;
    data::write_item_meta_csv(&out_dir.join("items.csv"), &items).map_err(to_py)?;
    Ok(table.len())
}

/// Builds a dataset bundle from rating and item CSVs with default
/// preprocessing; returns the statistics line.
#[pyfunction]
#[pyo3(signature = (interactions, items, out_dir, seed = 0))]
fn ingest(interactions: PathBuf, items: PathBuf, out_dir: PathBuf, seed: u64) -> PyResult<String> {
    let cfg = run::IngestConfig::default();
    let table = data::read_interactions_csv(&interactions).map_err(to_py)?;
    let meta = data::read_item_meta_csv(&items).map_err(to_py)?;
    let ds = data::preprocess(&table, &meta, cfg.threshold, cfg.min_count, seed, cfg.split_config()).map_err(to_py)?;
    data::save_bundle(&out_dir, &ds).map_err(to_py)?;
    Ok(ds.stats().to_string())
}

/// A loaded dataset bundle.
#[pyclass(name = "Dataset")]
struct PyDataset {
    inner: data::Dataset,
}

#[pymethods]
impl PyDataset {
    #[staticmethod]
    fn load(dir: PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: data::load_bundle(&dir).map_err(to_py)?,
        })
    }

    #[getter]
    fn n_items(&self) -> usize {
        self.inner.n_items()
    }

    fn n_users(&self, split: &str) -> PyResult<usize> {
        let split: SplitName = split.parse().map_err(to_py)?;
        Ok(self.inner.users(split).len())
    }

    fn prices(&self) -> Vec<f64> {
        self.inner.meta.price.clone()
    }

    fn is_documentary(&self) -> Vec<bool> {
        self.inner.meta.is_doc.clone()
    }

    fn stats(&self) -> String {
        self.inner.stats().to_string()
    }
}

/// Trains on a bundle and writes a run directory. `config` is a run
/// configuration JSON string; returns `(steps, archive ids)`.
#[pyfunction]
#[pyo3(signature = (data_dir, out_dir, config = None))]
fn train(py: Python<'_>, data_dir: PathBuf, out_dir: PathBuf, config: Option<&str>) -> PyResult<(u64, Vec<String>)> {
    let cfg: RunConfig = match config {
        Some(s) => serde_json::from_str(s).map_err(|e| PyValueError::new_err(e.to_string()))?,
        None => RunConfig::default(),
    };
    let ds = data::load_bundle(&data_dir).map_err(to_py)?;
    let state = py.detach(|| run::train_run(&ds, &cfg, &out_dir)).map_err(to_py)?;
    Ok((state.step, state.archive.entries().iter().map(|e| e.id.clone()).collect()))
}

/// Metrics of a checkpoint on a split: `(recall, revenue, doc_count)` at k.
#[pyfunction]
#[pyo3(signature = (checkpoint, data_dir, split = "test", k = 10))]
fn evaluate(checkpoint: PathBuf, data_dir: PathBuf, split: &str, k: usize) -> PyResult<(f64, f64, f64)> {
    let split: SplitName = split.parse().map_err(to_py)?;
    let ds = data::load_bundle(&data_dir).map_err(to_py)?;
    let r = run::evaluate_checkpoint(&checkpoint, &ds, split, k).map_err(to_py)?;
    Ok((r.recall_at_k, r.revenue_at_k, r.doc_count_at_k))
}

/// LINMAP over a run's archive; writes the front CSV and returns the id.
#[pyfunction]
fn select(run_dir: PathBuf, front_csv: PathBuf) -> PyResult<String> {
    Ok(run::select_run(&run_dir, &front_csv).map_err(to_py)?.id)
}

/// Runs the command line with `args` (without the program name) and
/// returns its exit code.
#[pyfunction]
fn cli(args: Vec<String>) -> i32 {
    let mut out = std::io::stdout();
    ::mgdrec::cli::main_with_args(std::iter::once("mgdrec".to_string()).chain(args), &mut out)
}

#[pymodule(name = "mgdrec")]
fn py_mgdrec(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(alpha_two, m)?)?;
    m.add_function(wrap_pyfunction!(solve_qcop, m)?)?;
    m.add_function(wrap_pyfunction!(linmap_select, m)?)?;
    m.add_function(wrap_pyfunction!(synthesize, m)?)?;
    m.add_function(wrap_pyfunction!(ingest, m)?)?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(select, m)?)?;
    m.add_function(wrap_pyfunction!(cli, m)?)?;
    m.add_class::<PyArchive>()?;
    m.add_class::<PyDataset>()?;
    Ok(())
}
