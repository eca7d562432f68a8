//! Run directories: configuration files, manifests, and the drivers that
//! turn a dataset bundle plus a config into training artifacts.
//!
//! A training run directory holds:
//!
//! ```text
//! manifest.json        provenance; the only file with timestamps
//! config.json          the resolved run configuration
//! run_log.jsonl        one StepRecord per step
//! archive.csv/.json    the validation-metric Pareto archive
//! checkpoints/<id>.bin one snapshot per archive member
//! final.bin            parameters at the end of training
//! ```

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::{
    DEFAULT_MASK_FRAC, DEFAULT_MIN_COUNT, DEFAULT_RATIOS, DEFAULT_THRESHOLD, Dataset, SplitConfig,
};
use crate::error::{Error, Result};
use crate::metrics::{DEFAULT_K, MetricsReport};
use crate::model::{read_snapshot, write_snapshot, Likelihood, Objective, RecommenderParams, SnapshotHeader};
use crate::moo::{read_points_csv, write_points_csv, ArchiveSchema, PointRow};
use crate::selection::{export_front, linmap_select, FrontView, Selection};
use crate::trainer::{
    train, warm_start_content, RecommenderProblem, TrainConfig, TrainState, DEFAULT_CONTENT_CAP,
};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const CONFIG_FILE: &str = "config.json";
pub const RUN_LOG_FILE: &str = "run_log.jsonl";
pub const ARCHIVE_FILE: &str = "archive.csv";
pub const CHECKPOINT_DIR: &str = "checkpoints";
pub const FINAL_FILE: &str = "final.bin";
pub const DEFAULT_HIDDEN: usize = 64;

/// Reads a JSON config, reporting unknown or missing keys as configuration
/// errors that name the key.
pub fn read_json_config<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestConfig {
    pub threshold: u8,
    pub min_count: usize,
    /// Train, validation and test user fractions.
    pub ratios: (f64, f64, f64),
    pub mask_frac: f64,
}

impl Default for IngestConfig {
    fn default() -> Self {
        Self {
            threshold: DEFAULT_THRESHOLD,
            min_count: DEFAULT_MIN_COUNT,
            ratios: DEFAULT_RATIOS,
            mask_frac: DEFAULT_MASK_FRAC,
        }
    }
}

impl IngestConfig {
    pub fn split_config(&self) -> SplitConfig {
        SplitConfig {
            ratios: self.ratios,
            mask_frac: self.mask_frac,
        }
    }
}

/// Starts a content run from a relevance-trained checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WarmStart {
    pub checkpoint: PathBuf,
    #[serde(default = "default_inject_mass")]
    pub inject_mass: f64,
    #[serde(default = "default_content_cap")]
    pub content_cap: f64,
}

fn default_inject_mass() -> f64 {
    1.0
}

fn default_content_cap() -> f64 {
    DEFAULT_CONTENT_CAP
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub objectives: Vec<Objective>,
    /// Archive axes; empty means one metric per objective.
    pub metrics: Vec<Objective>,
    pub hidden: usize,
    pub k: usize,
    pub likelihood: Likelihood,
    pub warm_start: Option<WarmStart>,
    pub train: TrainConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            objectives: vec![Objective::Relevance, Objective::Revenue],
            metrics: Vec::new(),
            hidden: DEFAULT_HIDDEN,
            k: DEFAULT_K,
            likelihood: Likelihood::Bce,
            warm_start: None,
            train: TrainConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        read_json_config(path)
    }

    /// Checks everything that can be checked without data.
    pub fn validate(&self) -> Result<()> {
        if self.objectives.is_empty() {
            return Err(Error::Config("objectives must not be empty".into()));
        }
        self.train.validate(self.objectives.len())?;
        if self.hidden == 0 || self.k == 0 {
            return Err(Error::Config("hidden and k must be at least 1".into()));
        }
        if let Some(ws) = &self.warm_start {
            if !self.objectives.contains(&Objective::Content) {
                return Err(Error::Config("warm_start needs the content objective".into()));
            }
            if !(ws.inject_mass > 0.0 && ws.inject_mass.is_finite()) {
                return Err(Error::Config(format!("inject_mass must be positive, got {}", ws.inject_mass)));
            }
            if !(0.0..=1.0).contains(&ws.content_cap) {
                return Err(Error::Config(format!("content_cap {} outside [0, 1]", ws.content_cap)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileFingerprint {
    pub path: String,
    pub sha256: String,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

pub fn fingerprint_files(paths: &[PathBuf]) -> Result<Vec<FileFingerprint>> {
    paths
        .iter()
        .map(|p| {
            Ok(FileFingerprint {
                path: p.display().to_string(),
                sha256: sha256_file(p)?,
            })
        })
        .collect()
}

/// One hash over the bundle files, in their fixed order.
pub fn dataset_fingerprint(dir: &Path) -> Result<String> {
    let mut h = Sha256::new();
    for name in crate::data::BUNDLE_FILES {
        let p = dir.join(name);
        let bytes = fs::read(&p).map_err(|e| Error::io(&p, e))?;
        h.update(name.as_bytes());
        h.update((bytes.len() as u64).to_le_bytes());
        h.update(&bytes);
    }
    Ok(hex::encode(h.finalize()))
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub code_version: String,
    pub seed: Option<u64>,
    pub config: serde_json::Value,
    pub inputs: Vec<FileFingerprint>,
    pub dataset_fingerprint: Option<String>,
    pub outputs: Vec<String>,
    pub started_unix: u64,
    pub finished_unix: u64,
}

impl RunManifest {
    pub fn start(command: &str, seed: Option<u64>, config: &impl Serialize) -> Result<Self> {
        Ok(Self {
            command: command.into(),
            code_version: env!("CARGO_PKG_VERSION").into(),
            seed,
            config: serde_json::to_value(config)?,
            inputs: Vec::new(),
            dataset_fingerprint: None,
            outputs: Vec::new(),
            started_unix: unix_now(),
            finished_unix: 0,
        })
    }

    /// Stamps the finish time and writes `manifest.json` into `dir`.
    pub fn finish(mut self, dir: &Path, mut outputs: Vec<String>) -> Result<Self> {
        outputs.sort();
        self.outputs = outputs;
        self.finished_unix = unix_now();
        write_json(&dir.join(MANIFEST_FILE), &self)?;
        Ok(self)
    }
}

/// Builds the problem a run config describes on a dataset.
pub fn build_problem(ds: &Dataset, cfg: &RunConfig) -> Result<RecommenderProblem> {
    Ok(
        RecommenderProblem::new(ds, cfg.objectives.clone(), cfg.hidden, cfg.metrics.clone(), cfg.k)?
            .with_likelihood(cfg.likelihood),
    )
}

fn snapshot_header(problem: &RecommenderProblem, params: &RecommenderParams, seed: u64) -> SnapshotHeader {
    SnapshotHeader::for_params(params, seed, problem.objectives().to_vec())
}

/// Trains per `cfg` and writes the run directory. Returns the final state.
pub fn train_run(ds: &Dataset, cfg: &RunConfig, out: &Path) -> Result<TrainState> {
    cfg.validate()?;
    let problem = build_problem(ds, cfg)?;
    let (problem, train_cfg, state) = match &cfg.warm_start {
        None => {
            let init = problem.init_params(cfg.train.seed)?;
            let state = TrainState::new(&problem, &cfg.train, init)?;
            (problem, cfg.train.clone(), state)
        }
        Some(ws) => {
            let (_, base) = read_snapshot(&ws.checkpoint)?;
            warm_start_content(&cfg.train, problem, &base, ws.inject_mass, ws.content_cap)?
        }
    };
    let state = train(&problem, &train_cfg, state)?;

    create_dir(out)?;
    let mut resolved = cfg.clone();
    resolved.train = train_cfg;
    write_json(&out.join(CONFIG_FILE), &resolved)?;
    write_run_log(&out.join(RUN_LOG_FILE), &state)?;
    state.archive.write_csv(&out.join(ARCHIVE_FILE))?;

    let ckpt_dir = out.join(CHECKPOINT_DIR);
    if ckpt_dir.exists() {
        fs::remove_dir_all(&ckpt_dir).map_err(|e| Error::io(&ckpt_dir, e))?;
    }
    create_dir(&ckpt_dir)?;
    for e in state.archive.entries() {
        let params = problem.params(&e.payload)?;
        write_snapshot(
            &checkpoint_path(out, &e.id),
            &params,
            &snapshot_header(&problem, &params, cfg.train.seed),
        )?;
    }
    let fin = problem.params(&state.params)?;
    write_snapshot(&out.join(FINAL_FILE), &fin, &snapshot_header(&problem, &fin, cfg.train.seed))?;
    Ok(state)
}

pub fn checkpoint_path(run_dir: &Path, id: &str) -> PathBuf {
    run_dir.join(CHECKPOINT_DIR).join(format!("{id}.bin"))
}

fn write_run_log(path: &Path, state: &TrainState) -> Result<()> {
    let mut buf = Vec::new();
    for rec in &state.log {
        serde_json::to_writer(&mut buf, rec)?;
        buf.push(b'\n');
    }
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&buf).map_err(|e| Error::io(path, e))
}

/// Evaluates a checkpoint on a dataset split.
pub fn evaluate_checkpoint(
    checkpoint: &Path,
    ds: &Dataset,
    split: crate::data::SplitName,
    k: usize,
) -> Result<MetricsReport> {
    let (_, params) = read_snapshot(checkpoint)?;
    crate::metrics::evaluate(&params, ds.users(split), &ds.meta, k)
}

/// Loads the run's archive front.
pub fn load_front(run_dir: &Path) -> Result<FrontView> {
    FrontView::read_csv(&run_dir.join(ARCHIVE_FILE))
}

/// LINMAP over the run's archive; writes the front with a `selected`
/// column to `front_csv`.
pub fn select_run(run_dir: &Path, front_csv: &Path) -> Result<Selection> {
    let front = load_front(run_dir)?;
    let sel = linmap_select(&front)?;
    export_front(&front, front_csv)?;
    Ok(sel)
}

/// Re-scores every archived checkpoint on a split; rows keep archive order.
/// The result is a plain point set, not necessarily non-dominated.
pub fn front_on_split(
    run_dir: &Path,
    ds: &Dataset,
    split: crate::data::SplitName,
    out_csv: &Path,
) -> Result<Vec<PointRow>> {
    let (schema, rows) = read_points_csv(&run_dir.join(ARCHIVE_FILE))?;
    let cfg: RunConfig = read_json_config(&run_dir.join(CONFIG_FILE))?;
    let metrics = if cfg.metrics.is_empty() { cfg.objectives.clone() } else { cfg.metrics.clone() };
    Error::check_len("archive axes vs run metrics", schema.len(), metrics.len())?;
    let mut out = Vec::with_capacity(rows.len());
    for r in rows {
        let report = evaluate_checkpoint(&checkpoint_path(run_dir, &r.id), ds, split, cfg.k)?;
        out.push(PointRow {
            id: r.id,
            values: metrics.iter().map(|&o| crate::trainer::metric_value(&report, o)).collect(),
            selected: None,
        });
    }
    write_points_csv(out_csv, &ArchiveSchema::new(schema.names, schema.orientations)?, &out)?;
    Ok(out)
}
