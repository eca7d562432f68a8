//! The `mgdrec` command line.
//!
//! Every command writes into one output directory holding a
//! `manifest.json`; data outputs never carry timestamps, so reruns with the
//! same inputs and seed reproduce them byte for byte. Exit codes: 0 ok,
//! 2 invalid configuration or arguments, 3 data or I/O problems, 4
//! numerical abort.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::data::{
    generate_synthetic, load_bundle, preprocess, read_interactions_csv, read_item_meta_csv, save_bundle,
    write_interactions_csv, write_item_meta_csv, SplitName, SynthConfig, BUNDLE_FILES,
};
use crate::error::{Error, Result};
use crate::metrics::DEFAULT_K;
use crate::model::{Likelihood, Objective};
use crate::moo::write_points_csv;
use crate::run::{
    create_dir, dataset_fingerprint, evaluate_checkpoint, fingerprint_files, front_on_split, load_front,
    read_json_config, select_run, train_run, write_json, IngestConfig, RunConfig, RunManifest, WarmStart,
    ARCHIVE_FILE, CHECKPOINT_DIR, CONFIG_FILE, FINAL_FILE, RUN_LOG_FILE,
};
use crate::trainer::Mode;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Contract(_) | Error::DimensionMismatch { .. } => EXIT_VALIDATION,
        Error::Numerical { .. } => EXIT_NUMERICAL,
        Error::EmptyDataset(_)
        | Error::Parse { .. }
        | Error::Data(_)
        | Error::Io { .. }
        | Error::Json(_)
        | Error::Csv(_) => EXIT_DATA,
    }
}

#[derive(Debug, Parser)]
#[command(name = "mgdrec", version, about = "Multi-gradient descent for multi-objective recommenders")]
pub struct Cli {
    /// Random seed; defaults to 0, or to the config file's seed for `train`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// JSON config for the command; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Binarize, filter and split rating CSVs into a dataset bundle.
    Ingest(IngestArgs),
    /// Generate a synthetic ratings CSV and item metadata CSV.
    Synth(SynthArgs),
    /// Train a model on a dataset bundle.
    Train(TrainArgs),
    /// Compute top-k metrics for a checkpoint on one split.
    Evaluate(EvaluateArgs),
    /// Pick one archive point with LINMAP and export the front.
    Select(SelectArgs),
    /// Export a run's front, optionally re-scored on another split.
    Front(FrontArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub interactions: PathBuf,
    #[arg(long)]
    pub items: PathBuf,
    /// Ratings at or above this count as positive.
    #[arg(long)]
    pub threshold: Option<u8>,
    /// Minimum positives per user and per item.
    #[arg(long)]
    pub min_count: Option<usize>,
    /// Fraction of a held-out user's positives that is masked.
    #[arg(long)]
    pub mask_frac: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub users: Option<usize>,
    #[arg(long)]
    pub items: Option<usize>,
    #[arg(long)]
    pub doc_fraction: Option<f64>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Dataset bundle directory.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub mode: Option<Mode>,
    #[arg(long, value_delimiter = ',')]
    pub objectives: Option<Vec<Objective>>,
    /// Archive metrics; defaults to the objectives.
    #[arg(long, value_delimiter = ',')]
    pub metrics: Option<Vec<Objective>>,
    /// Fixed weights for `--mode ws`.
    #[arg(long, value_delimiter = ',')]
    pub weights: Option<Vec<f64>>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub likelihood: Option<Likelihood>,
    /// Gradient normalization by the initial losses.
    #[arg(long)]
    pub normalize: Option<bool>,
    #[arg(long)]
    pub eval_every: Option<usize>,
    /// Relevance-trained checkpoint to start a content run from.
    #[arg(long)]
    pub warm_start: Option<PathBuf>,
    #[arg(long)]
    pub inject_mass: Option<f64>,
    #[arg(long)]
    pub content_cap: Option<f64>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value = "test")]
    pub split: SplitName,
    #[arg(long, default_value_t = DEFAULT_K)]
    pub k: usize,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    /// Training run directory.
    #[arg(long)]
    pub run: PathBuf,
}

#[derive(Debug, Args)]
pub struct FrontArgs {
    #[arg(long)]
    pub run: PathBuf,
    /// Dataset bundle; needed with `--split`.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Re-score every archived checkpoint on this split.
    #[arg(long)]
    pub split: Option<SplitName>,
}

/// Parses `args` (program name first), runs, reports errors on stderr and
/// returns the process exit code.
pub fn main_with_args<I, T>(args: I, stdout: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
        }
    };
    match run(cli, stdout) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn run(cli: Cli, stdout: &mut dyn Write) -> Result<()> {
    let Cli {
        seed,
        config,
        out,
        command,
    } = cli;
    let config = config.as_deref();
    match command {
        Command::Ingest(a) => cmd_ingest(&a, seed, config, &require_out(out)?, stdout),
        Command::Synth(a) => cmd_synth(&a, seed, config, &require_out(out)?, stdout),
        Command::Train(a) => cmd_train(&a, seed, config, &require_out(out)?, stdout),
        Command::Evaluate(a) => cmd_evaluate(&a, out.as_deref(), stdout),
        Command::Select(a) => {
            let out = out.unwrap_or_else(|| a.run.join("selection"));
            cmd_select(&a, &out, stdout)
        }
        Command::Front(a) => {
            let out = out.unwrap_or_else(|| a.run.join("front"));
            cmd_front(&a, &out, stdout)
        }
    }
}

fn require_out(out: Option<PathBuf>) -> Result<PathBuf> {
    out.ok_or_else(|| Error::Config("--out is required for this command".into()))
}

fn say(stdout: &mut dyn Write, line: impl std::fmt::Display) -> Result<()> {
    writeln!(stdout, "{line}").map_err(|e| Error::io("<stdout>", e))
}

fn load_or_default<T: Default + serde::de::DeserializeOwned>(config: Option<&Path>) -> Result<T> {
    config.map_or_else(|| Ok(T::default()), read_json_config)
}

pub fn cmd_synth(a: &SynthArgs, seed: Option<u64>, config: Option<&Path>, out: &Path, stdout: &mut dyn Write) -> Result<()> {
    let mut cfg: SynthConfig = load_or_default(config)?;
    if let Some(v) = a.users {
        cfg.users = v;
    }
    if let Some(v) = a.items {
        cfg.items = v;
    }
    if let Some(v) = a.doc_fraction {
        cfg.doc_fraction = v;
    }
    let seed = seed.unwrap_or(0);
    let manifest = RunManifest::start("synth", Some(seed), &cfg)?;
    let (table, items) = generate_synthetic(&cfg, seed)?;
    create_dir(out)?;
    write_interactions_csv(&out.join("interactions.csv"), &table)?;
    write_item_meta_csv(&out.join("items.csv"), &items)?;
    manifest.finish(out, vec!["interactions.csv".into(), "items.csv".into()])?;
    say(
        stdout,
        format_args!("wrote {} ratings over {} items to {}", table.len(), items.len(), out.display()),
    )
}

pub fn cmd_ingest(a: &IngestArgs, seed: Option<u64>, config: Option<&Path>, out: &Path, stdout: &mut dyn Write) -> Result<()> {
    let mut cfg: IngestConfig = load_or_default(config)?;
    if let Some(v) = a.threshold {
        cfg.threshold = v;
    }
    if let Some(v) = a.min_count {
        cfg.min_count = v;
    }
    if let Some(v) = a.mask_frac {
        cfg.mask_frac = v;
    }
    let seed = seed.unwrap_or(0);
    let mut manifest = RunManifest::start("ingest", Some(seed), &cfg)?;
    manifest.inputs = fingerprint_files(&[a.interactions.clone(), a.items.clone()])?;
    let table = read_interactions_csv(&a.interactions)?;
    let items = read_item_meta_csv(&a.items)?;
    let ds = preprocess(&table, &items, cfg.threshold, cfg.min_count, seed, cfg.split_config())?;
    save_bundle(out, &ds)?;
    manifest.dataset_fingerprint = Some(dataset_fingerprint(out)?);
    manifest.finish(out, BUNDLE_FILES.iter().map(|s| s.to_string()).collect())?;
    say(stdout, ds.stats())
}

fn apply_train_flags(cfg: &mut RunConfig, a: &TrainArgs, seed: Option<u64>) {
    if let Some(v) = a.mode {
        cfg.train.mode = v;
    }
    if let Some(v) = &a.objectives {
        cfg.objectives = v.clone();
    }
    if let Some(v) = &a.metrics {
        cfg.metrics = v.clone();
    }
    if let Some(v) = &a.weights {
        cfg.train.weights = Some(v.clone());
    }
    if let Some(v) = a.epochs {
        cfg.train.epochs = v;
    }
    if let Some(v) = a.batch_size {
        cfg.train.batch_size = v;
    }
    if let Some(v) = a.lr {
        cfg.train.learning_rate = v;
    }
    if let Some(v) = a.hidden {
        cfg.hidden = v;
    }
    if let Some(v) = a.k {
        cfg.k = v;
    }
    if let Some(v) = a.likelihood {
        cfg.likelihood = v;
    }
    if let Some(v) = a.normalize {
        cfg.train.normalize = v;
    }
    if let Some(v) = a.eval_every {
        cfg.train.eval_every_steps = Some(v);
    }
    if let Some(v) = seed {
        cfg.train.seed = v;
    }
    if let Some(p) = &a.warm_start {
        let ws = cfg.warm_start.get_or_insert(WarmStart {
            checkpoint: p.clone(),
            inject_mass: 1.0,
            content_cap: crate::trainer::DEFAULT_CONTENT_CAP,
        });
        ws.checkpoint = p.clone();
    }
    if let Some(ws) = cfg.warm_start.as_mut() {
        if let Some(v) = a.inject_mass {
            ws.inject_mass = v;
        }
        if let Some(v) = a.content_cap {
            ws.content_cap = v;
        }
    }
}

pub fn cmd_train(a: &TrainArgs, seed: Option<u64>, config: Option<&Path>, out: &Path, stdout: &mut dyn Write) -> Result<()> {
    let mut cfg: RunConfig = load_or_default(config)?;
    apply_train_flags(&mut cfg, a, seed);
    cfg.validate()?;
    let mut manifest = RunManifest::start("train", Some(cfg.train.seed), &cfg)?;
    let mut inputs: Vec<PathBuf> = BUNDLE_FILES.iter().map(|f| a.data.join(f)).collect();
    if let Some(ws) = &cfg.warm_start {
        inputs.push(ws.checkpoint.clone());
    }
    manifest.inputs = fingerprint_files(&inputs)?;
    manifest.dataset_fingerprint = Some(dataset_fingerprint(&a.data)?);
    let ds = load_bundle(&a.data)?;
    let state = train_run(&ds, &cfg, out)?;

    let mut outputs: Vec<String> = [CONFIG_FILE, RUN_LOG_FILE, ARCHIVE_FILE, "archive.json", FINAL_FILE]
        .iter()
        .map(|s| s.to_string())
        .collect();
    outputs.extend(state.archive.entries().iter().map(|e| format!("{CHECKPOINT_DIR}/{}.bin", e.id)));
    manifest.finish(out, outputs)?;

    let reason = state.stop_reason.map_or("none".to_string(), |r| format!("{r:?}"));
    say(
        stdout,
        format_args!(
            "steps={} epochs={} stop={} archive={} ({})",
            state.step,
            state.epoch,
            reason,
            state.archive.len(),
            state.archive.schema().names.join(", ")
        ),
    )
}

pub fn cmd_evaluate(a: &EvaluateArgs, out: Option<&Path>, stdout: &mut dyn Write) -> Result<()> {
    let ds = load_bundle(&a.data)?;
    let manifest = match out {
        Some(_) => {
            let mut m = RunManifest::start("evaluate", None, &serde_json::json!({"split": a.split, "k": a.k}))?;
            m.inputs = fingerprint_files(std::slice::from_ref(&a.checkpoint))?;
            m.dataset_fingerprint = Some(dataset_fingerprint(&a.data)?);
            Some(m)
        }
        None => None,
    };
    let report = evaluate_checkpoint(&a.checkpoint, &ds, a.split, a.k)?;
    let json = report.to_json()?;
    if let (Some(dir), Some(m)) = (out, manifest) {
        create_dir(dir)?;
        let p = dir.join("report.json");
        std::fs::write(&p, &json).map_err(|e| Error::io(&p, e))?;
        report.write_per_user_csv(&dir.join("per_user.csv"))?;
        m.finish(dir, vec!["report.json".into(), "per_user.csv".into()])?;
    }
    write!(stdout, "{json}").map_err(|e| Error::io("<stdout>", e))
}

#[derive(Debug, Serialize)]
struct SelectionRecord<'a> {
    id: &'a str,
    distance: f64,
    axes: &'a [String],
    checkpoint: String,
}

pub fn cmd_select(a: &SelectArgs, out: &Path, stdout: &mut dyn Write) -> Result<()> {
    let mut manifest = RunManifest::start("select", None, &serde_json::json!({"run": a.run}))?;
    manifest.inputs = fingerprint_files(&[a.run.join(ARCHIVE_FILE)])?;
    create_dir(out)?;
    let sel = select_run(&a.run, &out.join("front.csv"))?;
    let front = load_front(&a.run)?;
    write_json(
        &out.join("selection.json"),
        &SelectionRecord {
            id: &sel.id,
            distance: sel.distance,
            axes: &front.schema().names,
            checkpoint: format!("{CHECKPOINT_DIR}/{}.bin", sel.id),
        },
    )?;
    manifest.finish(
        out,
        vec!["front.csv".into(), "front.json".into(), "selection.json".into()],
    )?;
    say(stdout, &sel.id)
}

pub fn cmd_front(a: &FrontArgs, out: &Path, stdout: &mut dyn Write) -> Result<()> {
    let mut manifest = RunManifest::start(
        "front",
        None,
        &serde_json::json!({"run": a.run, "split": a.split}),
    )?;
    manifest.inputs = fingerprint_files(&[a.run.join(ARCHIVE_FILE)])?;
    create_dir(out)?;
    let csv = out.join("front.csv");
    let rows = match a.split {
        None => {
            let front = load_front(&a.run)?;
            let rows = front
                .ids()
                .iter()
                .zip(front.raw())
                .map(|(id, v)| crate::moo::PointRow {
                    id: id.clone(),
                    values: v.clone(),
                    selected: None,
                })
                .collect::<Vec<_>>();
            write_points_csv(&csv, front.schema(), &rows)?;
            rows
        }
        Some(split) => {
            let data = a
                .data
                .as_ref()
                .ok_or_else(|| Error::Config("--split needs --data".into()))?;
            manifest.dataset_fingerprint = Some(dataset_fingerprint(data)?);
            front_on_split(&a.run, &load_bundle(data)?, split, &csv)?
        }
    };
    manifest.finish(out, vec!["front.csv".into(), "front.json".into()])?;
    say(stdout, format_args!("{} points written to {}", rows.len(), csv.display()))
}
