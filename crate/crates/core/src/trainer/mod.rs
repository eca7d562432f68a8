//! Multi-gradient training loop and its baselines.
//!
//! Every step computes one loss and gradient per objective on a minibatch,
//! optionally divides each gradient by that objective's loss at the start
//! of the run, and descends along `Σ αᵢ gᵢ`. The weights α come from the
//! min-norm problem ([`Mode::Smsgda`]), are fixed ([`Mode::WeightedSum`]),
//! or are `[1]` ([`Mode::Single`]). At each evaluation the validation
//! metric point is offered to a Pareto archive whose payloads are parameter
//! snapshots.

mod problems;

pub(crate) use problems::metric_value;
pub use problems::{warm_start_content, QuadraticToy, RecommenderProblem, DEFAULT_CONTENT_CAP};

use log::{info, warn};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::LossGrad;
use crate::moo::{combine_gradients, AlphaVector, ArchiveSchema, InsertOutcome, ParetoArchive, SIMPLEX_TOL};
use crate::qcop::{alpha_two, solve_qcop, GradientBundle, DEFAULT_MAX_ITERS, DEFAULT_TOL, DEGENERATE_LOSS};

/// What the loop needs from a model and its data.
pub trait Problem {
    fn dim(&self) -> usize;
    fn num_objectives(&self) -> usize;
    /// Number of training samples that get shuffled into minibatches.
    fn num_samples(&self) -> usize;
    /// Loss and gradient of every objective on the given samples.
    fn losses_grads(&self, params: &[f64], samples: &[usize]) -> Result<Vec<LossGrad>>;
    /// Per-objective losses on the validation data.
    fn validation_losses(&self, params: &[f64]) -> Result<Vec<f64>>;
    /// The point offered to the archive at each evaluation.
    fn validation_point(&self, params: &[f64]) -> Result<Vec<f64>>;
    fn archive_schema(&self) -> ArchiveSchema;

    /// Per-objective losses over the full training set.
    fn full_losses(&self, params: &[f64]) -> Result<Vec<f64>> {
        let all: Vec<usize> = (0..self.num_samples()).collect();
        Ok(self.losses_grads(params, &all)?.into_iter().map(|lg| lg.loss).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Smsgda,
    #[serde(rename = "ws")]
    WeightedSum,
    Single,
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "smsgda" => Ok(Mode::Smsgda),
            "ws" => Ok(Mode::WeightedSum),
            "single" => Ok(Mode::Single),
            other => Err(Error::Config(format!("unknown mode `{other}` (smsgda, ws, single)"))),
        }
    }
}

/// The epoch budget always applies; the other rules can end a run earlier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum StopRule {
    Epochs,
    /// Stop after `patience` evaluations in a row without the validation
    /// common-descent loss improving by more than `delta`.
    Plateau { patience: usize, delta: f64 },
    /// Stop once a step's combined gradient has norm below `eps`.
    GradNorm { eps: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlphaBound {
    pub lo: f64,
    pub hi: f64,
}

impl AlphaBound {
    pub const FREE: AlphaBound = AlphaBound { lo: 0.0, hi: 1.0 };
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub mode: Mode,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub normalize: bool,
    /// One bound per objective, or empty for none.
    pub alpha_bounds: Vec<AlphaBound>,
    pub stop: StopRule,
    /// Evaluate every this many steps; `None` means once per epoch.
    pub eval_every_steps: Option<usize>,
    /// Fixed weights, weighted-sum mode only.
    pub weights: Option<Vec<f64>>,
    pub archive_capacity: usize,
    pub qcop_tol: f64,
    pub qcop_max_iters: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Smsgda,
            epochs: 50,
            batch_size: 128,
            learning_rate: 0.05,
            seed: 0,
            normalize: true,
            alpha_bounds: Vec::new(),
            stop: StopRule::Epochs,
            eval_every_steps: None,
            weights: None,
            archive_capacity: 64,
            qcop_tol: DEFAULT_TOL,
            qcop_max_iters: DEFAULT_MAX_ITERS,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self, n_objectives: usize) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if n_objectives == 0 {
            return Err(Error::contract("at least one objective is required"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        if self.epochs == 0 || self.batch_size == 0 || self.archive_capacity == 0 {
            return bad("epochs, batch_size and archive_capacity must be at least 1".into());
        }
        if self.eval_every_steps == Some(0) {
            return bad("eval_every_steps must be at least 1".into());
        }
        match self.mode {
            Mode::Single if n_objectives != 1 => {
                return bad(format!("mode `single` takes exactly one objective, got {n_objectives}"))
            }
            Mode::WeightedSum => match &self.weights {
                None => return bad("mode `ws` requires `weights`".into()),
                Some(w) => {
                    if w.len() != n_objectives {
                        return bad(format!("{} weights for {n_objectives} objectives", w.len()));
                    }
                    if AlphaVector::new(w.clone()).is_err() {
                        return bad(format!("weights {w:?} are not on the simplex"));
                    }
                }
            },
            _ if self.weights.is_some() => {
                return bad("`weights` are only valid with mode `ws`".into());
            }
            _ => {}
        }
        if !self.alpha_bounds.is_empty() {
            if self.alpha_bounds.len() != n_objectives {
                return bad(format!(
                    "{} alpha bounds for {n_objectives} objectives",
                    self.alpha_bounds.len()
                ));
            }
            if self
                .alpha_bounds
                .iter()
                .any(|b| !(0.0 <= b.lo && b.lo <= b.hi && b.hi <= 1.0))
            {
                return bad("alpha bounds must satisfy 0 <= lo <= hi <= 1".into());
            }
            let lo: f64 = self.alpha_bounds.iter().map(|b| b.lo).sum();
            let hi: f64 = self.alpha_bounds.iter().map(|b| b.hi).sum();
            if lo > 1.0 + SIMPLEX_TOL || hi < 1.0 - SIMPLEX_TOL {
                return bad("alpha bounds admit no point of the simplex".into());
            }
        }
        match self.stop {
            StopRule::Plateau { patience, delta } if patience == 0 || !(delta >= 0.0) => {
                bad("plateau needs patience >= 1 and delta >= 0".into())
            }
            StopRule::GradNorm { eps } if !(eps > 0.0) => bad("grad_norm eps must be positive".into()),
            _ => Ok(()),
        }
    }
}

/// Clamps each weight into its bound, then hands the surplus or deficit to
/// the weights that still have room, in proportion to their values (equal
/// shares when those are all zero), repeating until the sum is one.
pub fn apply_alpha_bounds(alpha: &AlphaVector, bounds: &[AlphaBound]) -> Result<AlphaVector> {
    if bounds.is_empty() {
        return Ok(alpha.clone());
    }
    Error::check_len("alpha bounds", alpha.len(), bounds.len())?;
    let clamp = |v: f64, b: &AlphaBound| v.clamp(b.lo, b.hi);
    let mut a: Vec<f64> = alpha.as_slice().iter().zip(bounds).map(|(&v, b)| clamp(v, b)).collect();
    for _ in 0..=2 * a.len() {
        let residual = 1.0 - a.iter().sum::<f64>();
        if residual.abs() <= 1e-15 {
            break;
        }
        let room: Vec<usize> = (0..a.len())
            .filter(|&i| if residual > 0.0 { a[i] < bounds[i].hi } else { a[i] > bounds[i].lo })
            .collect();
        if room.is_empty() {
            break;
        }
        let mass: f64 = room.iter().map(|&i| a[i]).sum();
        for &i in &room {
            let share = if mass > 0.0 { a[i] / mass } else { 1.0 / room.len() as f64 };
            a[i] = clamp(a[i] + residual * share, &bounds[i]);
        }
    }
    AlphaVector::new(a.clone()).map_err(|_| Error::Numerical {
        step: 0,
        message: format!("alpha bounds could not be met, got {a:?}"),
    })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StopState {
    pub epochs_done: usize,
    pub last_grad_norm: Option<f64>,
    pub best_eval_loss: Option<f64>,
    pub flat_evals: usize,
}

impl StopState {
    /// Records a validation common-descent loss for the plateau rule.
    pub fn record_eval(&mut self, loss: f64, delta: f64) {
        match self.best_eval_loss {
            Some(best) if loss >= best - delta => self.flat_evals += 1,
            _ => self.flat_evals = 0,
        }
        self.best_eval_loss = Some(self.best_eval_loss.map_or(loss, |b| b.min(loss)));
    }
}

pub fn check_stop(state: &StopState, rule: &StopRule, epoch_budget: usize) -> bool {
    if state.epochs_done >= epoch_budget {
        return true;
    }
    match *rule {
        StopRule::Epochs => false,
        StopRule::Plateau { patience, .. } => state.flat_evals >= patience,
        StopRule::GradNorm { eps } => state.last_grad_norm.is_some_and(|g| g < eps),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub id: String,
    pub point: Vec<f64>,
    pub common_loss: f64,
    pub outcome: String,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub evicted: Vec<String>,
}

/// One line of the run log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: u64,
    pub epoch: usize,
    pub losses: Vec<f64>,
    pub normalized_losses: Vec<f64>,
    pub alpha: Vec<f64>,
    pub grad_norm: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub eval: Option<EvalRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    EpochBudget,
    Plateau,
    GradNorm,
}

#[derive(Debug, Clone)]
pub struct TrainState {
    pub params: Vec<f64>,
    /// Full-training-set losses at the starting parameters.
    pub empirical_max_losses: Vec<f64>,
    /// Objectives whose empirical maximum is degenerate (denominator 1).
    pub degenerate: Vec<bool>,
    pub archive: ParetoArchive<Vec<f64>>,
    pub evals: Vec<EvalRecord>,
    pub step: u64,
    pub epoch: usize,
    pub stop: StopState,
    pub log: Vec<StepRecord>,
    pub stop_reason: Option<StopReason>,
    last_alpha: AlphaVector,
    rng: ChaCha8Rng,
}

impl TrainState {
    /// Computes the empirical maximum losses at `params`.
    pub fn new<P: Problem>(problem: &P, config: &TrainConfig, params: Vec<f64>) -> Result<Self> {
        let n = problem.num_objectives();
        config.validate(n)?;
        Error::check_len("initial params", problem.dim(), params.len())?;
        let empirical_max_losses = problem.full_losses(&params)?;
        if let Some(l) = empirical_max_losses.iter().find(|l| !l.is_finite()) {
            return Err(Error::Numerical {
                step: 0,
                message: format!("initial loss is {l}"),
            });
        }
        let degenerate: Vec<bool> = empirical_max_losses.iter().map(|&l| l <= DEGENERATE_LOSS).collect();
        for (i, d) in degenerate.iter().enumerate() {
            if *d {
                warn!("objective {i} starts at a degenerate loss; its denominator is 1");
            }
        }
        Ok(Self {
            params,
            empirical_max_losses,
            degenerate,
            archive: ParetoArchive::with_capacity_limit(problem.archive_schema(), config.archive_capacity)?,
            evals: Vec::new(),
            step: 0,
            epoch: 0,
            stop: StopState::default(),
            log: Vec::new(),
            stop_reason: None,
            last_alpha: AlphaVector::uniform(n),
            rng: ChaCha8Rng::seed_from_u64(config.seed),
        })
    }

    /// Normalization denominators: the empirical maxima, or 1 where
    /// normalization is off or the maximum is degenerate.
    pub fn denominators(&self, config: &TrainConfig) -> Vec<f64> {
        self.empirical_max_losses
            .iter()
            .zip(&self.degenerate)
            .map(|(&l, &d)| if config.normalize && !d { l } else { 1.0 })
            .collect()
    }

    /// Validation losses divided by the denominators, combined with the
    /// latest weights.
    pub fn common_validation_loss<P: Problem>(&self, problem: &P, config: &TrainConfig) -> Result<f64> {
        let losses = problem.validation_losses(&self.params)?;
        Ok(losses
            .iter()
            .zip(self.denominators(config))
            .zip(self.last_alpha.as_slice())
            .map(|((l, d), a)| a * l / d)
            .sum())
    }
}

fn numerical(step: u64, what: &str, lr: f64) -> Error {
    Error::Numerical {
        step,
        message: format!("{what} became non-finite; try a smaller learning_rate (currently {lr:e})"),
    }
}

fn choose_alpha(config: &TrainConfig, grads: &[Vec<f64>]) -> Result<AlphaVector> {
    let n = grads.len();
    let raw = match config.mode {
        Mode::Single => AlphaVector::vertex(n, 0),
        Mode::WeightedSum => AlphaVector::new(config.weights.clone().expect("validated"))?,
        Mode::Smsgda => match n {
            1 => AlphaVector::vertex(1, 0),
            2 => alpha_two(&grads[0], &grads[1])?,
            _ => {
                let bundle = GradientBundle::unnormalized(grads.to_vec())?;
                let sol = solve_qcop(&bundle, config.qcop_tol, config.qcop_max_iters)?;
                if !sol.converged {
                    warn!("min-norm solver stopped after {} iterations (gap {:e})", sol.iterations, sol.gap);
                }
                sol.alpha
            }
        },
    };
    apply_alpha_bounds(&raw, &config.alpha_bounds)
}

/// One update on the given samples. Returns the step record (without eval).
pub fn train_step<P: Problem>(
    problem: &P,
    config: &TrainConfig,
    state: &mut TrainState,
    samples: &[usize],
) -> Result<StepRecord> {
    let step = state.step + 1;
    let lr = config.learning_rate;
    let lgs = problem.losses_grads(&state.params, samples)?;
    let denoms = state.denominators(config);
    let mut losses = Vec::with_capacity(lgs.len());
    let mut grads = Vec::with_capacity(lgs.len());
    for (lg, d) in lgs.into_iter().zip(&denoms) {
        if !lg.loss.is_finite() {
            return Err(numerical(step, "loss", lr));
        }
        if lg.grad.iter().any(|g| !g.is_finite()) {
            return Err(numerical(step, "gradient", lr));
        }
        losses.push(lg.loss);
        grads.push(if *d == 1.0 { lg.grad } else { lg.grad.iter().map(|g| g / d).collect() });
    }
    let alpha = choose_alpha(config, &grads)?;
    let combined = combine_gradients(&grads, &alpha)?;
    let grad_norm = combined.iter().map(|g| g * g).sum::<f64>().sqrt();
    for (w, g) in state.params.iter_mut().zip(&combined) {
        *w -= lr * g;
    }
    if state.params.iter().any(|w| !w.is_finite()) {
        return Err(numerical(step, "parameters", lr));
    }
    state.step = step;
    state.stop.last_grad_norm = Some(grad_norm);
    state.last_alpha = alpha.clone();
    Ok(StepRecord {
        step,
        epoch: state.epoch + 1,
        normalized_losses: losses.iter().zip(&denoms).map(|(l, d)| l / d).collect(),
        losses,
        alpha: alpha.into_inner(),
        grad_norm,
        eval: None,
    })
}

/// Evaluates on validation data and offers the point to the archive.
pub fn evaluate_into_archive<P: Problem>(
    problem: &P,
    config: &TrainConfig,
    state: &mut TrainState,
) -> Result<EvalRecord> {
    let id = format!("epoch-{}-step-{}", state.epoch + 1, state.step);
    let point = problem.validation_point(&state.params)?;
    let common_loss = state.common_validation_loss(problem, config)?;
    if !common_loss.is_finite() || point.iter().any(|v| !v.is_finite()) {
        return Err(numerical(state.step, "validation evaluation", config.learning_rate));
    }
    let outcome = state
        .archive
        .insert_values(point.clone(), id.clone(), state.params.clone())?;
    let (label, evicted) = match &outcome {
        InsertOutcome::Accepted => ("accepted", vec![]),
        InsertOutcome::Rejected => ("rejected", vec![]),
        InsertOutcome::AcceptedEvicting(_) => (
            "accepted_evicting",
            outcome.evicted_ids().into_iter().map(str::to_string).collect(),
        ),
    };
    if let StopRule::Plateau { delta, .. } = config.stop {
        state.stop.record_eval(common_loss, delta);
    }
    let rec = EvalRecord {
        id,
        point,
        common_loss,
        outcome: label.into(),
        evicted,
    };
    state.evals.push(rec.clone());
    Ok(rec)
}

/// Runs the loop until the stop rule fires. The state carries on from
/// wherever it is, so a freshly built state starts at epoch 1.
pub fn train<P: Problem>(problem: &P, config: &TrainConfig, mut state: TrainState) -> Result<TrainState> {
    config.validate(problem.num_objectives())?;
    let n_samples = problem.num_samples();
    if n_samples == 0 {
        return Err(Error::EmptyDataset("training (no samples)"));
    }
    let mut order: Vec<usize> = (0..n_samples).collect();
    'outer: while !check_stop(&state.stop, &config.stop, config.epochs) {
        order.shuffle(&mut state.rng);
        let n_batches = n_samples.div_ceil(config.batch_size);
        for (b, batch) in order.chunks(config.batch_size).enumerate() {
            let mut rec = train_step(problem, config, &mut state, batch)?;
            let last_in_epoch = b + 1 == n_batches;
            let due = match config.eval_every_steps {
                Some(k) => state.step.is_multiple_of(k as u64),
                None => last_in_epoch,
            };
            if due {
                rec.eval = Some(evaluate_into_archive(problem, config, &mut state)?);
            }
            state.log.push(rec);
            let stop_now = match config.stop {
                StopRule::GradNorm { eps } => state.stop.last_grad_norm.is_some_and(|g| g < eps),
                StopRule::Plateau { patience, .. } => state.stop.flat_evals >= patience,
                StopRule::Epochs => false,
            };
            if stop_now {
                state.stop_reason = Some(match config.stop {
                    StopRule::GradNorm { .. } => StopReason::GradNorm,
                    _ => StopReason::Plateau,
                });
                if !due {
                    let eval = evaluate_into_archive(problem, config, &mut state)?;
                    state.log.last_mut().expect("just pushed").eval = Some(eval);
                }
                if last_in_epoch {
                    state.epoch += 1;
                    state.stop.epochs_done = state.epoch;
                }
                break 'outer;
            }
        }
        state.epoch += 1;
        state.stop.epochs_done = state.epoch;
        info!(
            "epoch {} done at step {}, archive holds {} point(s)",
            state.epoch,
            state.step,
            state.archive.len()
        );
    }
    if state.stop_reason.is_none() {
        state.stop_reason = Some(StopReason::EpochBudget);
    }
    Ok(state)
}

/// Builds the state at `init` and trains.
pub fn train_from<P: Problem>(problem: &P, config: &TrainConfig, init: Vec<f64>) -> Result<TrainState> {
    let state = TrainState::new(problem, config, init)?;
    train(problem, config, state)
}
