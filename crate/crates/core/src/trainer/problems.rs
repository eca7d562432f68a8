use crate::data::{Dataset, UserRow};
use crate::error::{Error, Result};
use crate::metrics::{evaluate, MetricsReport};
use crate::model::{
    inject_preferences, weighted_reconstruction_with, ItemMeta, Likelihood, LossGrad, Objective, RecommenderParams,
};
use crate::moo::{ArchiveSchema, Orientation};

use super::{AlphaBound, Problem, TrainConfig, TrainState};

pub const DEFAULT_CONTENT_CAP: f64 = 0.3;

/// `Lᵢ(w) = cᵢ ‖w − centerᵢ‖²`, a single full-batch sample.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticToy {
    pub centers: Vec<Vec<f64>>,
    pub scales: Vec<f64>,
}

impl QuadraticToy {
    pub fn new(centers: Vec<Vec<f64>>, scales: Vec<f64>) -> Result<Self> {
        if centers.is_empty() {
            return Err(Error::contract("toy needs at least one objective"));
        }
        Error::check_len("toy scales", centers.len(), scales.len())?;
        for c in &centers {
            Error::check_len("toy center", centers[0].len(), c.len())?;
        }
        if scales.iter().any(|s| !(*s > 0.0)) {
            return Err(Error::contract("toy scales must be positive"));
        }
        Ok(Self { centers, scales })
    }

    pub fn unit(centers: Vec<Vec<f64>>) -> Result<Self> {
        let n = centers.len();
        Self::new(centers, vec![1.0; n])
    }

    pub fn losses(&self, w: &[f64]) -> Vec<f64> {
        self.centers
            .iter()
            .zip(&self.scales)
            .map(|(c, s)| s * w.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
            .collect()
    }
}

impl Problem for QuadraticToy {
    fn dim(&self) -> usize {
        self.centers[0].len()
    }

    fn num_objectives(&self) -> usize {
        self.centers.len()
    }

    fn num_samples(&self) -> usize {
        1
    }

    fn losses_grads(&self, w: &[f64], _samples: &[usize]) -> Result<Vec<LossGrad>> {
        Error::check_len("toy params", self.dim(), w.len())?;
        Ok(self
            .centers
            .iter()
            .zip(&self.scales)
            .map(|(c, &s)| LossGrad {
                loss: s * w.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>(),
                grad: w.iter().zip(c).map(|(a, b)| 2.0 * s * (a - b)).collect(),
            })
            .collect())
    }

    fn validation_losses(&self, w: &[f64]) -> Result<Vec<f64>> {
        Ok(self.losses(w))
    }

    fn validation_point(&self, w: &[f64]) -> Result<Vec<f64>> {
        Ok(self.losses(w))
    }

    fn archive_schema(&self) -> ArchiveSchema {
        let n = self.centers.len();
        ArchiveSchema::new(
            (1..=n).map(|i| format!("loss_{i}")).collect(),
            vec![Orientation::Minimize; n],
        )
        .expect("non-empty schema")
    }
}

/// The autoencoder on a dataset's training users, one weighted
/// reconstruction loss per objective, validated with top-k metrics.
#[derive(Debug, Clone)]
pub struct RecommenderProblem {
    hidden: usize,
    likelihood: Likelihood,
    objectives: Vec<Objective>,
    weights: Vec<Option<Vec<f64>>>,
    train_rows: Vec<Vec<f64>>,
    val_users: Vec<UserRow>,
    val_rows: Vec<Vec<f64>>,
    meta: ItemMeta,
    metrics: Vec<Objective>,
    k: usize,
}

pub(crate) fn metric_value(report: &MetricsReport, o: Objective) -> f64 {
    match o {
        Objective::Relevance => report.recall_at_k,
        Objective::Revenue => report.revenue_at_k,
        Objective::Content => report.doc_count_at_k,
    }
}

/// Archive axis name for an objective's validation metric.
pub(crate) fn metric_name(o: Objective, k: usize) -> String {
    match o {
        Objective::Relevance => format!("recall@{k}"),
        Objective::Revenue => format!("revenue@{k}"),
        Objective::Content => format!("doc_count@{k}"),
    }
}

fn check_unique(list: &[Objective], what: &str) -> Result<()> {
    let mut sorted = list.to_vec();
    sorted.sort();
    sorted.dedup();
    if list.is_empty() || sorted.len() != list.len() {
        return Err(Error::Config(format!("{what} must be a non-empty list without repeats")));
    }
    Ok(())
}

impl RecommenderProblem {
    /// `metrics` picks the archive axes; empty means the training objectives.
    pub fn new(
        dataset: &Dataset,
        objectives: Vec<Objective>,
        hidden: usize,
        metrics: Vec<Objective>,
        k: usize,
    ) -> Result<Self> {
        check_unique(&objectives, "objectives")?;
        let metrics = if metrics.is_empty() { objectives.clone() } else { metrics };
        check_unique(&metrics, "metrics")?;
        if hidden == 0 || k == 0 {
            return Err(Error::Config("hidden and k must be at least 1".into()));
        }
        if dataset.train.is_empty() {
            return Err(Error::EmptyDataset("training split"));
        }
        if dataset.validation.iter().all(|u| u.held_out.is_empty()) {
            return Err(Error::EmptyDataset("validation split (no held-out items)"));
        }
        dataset.validate()?;
        let n = dataset.n_items();
        Ok(Self {
            hidden,
            likelihood: Likelihood::Bce,
            weights: objectives.iter().map(|o| o.item_weights(&dataset.meta)).collect(),
            objectives,
            train_rows: dataset.train_rows(),
            val_users: dataset.validation.clone(),
            val_rows: dataset.validation.iter().map(|u| u.dense(n)).collect(),
            meta: dataset.meta.clone(),
            metrics,
            k,
        })
    }

    pub fn with_likelihood(mut self, likelihood: Likelihood) -> Self {
        self.likelihood = likelihood;
        self
    }

    pub fn likelihood(&self) -> Likelihood {
        self.likelihood
    }

    pub fn objectives(&self) -> &[Objective] {
        &self.objectives
    }

    pub fn metrics(&self) -> &[Objective] {
        &self.metrics
    }

    pub fn meta(&self) -> &ItemMeta {
        &self.meta
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn n_items(&self) -> usize {
        self.meta.len()
    }

    pub fn train_rows(&self) -> &[Vec<f64>] {
        &self.train_rows
    }

    /// Replaces the training inputs (validation inputs are untouched).
    pub fn with_train_rows(mut self, rows: Vec<Vec<f64>>) -> Result<Self> {
        for r in &rows {
            Error::check_len("train row", self.n_items(), r.len())?;
        }
        self.train_rows = rows;
        Ok(self)
    }

    pub fn params(&self, flat: &[f64]) -> Result<RecommenderParams> {
        RecommenderParams::from_flat(self.n_items(), self.hidden, flat.to_vec())
    }

    pub fn init_params(&self, seed: u64) -> Result<Vec<f64>> {
        Ok(RecommenderParams::init(self.n_items(), self.hidden, seed)?.into_flat())
    }

    fn weight_refs(&self) -> Vec<Option<&[f64]>> {
        self.weights.iter().map(|w| w.as_deref()).collect()
    }
}

impl Problem for RecommenderProblem {
    fn dim(&self) -> usize {
        RecommenderParams::flat_len(self.n_items(), self.hidden)
    }

    fn num_objectives(&self) -> usize {
        self.objectives.len()
    }

    fn num_samples(&self) -> usize {
        self.train_rows.len()
    }

    fn losses_grads(&self, flat: &[f64], samples: &[usize]) -> Result<Vec<LossGrad>> {
        let params = self.params(flat)?;
        let rows: Vec<&[f64]> = samples.iter().map(|&i| self.train_rows[i].as_slice()).collect();
        weighted_reconstruction_with(&params, &rows, &self.weight_refs(), self.likelihood)
    }

    fn validation_losses(&self, flat: &[f64]) -> Result<Vec<f64>> {
        let params = self.params(flat)?;
        Ok(weighted_reconstruction_with(&params, &self.val_rows, &self.weight_refs(), self.likelihood)?
            .into_iter()
            .map(|lg| lg.loss)
            .collect())
    }

    fn validation_point(&self, flat: &[f64]) -> Result<Vec<f64>> {
        let report = evaluate(&self.params(flat)?, &self.val_users, &self.meta, self.k)?;
        Ok(self.metrics.iter().map(|&o| metric_value(&report, o)).collect())
    }

    fn archive_schema(&self) -> ArchiveSchema {
        ArchiveSchema::new(
            self.metrics.iter().map(|&o| metric_name(o, self.k)).collect(),
            vec![Orientation::Maximize; self.metrics.len()],
        )
        .expect("non-empty schema")
    }
}

/// Prepares a content run from relevance-trained parameters: training rows
/// get `inject_mass` spread over the documentaries, the content weight is
/// capped at `content_cap`, and the empirical maximum losses are taken at
/// the warm-started parameters.
pub fn warm_start_content(
    config: &TrainConfig,
    problem: RecommenderProblem,
    base: &RecommenderParams,
    inject_mass: f64,
    content_cap: f64,
) -> Result<(RecommenderProblem, TrainConfig, TrainState)> {
    let Some(ci) = problem.objectives.iter().position(|&o| o == Objective::Content) else {
        return Err(Error::contract("warm start needs the content objective"));
    };
    if problem.meta.doc_count() == 0 {
        return Err(Error::contract("warm start needs at least one documentary item"));
    }
    if base.n_items() != problem.n_items() || base.hidden() != problem.hidden {
        return Err(Error::contract(format!(
            "warm-start parameters are {}x{} (items x hidden), the problem needs {}x{}",
            base.n_items(),
            base.hidden(),
            problem.n_items(),
            problem.hidden
        )));
    }
    if !(0.0..=1.0).contains(&content_cap) {
        return Err(Error::Config(format!("content cap {content_cap} outside [0, 1]")));
    }
    let rows = problem
        .train_rows
        .iter()
        .map(|r| inject_preferences(r, &problem.meta.is_doc, inject_mass))
        .collect::<Result<Vec<_>>>()?;
    let problem = problem.with_train_rows(rows)?;

    let mut config = config.clone();
    let n = problem.num_objectives();
    if config.alpha_bounds.is_empty() {
        config.alpha_bounds = vec![AlphaBound::FREE; n];
    }
    let b = &mut config.alpha_bounds[ci];
    b.hi = b.hi.min(content_cap);
    b.lo = b.lo.min(b.hi);

    let state = TrainState::new(&problem, &config, base.as_slice().to_vec())?;
    Ok((problem, config, state))
}
