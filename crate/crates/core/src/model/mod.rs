//! One-hidden-layer reconstruction autoencoder with hand-derived gradients.
//!
//! `scores = sigmoid(dec(tanh(enc(x))))` per user. Every objective is the
//! same item-weighted binary cross-entropy kernel between the input row and
//! the reconstruction, averaged over items and then over users (a weighted
//! multinomial likelihood over the logits is available as an alternative):
//!
//! * relevance: unit weights
//! * revenue: item price
//! * content: documentary indicator times popularity
//!
//! Parameters live in one flat vector in a fixed registry order:
//! `enc_weights` (items × hidden, row-major), `enc_bias` (hidden),
//! `dec_weights` (hidden × items, row-major), `dec_bias` (items). Gradients
//! use the same layout.

mod snapshot;

pub use snapshot::{read_snapshot, write_snapshot, SnapshotHeader, SNAPSHOT_MAGIC, SNAPSHOT_VERSION};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const REGISTRY: [&str; 4] = ["enc_weights", "enc_bias", "dec_weights", "dec_bias"];
pub const INIT_SCALE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct RecommenderParams {
    n_items: usize,
    hidden: usize,
    data: Vec<f64>,
}

impl RecommenderParams {
    pub fn flat_len(n_items: usize, hidden: usize) -> usize {
        2 * n_items * hidden + hidden + n_items
    }

    pub fn zeros(n_items: usize, hidden: usize) -> Self {
        Self {
            n_items,
            hidden,
            data: vec![0.0; Self::flat_len(n_items, hidden)],
        }
    }

    /// Uniform in `[-INIT_SCALE, INIT_SCALE]`, registry order, seeded.
    pub fn init(n_items: usize, hidden: usize, seed: u64) -> Result<Self> {
        if n_items == 0 || hidden == 0 {
            return Err(Error::contract("model needs at least one item and one hidden unit"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..Self::flat_len(n_items, hidden))
            .map(|_| rng.random_range(-INIT_SCALE..=INIT_SCALE))
            .collect();
        Ok(Self {
            n_items,
            hidden,
            data,
        })
    }

    pub fn from_flat(n_items: usize, hidden: usize, data: Vec<f64>) -> Result<Self> {
        Error::check_len("parameter vector", Self::flat_len(n_items, hidden), data.len())?;
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::contract("parameters must be finite"));
        }
        Ok(Self {
            n_items,
            hidden,
            data,
        })
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_flat(self) -> Vec<f64> {
        self.data
    }

    fn layout(&self) -> Layout {
        Layout::new(self.n_items, self.hidden)
    }

    pub fn enc_weights(&self) -> &[f64] {
        let l = self.layout();
        &self.data[l.enc_w..l.enc_b]
    }

    pub fn enc_bias(&self) -> &[f64] {
        let l = self.layout();
        &self.data[l.enc_b..l.dec_w]
    }

    pub fn dec_weights(&self) -> &[f64] {
        let l = self.layout();
        &self.data[l.dec_w..l.dec_b]
    }

    pub fn dec_bias(&self) -> &[f64] {
        let l = self.layout();
        &self.data[l.dec_b..]
    }
}

#[derive(Debug, Clone, Copy)]
struct Layout {
    items: usize,
    hidden: usize,
    enc_w: usize,
    enc_b: usize,
    dec_w: usize,
    dec_b: usize,
}

impl Layout {
    fn new(items: usize, hidden: usize) -> Self {
        let enc_b = items * hidden;
        let dec_w = enc_b + hidden;
        let dec_b = dec_w + hidden * items;
        Self {
            items,
            hidden,
            enc_w: 0,
            enc_b,
            dec_w,
            dec_b,
        }
    }
}

/// Per-item side information used by the revenue and content objectives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemMeta {
    pub price: Vec<f64>,
    pub is_doc: Vec<bool>,
    /// Train-split interaction counts divided by their maximum.
    pub popularity: Vec<f64>,
    /// Prices that were missing from the metadata and imputed.
    #[serde(default)]
    pub price_imputed: Vec<bool>,
}

impl ItemMeta {
    pub fn validate(&self) -> Result<()> {
        let n = self.price.len();
        Error::check_len("item meta is_doc", n, self.is_doc.len())?;
        Error::check_len("item meta popularity", n, self.popularity.len())?;
        if !self.price_imputed.is_empty() {
            Error::check_len("item meta price_imputed", n, self.price_imputed.len())?;
        }
        if self.price.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::Data("item prices must be finite and non-negative".into()));
        }
        if self
            .popularity
            .iter()
            .any(|p| !p.is_finite() || !(0.0..=1.0).contains(p))
        {
            return Err(Error::Data("item popularity must lie in [0, 1]".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.price.len()
    }

    pub fn is_empty(&self) -> bool {
        self.price.is_empty()
    }

    pub fn doc_count(&self) -> usize {
        self.is_doc.iter().filter(|&&d| d).count()
    }

    /// `𝕀_doc · popularity` per item.
    pub fn content_weights(&self) -> Vec<f64> {
        self.is_doc
            .iter()
            .zip(&self.popularity)
            .map(|(&d, &p)| if d { p } else { 0.0 })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    Relevance,
    Revenue,
    Content,
}

impl Objective {
    pub fn name(self) -> &'static str {
        match self {
            Objective::Relevance => "relevance",
            Objective::Revenue => "revenue",
            Objective::Content => "content",
        }
    }

    /// Per-item loss weights; `None` means unit weights.
    pub fn item_weights(self, meta: &ItemMeta) -> Option<Vec<f64>> {
        match self {
            Objective::Relevance => None,
            Objective::Revenue => Some(meta.price.clone()),
            Objective::Content => Some(meta.content_weights()),
        }
    }
}

impl std::fmt::Display for Objective {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Objective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "relevance" => Ok(Objective::Relevance),
            "revenue" => Ok(Objective::Revenue),
            "content" => Ok(Objective::Content),
            other => Err(Error::Config(format!("unknown objective `{other}`"))),
        }
    }
}

/// Dense user interaction rows, one per user, each of length `n_items`.
#[derive(Debug, Clone, PartialEq)]
pub struct UserBatch {
    pub rows: Vec<Vec<f64>>,
    pub user_ids: Vec<String>,
}

impl UserBatch {
    pub fn new(rows: Vec<Vec<f64>>, user_ids: Vec<String>) -> Result<Self> {
        Error::check_len("user batch ids", rows.len(), user_ids.len())?;
        if let Some(first) = rows.first() {
            for r in &rows {
                Error::check_len("user batch row", first.len(), r.len())?;
                if r.iter().any(|v| !(0.0..=1.0).contains(v)) {
                    return Err(Error::contract("user rows must lie in [0, 1]"));
                }
            }
        }
        Ok(Self { rows, user_ids })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossGrad {
    pub loss: f64,
    pub grad: Vec<f64>,
}

#[inline]
fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
#[inline]
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

fn log_sum_exp(z: &[f64]) -> f64 {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

fn softmax_of(z: &[f64]) -> Vec<f64> {
    let lse = log_sum_exp(z);
    z.iter().map(|v| (v - lse).exp()).collect()
}

struct Forward {
    hidden: Vec<f64>,
    logits: Vec<f64>,
}

fn forward(params: &RecommenderParams, row: &[f64]) -> Forward {
    let l = params.layout();
    let p = &params.data;
    let mut hidden = p[l.enc_b..l.dec_w].to_vec();
    for (i, &x) in row.iter().enumerate() {
        if x != 0.0 {
            let w = &p[l.enc_w + i * l.hidden..l.enc_w + (i + 1) * l.hidden];
            for (h, &wij) in hidden.iter_mut().zip(w) {
                *h += x * wij;
            }
        }
    }
    hidden.iter_mut().for_each(|h| *h = h.tanh());

    let mut logits = p[l.dec_b..].to_vec();
    for (j, &h) in hidden.iter().enumerate() {
        let w = &p[l.dec_w + j * l.items..l.dec_w + (j + 1) * l.items];
        for (z, &wji) in logits.iter_mut().zip(w) {
            *z += h * wji;
        }
    }
    Forward { hidden, logits }
}

fn check_rows<R: AsRef<[f64]>>(params: &RecommenderParams, rows: &[R]) -> Result<()> {
    for r in rows {
        Error::check_len("user row vs model items", params.n_items, r.as_ref().len())?;
    }
    Ok(())
}

/// Pre-sigmoid scores for one user; ranking uses these to avoid saturation ties.
pub fn score_logits(params: &RecommenderParams, row: &[f64]) -> Result<Vec<f64>> {
    Error::check_len("user row vs model items", params.n_items, row.len())?;
    Ok(forward(params, row).logits)
}

pub fn predict_scores(params: &RecommenderParams, batch: &UserBatch) -> Result<Vec<Vec<f64>>> {
    check_rows(params, &batch.rows)?;
    Ok(batch
        .rows
        .iter()
        .map(|r| forward(params, r).logits.into_iter().map(sigmoid).collect())
        .collect())
}

/// Per-user reconstruction likelihood.
///
/// `Bce` scores each item independently and averages over items and users.
/// `Multinomial` puts a softmax over the catalogue and sums the weighted
/// log-probabilities of the row's items, averaged over users. With per-item
/// BCE an item weight rescales that item's term without moving its optimum,
/// while under the softmax the weights compete for one probability budget.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Likelihood {
    #[default]
    Bce,
    Multinomial,
}

impl std::str::FromStr for Likelihood {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bce" => Ok(Self::Bce),
            "multinomial" | "mult" => Ok(Self::Multinomial),
            _ => Err(Error::Config(format!("unknown likelihood {s:?} (bce, multinomial)"))),
        }
    }
}

/// The shared BCE kernel, see [`weighted_reconstruction_with`].
pub fn weighted_reconstruction<R: AsRef<[f64]>>(
    params: &RecommenderParams,
    rows: &[R],
    weight_sets: &[Option<&[f64]>],
) -> Result<Vec<LossGrad>> {
    weighted_reconstruction_with(params, rows, weight_sets, Likelihood::Bce)
}

/// One forward pass per user, one backward pass per weight set. `None`
/// stands for unit weights. Users are reduced in order.
pub fn weighted_reconstruction_with<R: AsRef<[f64]>>(
    params: &RecommenderParams,
    rows: &[R],
    weight_sets: &[Option<&[f64]>],
    likelihood: Likelihood,
) -> Result<Vec<LossGrad>> {
    if rows.is_empty() {
        return Err(Error::contract("loss over an empty batch"));
    }
    check_rows(params, rows)?;
    for w in weight_sets.iter().flatten() {
        Error::check_len("item weights", params.n_items, w.len())?;
    }
    let l = params.layout();
    let p = &params.data;
    let scale = match likelihood {
        Likelihood::Bce => 1.0 / (l.items as f64 * rows.len() as f64),
        Likelihood::Multinomial => 1.0 / rows.len() as f64,
    };

    let mut out: Vec<LossGrad> = weight_sets
        .iter()
        .map(|_| LossGrad {
            loss: 0.0,
            grad: vec![0.0; p.len()],
        })
        .collect();
    let mut dz = vec![0.0; l.items];
    let mut dh = vec![0.0; l.hidden];

    for row in rows {
        let row = row.as_ref();
        let fw = forward(params, row);
        let softmax = match likelihood {
            Likelihood::Bce => Vec::new(),
            Likelihood::Multinomial => softmax_of(&fw.logits),
        };
        let lse = match likelihood {
            Likelihood::Bce => 0.0,
            Likelihood::Multinomial => log_sum_exp(&fw.logits),
        };
        for (ws, acc) in weight_sets.iter().zip(out.iter_mut()) {
            let weight = |i: usize| ws.map_or(1.0, |w| w[i]);
            let mut user_loss = 0.0;
            match likelihood {
                Likelihood::Bce => {
                    for i in 0..l.items {
                        let z = fw.logits[i];
                        let w = weight(i);
                        user_loss += w * (softplus(z) - row[i] * z);
                        dz[i] = w * (sigmoid(z) - row[i]) * scale;
                    }
                }
                Likelihood::Multinomial => {
                    let mut mass = 0.0;
                    for i in 0..l.items {
                        let wx = weight(i) * row[i];
                        user_loss -= wx * (fw.logits[i] - lse);
                        mass += wx;
                    }
                    for i in 0..l.items {
                        dz[i] = (mass * softmax[i] - weight(i) * row[i]) * scale;
                    }
                }
            }
            acc.loss += user_loss * scale;

            let g = &mut acc.grad;
            for (gi, &d) in g[l.dec_b..].iter_mut().zip(&dz) {
                *gi += d;
            }
            for j in 0..l.hidden {
                let h = fw.hidden[j];
                let base = l.dec_w + j * l.items;
                let w = &p[base..base + l.items];
                let gw = &mut g[base..base + l.items];
                let mut back = 0.0;
                for i in 0..l.items {
                    gw[i] += h * dz[i];
                    back += w[i] * dz[i];
                }
                dh[j] = back * (1.0 - h * h);
            }
            for (gb, &d) in g[l.enc_b..l.dec_w].iter_mut().zip(&dh) {
                *gb += d;
            }
            for (i, &x) in row.iter().enumerate() {
                if x != 0.0 {
                    let gw = &mut g[l.enc_w + i * l.hidden..l.enc_w + (i + 1) * l.hidden];
                    for (gij, &d) in gw.iter_mut().zip(&dh) {
                        *gij += x * d;
                    }
                }
            }
        }
    }
    Ok(out)
}

fn single<R: AsRef<[f64]>>(
    params: &RecommenderParams,
    rows: &[R],
    weights: Option<&[f64]>,
) -> Result<(f64, Vec<f64>)> {
    let lg = weighted_reconstruction(params, rows, &[weights])?
        .pop()
        .expect("one weight set in, one result out");
    Ok((lg.loss, lg.grad))
}

/// Mean per-item binary cross-entropy between the rows and their reconstruction.
pub fn loss_relevance(params: &RecommenderParams, batch: &UserBatch) -> Result<(f64, Vec<f64>)> {
    single(params, &batch.rows, None)
}

/// Relevance loss with each item's term multiplied by its price.
pub fn loss_revenue(
    params: &RecommenderParams,
    batch: &UserBatch,
    meta: &ItemMeta,
) -> Result<(f64, Vec<f64>)> {
    single(params, &batch.rows, Some(&meta.price))
}

/// Relevance loss restricted to documentaries, weighted by popularity.
pub fn loss_content(
    params: &RecommenderParams,
    batch: &UserBatch,
    meta: &ItemMeta,
) -> Result<(f64, Vec<f64>)> {
    single(params, &batch.rows, Some(&meta.content_weights()))
}

/// Adds `total_mass / #docs` to every documentary entry, then clamps at 1.
pub fn inject_preferences(row: &[f64], doc_mask: &[bool], total_mass: f64) -> Result<Vec<f64>> {
    Error::check_len("inject_preferences mask", row.len(), doc_mask.len())?;
    if !(total_mass > 0.0 && total_mass.is_finite()) {
        return Err(Error::contract(format!(
            "injected mass must be positive, got {total_mass}"
        )));
    }
    let docs = doc_mask.iter().filter(|&&d| d).count();
    if docs == 0 {
        return Err(Error::contract("cannot inject preferences: no documentary items"));
    }
    let each = total_mass / docs as f64;
    Ok(row
        .iter()
        .zip(doc_mask)
        .map(|(&x, &d)| if d { (x + each).min(1.0) } else { x })
        .collect())
}
