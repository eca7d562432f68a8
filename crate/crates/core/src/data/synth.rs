//! Seeded synthetic ratings from a low-rank affinity model.
//!
//! Each user and item gets a Gaussian latent vector; affinity is their
//! scaled dot product plus an item popularity bias. Log prices are
//! correlated with that bias through `price_popularity_corr`, and
//! documentaries get `doc_bias_shift` added so they stay niche. With
//! `price_segmentation` s > 0, items priced above the median damp the first
//! half of their latent vector by `1 - s` and cheaper items the second
//! half, so tastes for cheap and expensive items live in different
//! factors. Every user
//! draws a history size, then samples positives without replacement with
//! probability proportional to `exp(affinity / temperature)` (Gumbel top-k);
//! a few low-affinity items are added with ratings 1–2.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{InteractionsTable, ItemRecord, Rating};
use crate::error::{Error, Result};

const GENRES: [&str; 8] = [
    "Action", "Comedy", "Drama", "Romance", "Thriller", "Sci-Fi", "Horror", "Animation",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub users: usize,
    pub items: usize,
    pub latent_dim: usize,
    /// Mean and standard deviation of log price.
    pub price_log_mean: f64,
    pub price_log_sd: f64,
    /// Correlation between log price and the item popularity bias.
    pub price_popularity_corr: f64,
    /// How strongly cheap and expensive items use separate latent factors,
    /// in [0, 1].
    pub price_segmentation: f64,
    pub doc_fraction: f64,
    pub doc_bias_shift: f64,
    /// Standard deviation of the item popularity bias.
    pub popularity_sd: f64,
    pub temperature: f64,
    pub min_positives: usize,
    pub max_positives: usize,
    pub negatives_per_user: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            users: 1000,
            items: 200,
            latent_dim: 16,
            price_log_mean: 2.5,
            price_log_sd: 0.8,
            price_popularity_corr: -0.5,
            price_segmentation: 0.0,
            doc_fraction: 0.1,
            doc_bias_shift: -0.5,
            popularity_sd: 0.8,
            temperature: 1.0,
            min_positives: 8,
            max_positives: 24,
            negatives_per_user: 3,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.users == 0 || self.items == 0 || self.latent_dim == 0 {
            return bad("synthetic users, items and latent_dim must be positive".into());
        }
        if self.min_positives == 0 || self.min_positives > self.max_positives {
            return bad(format!(
                "need 1 <= min_positives <= max_positives, got {}..{}",
                self.min_positives, self.max_positives
            ));
        }
        if self.max_positives + self.negatives_per_user > self.items {
            return bad(format!(
                "{} positives plus {} negatives exceed {} items",
                self.max_positives, self.negatives_per_user, self.items
            ));
        }
        if !(0.0..=1.0).contains(&self.doc_fraction) {
            return bad(format!("doc_fraction {} outside [0, 1]", self.doc_fraction));
        }
        if !(0.0..=1.0).contains(&self.price_segmentation) {
            return bad(format!("price_segmentation {} outside [0, 1]", self.price_segmentation));
        }
        if !(-1.0..=1.0).contains(&self.price_popularity_corr) {
            return bad(format!(
                "price_popularity_corr {} outside [-1, 1]",
                self.price_popularity_corr
            ));
        }
        let positive = [self.price_log_sd, self.popularity_sd, self.temperature];
        if positive.iter().any(|v| !v.is_finite() || *v < 0.0) || self.temperature == 0.0 {
            return bad("price_log_sd, popularity_sd and temperature must be non-negative (temperature > 0)".into());
        }
        if !self.price_log_mean.is_finite() || !self.doc_bias_shift.is_finite() {
            return bad("price_log_mean and doc_bias_shift must be finite".into());
        }
        Ok(())
    }

    pub fn doc_count(&self) -> usize {
        (self.doc_fraction * self.items as f64 + 0.5).floor() as usize
    }
}

fn pad_width(n: usize) -> usize {
    n.to_string().len()
}

/// Generates ratings and item metadata. Identical `(config, seed)` pairs
/// give identical output.
pub fn generate_synthetic(cfg: &SynthConfig, seed: u64) -> Result<(InteractionsTable, Vec<ItemRecord>)> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let std = Normal::new(0.0, 1.0).expect("unit normal");
    let d = cfg.latent_dim;

    let user_f: Vec<f64> = (0..cfg.users * d).map(|_| std.sample(&mut rng)).collect();
    let mut item_f: Vec<f64> = (0..cfg.items * d).map(|_| std.sample(&mut rng)).collect();
    let base: Vec<f64> = (0..cfg.items).map(|_| std.sample(&mut rng)).collect();
    let noise: Vec<f64> = (0..cfg.items).map(|_| std.sample(&mut rng)).collect();

    let rho = cfg.price_popularity_corr;
    let prices: Vec<f64> = base
        .iter()
        .zip(&noise)
        .map(|(&b, &e)| {
            let z = rho * b + (1.0 - rho * rho).sqrt() * e;
            let p = (cfg.price_log_mean + cfg.price_log_sd * z).exp();
            (p * 100.0).round() / 100.0
        })
        .collect();

    if cfg.price_segmentation > 0.0 {
        let mut sorted = prices.clone();
        sorted.sort_by(f64::total_cmp);
        let median = sorted[sorted.len() / 2];
        let damp = 1.0 - cfg.price_segmentation;
        for (i, &p) in prices.iter().enumerate() {
            let f = &mut item_f[i * d..(i + 1) * d];
            let (lo, hi) = f.split_at_mut(d / 2);
            let muted = if p >= median { lo } else { hi };
            muted.iter_mut().for_each(|x| *x *= damp);
        }
    }

    let mut order: Vec<usize> = (0..cfg.items).collect();
    order.shuffle(&mut rng);
    let mut is_doc = vec![false; cfg.items];
    for &i in &order[..cfg.doc_count()] {
        is_doc[i] = true;
    }
    let bias: Vec<f64> = (0..cfg.items)
        .map(|i| cfg.popularity_sd * base[i] + if is_doc[i] { cfg.doc_bias_shift } else { 0.0 })
        .collect();

    let iw = pad_width(cfg.items);
    let uw = pad_width(cfg.users);
    let item_ids: Vec<String> = (0..cfg.items).map(|i| format!("i{:0iw$}", i + 1)).collect();
    let items = (0..cfg.items)
        .map(|i| {
            let genres = if is_doc[i] {
                vec!["Documentary".to_string()]
            } else {
                let first = rng.random_range(0..GENRES.len());
                let mut g = vec![GENRES[first].to_string()];
                if rng.random_bool(0.3) {
                    let second = (first + rng.random_range(1..GENRES.len())) % GENRES.len();
                    g.push(GENRES[second].to_string());
                }
                g
            };
            ItemRecord {
                item_id: item_ids[i].clone(),
                price: Some(prices[i]),
                genres,
            }
        })
        .collect();

    let scale = 1.0 / (d as f64).sqrt();
    let mut records = Vec::new();
    let mut clock: i64 = 0;
    let mut keyed: Vec<(f64, usize)> = Vec::with_capacity(cfg.items);
    for u in 0..cfg.users {
        let uf = &user_f[u * d..(u + 1) * d];
        keyed.clear();
        for i in 0..cfg.items {
            let dotp: f64 = uf.iter().zip(&item_f[i * d..(i + 1) * d]).map(|(a, b)| a * b).sum();
            let affinity = scale * dotp + bias[i];
            let uniform: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
            let gumbel = -(-uniform.ln()).ln();
            keyed.push((affinity / cfg.temperature + gumbel, i));
        }
        keyed.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let n_pos = rng.random_range(cfg.min_positives..=cfg.max_positives);
        let user_id = format!("u{:0uw$}", u + 1);
        let mut push = |item: usize, rating: u8, clock: &mut i64| {
            *clock += 1;
            records.push(Rating {
                user_id: user_id.clone(),
                item_id: item_ids[item].clone(),
                rating,
                timestamp: Some(*clock),
            });
        };
        for &(_, i) in &keyed[..n_pos] {
            let rating = rng.random_range(3..=5);
            push(i, rating, &mut clock);
        }
        let tail = &keyed[keyed.len() - cfg.negatives_per_user..];
        for &(_, i) in tail {
            let rating = rng.random_range(1..=2);
            push(i, rating, &mut clock);
        }
    }
    Ok((InteractionsTable::new(records)?, items))
}
