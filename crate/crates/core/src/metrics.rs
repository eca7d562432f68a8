//! Top-k ranking metrics over masked users.
//!
//! Users are scored from their visible history, visible items are removed
//! from the candidates, and the remaining items are ranked by descending
//! logit with ties going to the lower item index.

use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::data::UserRow;
use crate::error::{Error, Result};
use crate::model::{score_logits, ItemMeta, RecommenderParams};

pub const DEFAULT_K: usize = 10;

/// The first `k` items of a user's ranking, visible items excluded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankedList {
    items: Vec<u32>,
    k: usize,
}

impl RankedList {
    /// Builds a list from an explicit ordering; duplicates are rejected and
    /// only the first `k` entries are kept.
    pub fn from_order(order: Vec<u32>, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::contract("k must be at least 1"));
        }
        let mut seen = std::collections::HashSet::new();
        if !order.iter().all(|i| seen.insert(*i)) {
            return Err(Error::contract("ranked list contains duplicates"));
        }
        let mut items = order;
        items.truncate(k);
        Ok(Self { items, k })
    }

    pub fn items(&self) -> &[u32] {
        &self.items
    }

    pub fn k(&self) -> usize {
        self.k
    }
}

/// Ranks all items not in `exclude` by descending score.
pub fn rank_top_k(scores: &[f64], exclude: &[u32], k: usize) -> Result<RankedList> {
    if k == 0 {
        return Err(Error::contract("k must be at least 1"));
    }
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(Error::Numerical {
            step: 0,
            message: format!("non-finite score for item {i}"),
        });
    }
    let mut excluded = vec![false; scores.len()];
    for &i in exclude {
        *excluded
            .get_mut(i as usize)
            .ok_or_else(|| Error::contract(format!("excluded item {i} out of range")))? = true;
    }
    let mut cand: Vec<u32> = (0..scores.len() as u32).filter(|&i| !excluded[i as usize]).collect();
    cand.sort_by(|&a, &b| scores[b as usize].total_cmp(&scores[a as usize]).then(a.cmp(&b)));
    cand.truncate(k);
    Ok(RankedList { items: cand, k })
}

fn hits_weighted(ranked: &RankedList, held_out: &[u32], weight: impl Fn(u32) -> f64) -> Option<f64> {
    if held_out.is_empty() {
        return None;
    }
    let total: f64 = ranked
        .items
        .iter()
        .filter(|i| held_out.contains(i))
        .map(|&i| weight(i))
        .sum();
    Some(total / ranked.k.min(held_out.len()) as f64)
}

/// Hits in the top k divided by `min(k, |held_out|)`; `None` when nothing is
/// held out.
pub fn recall_at_k(ranked: &RankedList, held_out: &[u32]) -> Option<f64> {
    hits_weighted(ranked, held_out, |_| 1.0)
}

/// Price-weighted hits divided by `min(k, |held_out|)`.
pub fn revenue_at_k(ranked: &RankedList, held_out: &[u32], prices: &[f64]) -> Option<f64> {
    hits_weighted(ranked, held_out, |i| prices[i as usize])
}

pub fn doc_count_at_k(ranked: &RankedList, is_doc: &[bool]) -> f64 {
    ranked.items.iter().filter(|&&i| is_doc[i as usize]).count() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserMetrics {
    pub user_id: String,
    pub recall: f64,
    pub revenue: f64,
    pub doc_count: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub k: usize,
    pub n_users: usize,
    pub recall_at_k: f64,
    pub revenue_at_k: f64,
    pub doc_count_at_k: f64,
    #[serde(skip)]
    pub per_user: Vec<UserMetrics>,
}

impl MetricsReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn write_per_user_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv_open(path, e))?;
        w.write_record(["user_id", "recall", "revenue", "doc_count"])?;
        for u in &self.per_user {
            w.write_record([
                u.user_id.clone(),
                u.recall.to_string(),
                u.revenue.to_string(),
                u.doc_count.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// Mean that does not depend on the order of `values`.
fn stable_mean(values: impl Iterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = values.collect();
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    v.iter().sum::<f64>() / v.len() as f64
}

/// Evaluates an arbitrary scorer; `score` maps a user to one score per item.
pub fn evaluate_with<F>(users: &[UserRow], meta: &ItemMeta, k: usize, mut score: F) -> Result<MetricsReport>
where
    F: FnMut(&UserRow) -> Result<Vec<f64>>,
{
    if users.is_empty() {
        return Err(Error::contract("cannot evaluate an empty split"));
    }
    let mut per_user = Vec::with_capacity(users.len());
    for u in users {
        if u.held_out.is_empty() {
            warn!("user {} has no held-out items; skipped", u.user_id);
            continue;
        }
        let scores = score(u)?;
        Error::check_len("scores vs item meta", meta.len(), scores.len())?;
        let ranked = rank_top_k(&scores, &u.visible, k)?;
        per_user.push(UserMetrics {
            user_id: u.user_id.clone(),
            recall: recall_at_k(&ranked, &u.held_out).unwrap_or_default(),
            revenue: revenue_at_k(&ranked, &u.held_out, &meta.price).unwrap_or_default(),
            doc_count: doc_count_at_k(&ranked, &meta.is_doc),
        });
    }
    if per_user.is_empty() {
        return Err(Error::contract("no user in the split has held-out items"));
    }
    Ok(MetricsReport {
        k,
        n_users: per_user.len(),
        recall_at_k: stable_mean(per_user.iter().map(|u| u.recall)),
        revenue_at_k: stable_mean(per_user.iter().map(|u| u.revenue)),
        doc_count_at_k: stable_mean(per_user.iter().map(|u| u.doc_count)),
        per_user,
    })
}

/// Scores each user with the model on its visible history.
pub fn evaluate(params: &RecommenderParams, users: &[UserRow], meta: &ItemMeta, k: usize) -> Result<MetricsReport> {
    Error::check_len("model items vs item meta", params.n_items(), meta.len())?;
    let n = meta.len();
    evaluate_with(users, meta, k, |u| score_logits(params, &u.dense(n)))
}
