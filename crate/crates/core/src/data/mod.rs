//! Rating ingestion, preprocessing and user-level splits.
//!
//! Pipeline: [`binarize`] → [`filter_min_interactions`] → [`split`]. Users
//! are split 90/5/5 (strong generalization); validation and test users have
//! 20% of their positives moved into a held-out set that evaluation scores
//! against.

mod bundle;
mod csv_io;
mod synth;

pub use bundle::{load_bundle, save_bundle, BUNDLE_FILES, SPLIT_MAGIC};
pub use csv_io::{read_interactions_csv, read_item_meta_csv, write_interactions_csv, write_item_meta_csv};
pub use synth::{generate_synthetic, SynthConfig};

use std::collections::{BTreeMap, BTreeSet, HashMap};

use log::warn;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ItemMeta;

pub const DEFAULT_THRESHOLD: u8 = 3;
pub const DEFAULT_MIN_COUNT: usize = 5;
pub const DEFAULT_RATIOS: (f64, f64, f64) = (0.90, 0.05, 0.05);
pub const DEFAULT_MASK_FRAC: f64 = 0.20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rating {
    pub user_id: String,
    pub item_id: String,
    pub rating: u8,
    pub timestamp: Option<i64>,
}

/// Raw ratings; `(user, item)` pairs are unique.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct InteractionsTable {
    records: Vec<Rating>,
}

impl InteractionsTable {
    /// Validates ratings and deduplicates `(user, item)` pairs, keeping the
    /// latest timestamp, or the last occurrence when timestamps don't decide.
    pub fn new(records: Vec<Rating>) -> Result<Self> {
        let mut index: HashMap<(String, String), usize> = HashMap::new();
        let mut out: Vec<Rating> = Vec::with_capacity(records.len());
        for r in records {
            if !(1..=5).contains(&r.rating) {
                return Err(Error::Data(format!(
                    "rating {} for ({}, {}) outside 1..=5",
                    r.rating, r.user_id, r.item_id
                )));
            }
            let key = (r.user_id.clone(), r.item_id.clone());
            match index.get(&key) {
                Some(&i) => {
                    let keep_old = matches!(
                        (out[i].timestamp, r.timestamp),
                        (Some(old), Some(new)) if old > new
                    );
                    if !keep_old {
                        out[i] = r;
                    }
                }
                None => {
                    index.insert(key, out.len());
                    out.push(r);
                }
            }
        }
        Ok(Self { records: out })
    }

    pub fn records(&self) -> &[Rating] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Item metadata as read from the metadata CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemRecord {
    pub item_id: String,
    pub price: Option<f64>,
    pub genres: Vec<String>,
}

impl ItemRecord {
    pub fn is_documentary(&self) -> bool {
        self.genres
            .iter()
            .any(|g| g.trim().eq_ignore_ascii_case("documentary"))
    }
}

/// Positive interactions as a user → items map. Ordered containers keep
/// every downstream stage independent of input row order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BinaryInteractions {
    pub by_user: BTreeMap<String, BTreeSet<String>>,
}

impl BinaryInteractions {
    pub fn n_users(&self) -> usize {
        self.by_user.len()
    }

    pub fn n_interactions(&self) -> usize {
        self.by_user.values().map(BTreeSet::len).sum()
    }

    pub fn items(&self) -> BTreeSet<&str> {
        self.by_user
            .values()
            .flat_map(|s| s.iter().map(String::as_str))
            .collect()
    }
}

/// Ratings `>= threshold` become positives; the rest are dropped.
pub fn binarize(table: &InteractionsTable, threshold: u8) -> BinaryInteractions {
    let mut by_user: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for r in table.records() {
        if r.rating >= threshold {
            by_user
                .entry(r.user_id.clone())
                .or_default()
                .insert(r.item_id.clone());
        }
    }
    BinaryInteractions { by_user }
}

/// Repeatedly drops users and items with fewer than `min_count` positives
/// until nothing changes.
pub fn filter_min_interactions(
    interactions: &BinaryInteractions,
    min_count: usize,
) -> Result<BinaryInteractions> {
    let mut by_user = interactions.by_user.clone();
    loop {
        let before: usize = by_user.values().map(BTreeSet::len).sum::<usize>() + by_user.len();

        by_user.retain(|_, items| items.len() >= min_count);
        let mut item_counts: HashMap<&str, usize> = HashMap::new();
        for items in by_user.values() {
            for i in items {
                *item_counts.entry(i.as_str()).or_default() += 1;
            }
        }
        let rare: BTreeSet<String> = item_counts
            .into_iter()
            .filter(|&(_, c)| c < min_count)
            .map(|(i, _)| i.to_string())
            .collect();
        for items in by_user.values_mut() {
            items.retain(|i| !rare.contains(i));
        }
        by_user.retain(|_, items| !items.is_empty());

        let after: usize = by_user.values().map(BTreeSet::len).sum::<usize>() + by_user.len();
        if after == before {
            break;
        }
    }
    if by_user.is_empty() {
        return Err(Error::EmptyDataset("minimum-interaction filtering"));
    }
    Ok(BinaryInteractions { by_user })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitName {
    Train,
    #[serde(alias = "val")]
    Validation,
    Test,
}

impl std::str::FromStr for SplitName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(SplitName::Train),
            "val" | "validation" => Ok(SplitName::Validation),
            "test" => Ok(SplitName::Test),
            other => Err(Error::Config(format!("unknown split `{other}`"))),
        }
    }
}

/// One user's positives as item indices. Train users have no held-out part.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UserRow {
    pub user_id: String,
    pub visible: Vec<u32>,
    pub held_out: Vec<u32>,
}

impl UserRow {
    pub fn dense(&self, n_items: usize) -> Vec<f64> {
        let mut row = vec![0.0; n_items];
        for &i in &self.visible {
            row[i as usize] = 1.0;
        }
        row
    }

    pub fn n_positives(&self) -> usize {
        self.visible.len() + self.held_out.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub item_ids: Vec<String>,
    pub train: Vec<UserRow>,
    pub validation: Vec<UserRow>,
    pub test: Vec<UserRow>,
    pub meta: ItemMeta,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub users: usize,
    pub items: usize,
    pub interactions: usize,
    /// Percentage of empty user × item cells, after filtering.
    pub sparsity: f64,
}

impl std::fmt::Display for DatasetStats {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "users={} items={} interactions={} sparsity={:.4}",
            self.users, self.items, self.interactions, self.sparsity
        )
    }
}

impl Dataset {
    pub fn n_items(&self) -> usize {
        self.item_ids.len()
    }

    pub fn users(&self, split: SplitName) -> &[UserRow] {
        match split {
            SplitName::Train => &self.train,
            SplitName::Validation => &self.validation,
            SplitName::Test => &self.test,
        }
    }

    pub fn train_rows(&self) -> Vec<Vec<f64>> {
        let n = self.n_items();
        self.train.iter().map(|u| u.dense(n)).collect()
    }

    pub fn stats(&self) -> DatasetStats {
        let all = self.train.iter().chain(&self.validation).chain(&self.test);
        let (users, interactions) = all.fold((0, 0), |(u, i), r| (u + 1, i + r.n_positives()));
        let cells = (users * self.n_items()) as f64;
        DatasetStats {
            users,
            items: self.n_items(),
            interactions,
            sparsity: if cells > 0.0 {
                100.0 * (1.0 - interactions as f64 / cells)
            } else {
                100.0
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_items();
        Error::check_len("dataset item meta", n, self.meta.len())?;
        self.meta.validate()?;
        for u in self.train.iter().chain(&self.validation).chain(&self.test) {
            if u.visible.iter().chain(&u.held_out).any(|&i| i as usize >= n) {
                return Err(Error::Data(format!("user {} references unknown item", u.user_id)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitConfig {
    pub ratios: (f64, f64, f64),
    pub mask_frac: f64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            ratios: DEFAULT_RATIOS,
            mask_frac: DEFAULT_MASK_FRAC,
        }
    }
}

fn round_half_up(x: f64) -> usize {
    (x + 0.5).floor().max(0.0) as usize
}

/// Holdout size for a user with `positives` items: round-half-up, at least
/// one, and never the whole history.
pub fn mask_size(positives: usize, mask_frac: f64) -> usize {
    round_half_up(mask_frac * positives as f64)
        .max(1)
        .min(positives.saturating_sub(1))
}

/// Seeded user-level split with per-user holdout masks for validation and
/// test users. `items` supplies prices and genres; missing prices are
/// imputed with the median known price and flagged.
pub fn split(
    filtered: &BinaryInteractions,
    items: &[ItemRecord],
    seed: u64,
    config: SplitConfig,
) -> Result<Dataset> {
    let (r_train, r_val, r_test) = config.ratios;
    if [r_train, r_val, r_test].iter().any(|r| !(0.0..=1.0).contains(r))
        || ((r_train + r_val + r_test) - 1.0).abs() > 1e-9
    {
        return Err(Error::Config(format!(
            "split ratios must be a distribution, got {:?}",
            config.ratios
        )));
    }
    if !(config.mask_frac > 0.0 && config.mask_frac < 1.0) {
        return Err(Error::Config(format!(
            "mask fraction must lie in (0, 1), got {}",
            config.mask_frac
        )));
    }
    let n_users = filtered.n_users();
    let n_val = round_half_up(n_users as f64 * r_val);
    let n_test = round_half_up(n_users as f64 * r_test);
    if n_users == 0 || n_val + n_test >= n_users || (r_val > 0.0 && n_val == 0) || (r_test > 0.0 && n_test == 0) {
        return Err(Error::Data(format!(
            "{n_users} users are too few for a {:?} split",
            config.ratios
        )));
    }

    let item_ids: Vec<String> = filtered.items().into_iter().map(str::to_string).collect();
    let index: HashMap<&str, u32> = item_ids
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i as u32))
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut users: Vec<(&String, &BTreeSet<String>)> = filtered.by_user.iter().collect();
    users.shuffle(&mut rng);

    let mut train = Vec::new();
    let mut validation = Vec::new();
    let mut test = Vec::new();
    for (pos, (user, positives)) in users.into_iter().enumerate() {
        let mut idx: Vec<u32> = positives.iter().map(|i| index[i.as_str()]).collect();
        idx.sort_unstable();
        let target = if pos < n_val {
            Some(&mut validation)
        } else if pos < n_val + n_test {
            Some(&mut test)
        } else {
            None
        };
        match target {
            Some(bucket) if idx.len() >= 2 => {
                let k = mask_size(idx.len(), config.mask_frac);
                let mut shuffled = idx.clone();
                shuffled.shuffle(&mut rng);
                let mut held_out = shuffled[..k].to_vec();
                let mut visible = shuffled[k..].to_vec();
                held_out.sort_unstable();
                visible.sort_unstable();
                bucket.push(UserRow {
                    user_id: user.clone(),
                    visible,
                    held_out,
                });
            }
            Some(_) => {
                warn!("user {user} has {} positive(s); cannot mask, moved to train", idx.len());
                train.push(UserRow {
                    user_id: user.clone(),
                    visible: idx,
                    held_out: Vec::new(),
                });
            }
            None => train.push(UserRow {
                user_id: user.clone(),
                visible: idx,
                held_out: Vec::new(),
            }),
        }
    }
    if train.is_empty() {
        return Err(Error::EmptyDataset("splitting (no training users)"));
    }

    let meta = build_item_meta(&item_ids, items, &train)?;
    let ds = Dataset {
        item_ids,
        train,
        validation,
        test,
        meta,
    };
    ds.validate()?;
    Ok(ds)
}

fn build_item_meta(item_ids: &[String], items: &[ItemRecord], train: &[UserRow]) -> Result<ItemMeta> {
    let by_id: HashMap<&str, &ItemRecord> = items.iter().map(|r| (r.item_id.as_str(), r)).collect();
    let known: Vec<Option<f64>> = item_ids
        .iter()
        .map(|id| by_id.get(id.as_str()).and_then(|r| r.price))
        .collect();
    if let Some(p) = known.iter().flatten().find(|p| !p.is_finite() || **p < 0.0) {
        return Err(Error::Data(format!("invalid item price {p}")));
    }
    let mut prices: Vec<f64> = known.iter().flatten().copied().collect();
    prices.sort_by(f64::total_cmp);
    let median = match prices.len() {
        0 => 0.0,
        n if n % 2 == 1 => prices[n / 2],
        n => 0.5 * (prices[n / 2 - 1] + prices[n / 2]),
    };
    let imputed: Vec<bool> = known.iter().map(Option::is_none).collect();
    let n_imputed = imputed.iter().filter(|&&b| b).count();
    if n_imputed > 0 {
        warn!("{n_imputed} item price(s) missing; imputed median {median}");
    }
    Ok(ItemMeta {
        price: known.iter().map(|p| p.unwrap_or(median)).collect(),
        is_doc: item_ids
            .iter()
            .map(|id| by_id.get(id.as_str()).is_some_and(|r| r.is_documentary()))
            .collect(),
        popularity: compute_popularity(train, item_ids.len()),
        price_imputed: imputed,
    })
}

/// Per-item count of training users who interacted with it, divided by the
/// largest count.
pub fn compute_popularity(train: &[UserRow], n_items: usize) -> Vec<f64> {
    let mut counts = vec![0usize; n_items];
    for u in train {
        for &i in u.visible.iter().chain(&u.held_out) {
            counts[i as usize] += 1;
        }
    }
    let max = counts.iter().copied().max().unwrap_or(0);
    if max == 0 {
        return vec![0.0; n_items];
    }
    counts.iter().map(|&c| c as f64 / max as f64).collect()
}

/// Full preprocessing from raw ratings to a split dataset.
pub fn preprocess(
    table: &InteractionsTable,
    items: &[ItemRecord],
    threshold: u8,
    min_count: usize,
    seed: u64,
    config: SplitConfig,
) -> Result<Dataset> {
    let bin = binarize(table, threshold);
    if bin.n_users() == 0 {
        return Err(Error::EmptyDataset("binarization"));
    }
    let filtered = filter_min_interactions(&bin, min_count)?;
    split(&filtered, items, seed, config)
}
