//! The four recommenders and top-N list generation.

mod knn;
pub mod mf;
mod most_popular;

pub use knn::{similarity_matrix, similarity_matrix_seq, KnnAxis, KnnModel, SimMatrix};
pub use mf::{MfGradient, MfModel};

use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::RatingDataset;
use crate::{io, par, Error, Result};

pub const DEFAULT_LIST_SIZE: usize = 10;

/// Which recommender to train.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    BiasedMf,
    UserKnn,
    ItemKnn,
    MostPopular,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::BiasedMf,
        Algorithm::UserKnn,
        Algorithm::ItemKnn,
        Algorithm::MostPopular,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::BiasedMf => "biased_mf",
            Algorithm::UserKnn => "user_knn",
            Algorithm::ItemKnn => "item_knn",
            Algorithm::MostPopular => "most_popular",
        }
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "biased_mf" => Ok(Algorithm::BiasedMf),
            "user_knn" => Ok(Algorithm::UserKnn),
            "item_knn" => Ok(Algorithm::ItemKnn),
            "most_popular" => Ok(Algorithm::MostPopular),
            other => Err(Error::UnknownAlgorithm(other.to_owned())),
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Similarity measure for the kNN models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Similarity {
    Cosine,
    Pearson,
}

/// Hyperparameters for one model. Serde defaults mirror the CLI defaults, so
/// a config file only needs the keys it wants to change.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub algorithm: Algorithm,
    /// Latent dimensions (biased MF).
    #[serde(default = "default_factors")]
    pub factors: usize,
    #[serde(default = "default_learning_rate")]
    pub learning_rate: f64,
    #[serde(default = "default_regularization")]
    pub regularization: f64,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    /// Neighborhood size (kNN).
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_similarity")]
    pub similarity: Similarity,
    /// Similarity shrinkage towards zero for thin co-rating support.
    #[serde(default)]
    pub shrinkage: f64,
    /// Recommendation list size N.
    #[serde(default = "default_list_size")]
    pub list_size: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_factors() -> usize {
    50
}
fn default_learning_rate() -> f64 {
    0.005
}
fn default_regularization() -> f64 {
    0.02
}
fn default_epochs() -> usize {
    30
}
fn default_k() -> usize {
    50
}
fn default_similarity() -> Similarity {
    Similarity::Cosine
}
fn default_list_size() -> usize {
    DEFAULT_LIST_SIZE
}
fn default_seed() -> u64 {
    42
}

impl ModelConfig {
    pub fn new(algorithm: Algorithm) -> Self {
        Self {
            algorithm,
            factors: default_factors(),
            learning_rate: default_learning_rate(),
            regularization: default_regularization(),
            epochs: default_epochs(),
            k: default_k(),
            similarity: default_similarity(),
            shrinkage: 0.0,
            list_size: default_list_size(),
            seed: default_seed(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.list_size == 0 {
            return Err(Error::InvalidConfig("list_size must be >= 1".into()));
        }
        if self.factors == 0 {
            return Err(Error::InvalidConfig("factors must be >= 1".into()));
        }
        if self.k == 0 {
            return Err(Error::InvalidConfig("k must be >= 1".into()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::InvalidConfig("learning_rate must be > 0".into()));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidConfig("epochs must be >= 1".into()));
        }
        if self.shrinkage < 0.0 {
            return Err(Error::InvalidConfig("shrinkage must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub(crate) enum ModelState {
    /// Items ranked by rating count descending, ties by ascending id.
    MostPopular { ranking: Vec<u32> },
    BiasedMf(MfModel),
    Knn(KnnModel),
}

/// A fitted model: immutable after `fit`, safe to score concurrently.
#[derive(Debug, Clone)]
pub struct TrainedModel {
    config: ModelConfig,
    train: RatingDataset,
    state: ModelState,
    item_means: Vec<f64>,
}

/// Fit a model on the training data.
pub fn fit(train: &RatingDataset, config: &ModelConfig) -> Result<TrainedModel> {
    config.validate()?;
    if train.is_empty() {
        return Err(Error::EmptyDataset("cannot fit on an empty dataset".into()));
    }
    let state = match config.algorithm {
        Algorithm::MostPopular => ModelState::MostPopular {
            ranking: most_popular::rank_items(train),
        },
        Algorithm::BiasedMf => ModelState::BiasedMf(mf::fit(train, config)?),
        Algorithm::UserKnn => ModelState::Knn(knn::fit(train, KnnAxis::User, config)),
        Algorithm::ItemKnn => ModelState::Knn(knn::fit(train, KnnAxis::Item, config)),
    };
    Ok(TrainedModel {
        config: config.clone(),
        train: train.clone(),
        state,
        item_means: train.item_means(),
    })
}

impl TrainedModel {
    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn algorithm(&self) -> Algorithm {
        self.config.algorithm
    }

    pub fn train_data(&self) -> &RatingDataset {
        &self.train
    }

    /// Learned matrix-factorization state, for biased-MF models.
    pub fn mf_state(&self) -> Option<&MfModel> {
        match &self.state {
            ModelState::BiasedMf(m) => Some(m),
            _ => None,
        }
    }

    /// Training-loss curve (biased MF only): full objective after each epoch.
    pub fn epoch_loss(&self) -> Option<&[f64]> {
        self.mf_state().map(|m| m.epoch_loss.as_slice())
    }

    /// Score an item for a known user (dense indices). Total: every pair
    /// gets a finite score, falling back to means where nothing else is
    /// computable.
    pub fn score(&self, user: u32, item: u32) -> f64 {
        let (r_min, r_max) = self.train.rating_bounds();
        match &self.state {
            ModelState::MostPopular { .. } => self.train.item_count(item) as f64,
            ModelState::BiasedMf(m) => m.predict(user, item),
            ModelState::Knn(k) => k
                .predict(&self.train, user, item, &self.config)
                .unwrap_or_else(|| self.fallback_score(Some(user), item))
                .clamp(r_min, r_max),
        }
    }

    fn fallback_score(&self, user: Option<u32>, item: u32) -> f64 {
        match &self.state {
            // neighbors are users: lean on the item's mean
            ModelState::Knn(k) if k.axis == KnnAxis::User => self.item_means[item as usize],
            // neighbors are items: lean on the user's mean
            ModelState::Knn(_) => match user {
                Some(u) => self.train.user_mean(u),
                None => self.item_means[item as usize],
            },
            _ => self.train.global_mean(),
        }
    }

    /// Score by external ids, with cold-start fallbacks for users or items
    /// absent from the training data.
    pub fn predict(&self, user: &str, item: &str) -> f64 {
        let u = self.train.users().get(user);
        let i = self.train.items().get(item);
        let (r_min, r_max) = self.train.rating_bounds();
        match (u, i) {
            (Some(u), Some(i)) => self.score(u, i),
            (None, Some(i)) => match &self.state {
                ModelState::MostPopular { .. } => self.train.item_count(i) as f64,
                // unknown user: global mean plus the item bias / item mean
                ModelState::BiasedMf(m) => m.global_mean + m.item_bias[i as usize],
                ModelState::Knn(_) => self.item_means[i as usize].clamp(r_min, r_max),
            },
            (Some(u), None) => match &self.state {
                ModelState::MostPopular { .. } => 0.0,
                // unknown item: global mean plus the user bias / user mean
                ModelState::BiasedMf(m) => m.global_mean + m.user_bias[u as usize],
                ModelState::Knn(_) => self.train.user_mean(u).clamp(r_min, r_max),
            },
            (None, None) => match &self.state {
                ModelState::MostPopular { .. } => 0.0,
                _ => self.train.global_mean(),
            },
        }
    }
}

/// Per-user ranked recommendation lists, keyed by external user id.
#[derive(Debug, Clone, PartialEq)]
pub struct RecommendationTable {
    rows: Vec<RecList>,
    list_size: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecList {
    pub user: String,
    /// `(item, score)` by descending score; rank is position + 1.
    pub items: Vec<(String, f64)>,
}

impl RecommendationTable {
    pub fn new(rows: Vec<RecList>, list_size: usize) -> Self {
        Self { rows, list_size }
    }

    pub fn rows(&self) -> &[RecList] {
        &self.rows
    }

    pub fn list_size(&self) -> usize {
        self.list_size
    }

    pub fn n_users(&self) -> usize {
        self.rows.len()
    }

    pub fn get(&self, user: &str) -> Option<&RecList> {
        self.rows.iter().find(|r| r.user == user)
    }

    /// Users whose candidate pool was smaller than the requested list size.
    pub fn short_lists(&self) -> usize {
        self.rows.iter().filter(|r| r.items.len() < self.list_size).count()
    }

    /// Total number of recommendation slots actually emitted.
    pub fn total_slots(&self) -> usize {
        self.rows.iter().map(|r| r.items.len()).sum()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("user,item,rank,score\n");
        for row in &self.rows {
            for (rank, (item, score)) in row.items.iter().enumerate() {
                out.push_str(&format!(
                    "{},{},{},{}\n",
                    row.user,
                    item,
                    rank + 1,
                    io::fmt_f64(*score)
                ));
            }
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        io::write_file(path, &self.to_csv())
    }

    /// Read a `user,item,rank,score` file. Rows for one user need not be
    /// contiguous; within a user, items keep their rank order.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let contents = io::read_to_string(path)?;
        let mut rows: Vec<RecList> = Vec::new();
        let mut position: std::collections::HashMap<String, usize> = std::collections::HashMap::new();
        io::for_each_row(path, &contents, ",", |line, fields| {
            if line == 1 && fields.first() == Some(&"user") {
                return Ok(());
            }
            if fields.len() != 4 {
                return Err(io::row_error(format!(
                    "expected user,item,rank,score, got {} fields",
                    fields.len()
                )));
            }
            let rank: usize = fields[2]
                .trim()
                .parse()
                .map_err(|_| io::row_error(format!("bad rank '{}'", fields[2])))?;
            if rank == 0 {
                return Err(io::row_error("ranks are numbered from 1"));
            }
            let score: f64 = fields[3]
                .trim()
                .parse()
                .map_err(|_| io::row_error(format!("bad score '{}'", fields[3])))?;
            let user = fields[0].trim();
            let idx = *position.entry(user.to_owned()).or_insert_with(|| {
                rows.push(RecList {
                    user: user.to_owned(),
                    items: Vec::new(),
                });
                rows.len() - 1
            });
            let items = &mut rows[idx].items;
            if rank <= items.len() {
                return Err(io::row_error(format!(
                    "duplicate rank {rank} for user '{user}'"
                )));
            }
            items.push((fields[1].trim().to_owned(), score));
            Ok(())
        })?;
        if rows.is_empty() {
            return Err(Error::EmptyDataset(path.display().to_string()));
        }
        let list_size = rows.iter().map(|r| r.items.len()).max().unwrap_or(0);
        Ok(Self { rows, list_size })
    }
}

/// Rank every catalog item the user has not rated and keep the top `n`.
///
/// Ties break by ascending item id, so the table is a pure function of the
/// model. Runs per-user in parallel with the `parallel` feature; the output
/// is identical to [`generate_recommendations_seq`].
pub fn generate_recommendations(model: &TrainedModel, n: usize) -> Result<RecommendationTable> {
    generate_with(model, n, false)
}

/// Sequential reference implementation of [`generate_recommendations`].
pub fn generate_recommendations_seq(model: &TrainedModel, n: usize) -> Result<RecommendationTable> {
    generate_with(model, n, true)
}

fn generate_with(model: &TrainedModel, n: usize, force_seq: bool) -> Result<RecommendationTable> {
    if n == 0 {
        return Err(Error::InvalidConfig("list size must be >= 1".into()));
    }
    let train = &model.train;
    let per_user = |u: usize| -> Vec<(String, f64)> {
        let user = u as u32;
        let scored = rank_for_user(model, user, n);
        scored
            .into_iter()
            .map(|(item, score)| (train.items().id(item).to_owned(), score))
            .collect()
    };
    let lists = if force_seq {
        par::map_indexed_seq(train.n_users(), per_user)
    } else {
        par::map_indexed(train.n_users(), per_user)
    };
    let rows = lists
        .into_iter()
        .enumerate()
        .map(|(u, items)| RecList {
            user: train.users().id(u as u32).to_owned(),
            items,
        })
        .collect();
    Ok(RecommendationTable::new(rows, n))
}

fn rank_for_user(model: &TrainedModel, user: u32, n: usize) -> Vec<(u32, f64)> {
    let train = &model.train;

    // most-popular walks its precomputed ranking and just skips rated items
    if let ModelState::MostPopular { ranking } = &model.state {
        return ranking
            .iter()
            .filter(|&&item| !train.has_rated(user, item))
            .take(n)
            .map(|&item| (item, train.item_count(item) as f64))
            .collect();
    }

    let mut scored: Vec<(u32, f64)> = match &model.state {
        ModelState::Knn(k) => k.score_candidates(model, user),
        _ => (0..train.n_items() as u32)
            .filter(|&item| !train.has_rated(user, item))
            .map(|item| (item, model.score(user, item)))
            .collect(),
    };

    scored.sort_unstable_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap()
            .then_with(|| train.items().id(a.0).cmp(train.items().id(b.0)))
    });
    scored.truncate(n);
    scored
}

// ---------------------------------------------------------------------------
// model files

const MODEL_SCHEMA_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelFile {
    schema_version: u32,
    config: ModelConfig,
    rating_min: f64,
    rating_max: f64,
    users: Vec<String>,
    items: Vec<String>,
    /// `(user index, item index, value)` triples.
    ratings: Vec<(u32, u32, f64)>,
    /// Learned matrix-factorization state; kNN and most-popular state is
    /// recomputed deterministically from the embedded ratings on load.
    mf: Option<MfState>,
}

#[derive(Serialize, Deserialize)]
struct MfState {
    global_mean: f64,
    user_bias: Vec<f64>,
    item_bias: Vec<f64>,
    user_factors: Vec<f64>,
    item_factors: Vec<f64>,
    factors: usize,
    epoch_loss: Vec<f64>,
}

impl TrainedModel {
    /// Self-describing model serialization: versioned JSON with the config,
    /// seed, training ratings, and learned state.
    pub fn to_json(&self) -> Result<String> {
        let (r_min, r_max) = self.train.rating_bounds();
        let file = ModelFile {
            schema_version: MODEL_SCHEMA_VERSION,
            config: self.config.clone(),
            rating_min: r_min,
            rating_max: r_max,
            users: self.train.users().ids().to_vec(),
            items: self.train.items().ids().to_vec(),
            ratings: self
                .train
                .ratings()
                .iter()
                .map(|r| (r.user, r.item, r.value))
                .collect(),
            mf: self.mf_state().map(|m| MfState {
                global_mean: m.global_mean,
                user_bias: m.user_bias.clone(),
                item_bias: m.item_bias.clone(),
                user_factors: m.user_factors.clone(),
                item_factors: m.item_factors.clone(),
                factors: m.factors,
                epoch_loss: m.epoch_loss.clone(),
            }),
        };
        serde_json::to_string(&file).map_err(|e| Error::Json {
            what: "model file".to_owned(),
            message: e.to_string(),
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        io::write_file(path, &self.to_json()?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let contents = io::read_to_string(path)?;
        let file: ModelFile = serde_json::from_str(&contents).map_err(|e| Error::Json {
            what: path.display().to_string(),
            message: e.to_string(),
        })?;
        if file.schema_version != MODEL_SCHEMA_VERSION {
            return Err(Error::ModelVersion {
                found: file.schema_version,
                expected: MODEL_SCHEMA_VERSION,
            });
        }
        let rows: Vec<(String, String, f64)> = file
            .ratings
            .iter()
            .map(|&(u, i, v)| (file.users[u as usize].clone(), file.items[i as usize].clone(), v))
            .collect();
        let train = RatingDataset::from_rows(&rows, (file.rating_min, file.rating_max))?;
        let state = match (file.config.algorithm, file.mf) {
            (Algorithm::BiasedMf, Some(s)) => ModelState::BiasedMf(MfModel {
                global_mean: s.global_mean,
                user_bias: s.user_bias,
                item_bias: s.item_bias,
                user_factors: s.user_factors,
                item_factors: s.item_factors,
                factors: s.factors,
                epoch_loss: s.epoch_loss,
            }),
            (Algorithm::BiasedMf, None) => {
                return Err(Error::Json {
                    what: path.display().to_string(),
                    message: "biased_mf model file is missing its learned state".into(),
                })
            }
            (Algorithm::MostPopular, _) => ModelState::MostPopular {
                ranking: most_popular::rank_items(&train),
            },
            (Algorithm::UserKnn, _) => ModelState::Knn(knn::fit(&train, KnnAxis::User, &file.config)),
            (Algorithm::ItemKnn, _) => ModelState::Knn(knn::fit(&train, KnnAxis::Item, &file.config)),
        };
        let item_means = train.item_means();
        Ok(TrainedModel {
            config: file.config,
            train,
            state,
            item_means,
        })
    }
}
