//! User- and item-based neighborhood models.
//!
//! Similarities are computed over co-rated support only: for two users this
//! means the items both rated, for two items the users who rated both.
//! Pairs with no co-rated support get similarity 0 and are excluded from
//! neighborhoods, as are non-positive similarities.
//!
//! Two scoring surfaces share the neighborhoods: rating *prediction*
//! ([`KnnModel::predict`]) is the similarity-weighted average over the k
//! most similar usable neighbors, mean-centered for Pearson and clamped to
//! the rating scale; top-N *ranking* uses the unnormalized neighborhood sum
//! (see [`KnnModel::score_candidates`]).

use crate::dataset::RatingDataset;
use crate::recsys::{ModelConfig, Similarity, TrainedModel};
use crate::par;

/// Whether neighbors are users or items.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KnnAxis {
    User,
    Item,
}

/// Dense symmetric similarity matrix.
#[derive(Debug, Clone)]
pub struct SimMatrix {
    n: usize,
    values: Vec<f64>,
}

impl SimMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, a: u32, b: u32) -> f64 {
        self.values[a as usize * self.n + b as usize]
    }
}

#[derive(Debug, Clone)]
pub struct KnnModel {
    pub axis: KnnAxis,
    pub sim: SimMatrix,
    /// Per row, its k most similar neighbors `(index, similarity)` with
    /// positive similarity, strongest first.
    neighbors: Vec<Vec<(u32, f64)>>,
    user_means: Vec<f64>,
    item_means: Vec<f64>,
    /// item → (user, value) pairs; the gather index for user-axis scoring.
    item_profiles: Vec<Vec<(u32, f64)>>,
}

pub(crate) fn fit(train: &RatingDataset, axis: KnnAxis, config: &ModelConfig) -> KnnModel {
    let sim = similarity_matrix(train, axis, config.similarity, config.shrinkage);
    let ids = match axis {
        KnnAxis::User => train.users(),
        KnnAxis::Item => train.items(),
    };
    let neighbors = par::map_indexed(sim.n(), |a| {
        let a = a as u32;
        let mut row: Vec<(u32, f64)> = (0..sim.n() as u32)
            .filter(|&b| b != a && sim.get(a, b) > 0.0)
            .map(|b| (b, sim.get(a, b)))
            .collect();
        row.sort_unstable_by(|x, y| {
            y.1.partial_cmp(&x.1)
                .unwrap()
                .then_with(|| ids.id(x.0).cmp(ids.id(y.0)))
        });
        row.truncate(config.k);
        row
    });
    let user_means = (0..train.n_users() as u32).map(|u| train.user_mean(u)).collect();
    KnnModel {
        axis,
        sim,
        neighbors,
        user_means,
        item_means: train.item_means(),
        item_profiles: train.item_profiles(),
    }
}

/// Pairwise similarities along `axis`, parallel over rows when the
/// `parallel` feature is enabled. Only the upper triangle is computed and
/// then mirrored, so the matrix is exactly symmetric.
pub fn similarity_matrix(
    train: &RatingDataset,
    axis: KnnAxis,
    similarity: Similarity,
    shrinkage: f64,
) -> SimMatrix {
    build_matrix(train, axis, similarity, shrinkage, false)
}

/// Sequential reference implementation of [`similarity_matrix`].
pub fn similarity_matrix_seq(
    train: &RatingDataset,
    axis: KnnAxis,
    similarity: Similarity,
    shrinkage: f64,
) -> SimMatrix {
    build_matrix(train, axis, similarity, shrinkage, true)
}

type SparseRows<'a> = Vec<&'a [(u32, f64)]>;

fn build_matrix(
    train: &RatingDataset,
    axis: KnnAxis,
    similarity: Similarity,
    shrinkage: f64,
    force_seq: bool,
) -> SimMatrix {
    let item_profiles;
    let (vectors, inverted): (SparseRows<'_>, SparseRows<'_>) = match axis {
        KnnAxis::User => {
            item_profiles = train.item_profiles();
            (
                (0..train.n_users() as u32).map(|u| train.profile(u)).collect(),
                item_profiles.iter().map(|p| p.as_slice()).collect(),
            )
        }
        KnnAxis::Item => {
            item_profiles = train.item_profiles();
            (
                item_profiles.iter().map(|p| p.as_slice()).collect(),
                (0..train.n_users() as u32).map(|u| train.profile(u)).collect(),
            )
        }
    };
    let n = vectors.len();

    // row a holds similarities to b > a
    let upper = |a: usize| -> Vec<f64> {
        let mut dot = vec![0.0f64; n];
        let mut sum_a = vec![0.0f64; n];
        let mut sum_b = vec![0.0f64; n];
        let mut sq_a = vec![0.0f64; n];
        let mut sq_b = vec![0.0f64; n];
        let mut cnt = vec![0u32; n];
        for &(dim, va) in vectors[a] {
            for &(b, vb) in inverted[dim as usize] {
                let b = b as usize;
                if b > a {
                    dot[b] += va * vb;
                    sum_a[b] += va;
                    sum_b[b] += vb;
                    sq_a[b] += va * va;
                    sq_b[b] += vb * vb;
                    cnt[b] += 1;
                }
            }
        }
        (a + 1..n)
            .map(|b| {
                if cnt[b] == 0 {
                    return 0.0;
                }
                let raw = match similarity {
                    Similarity::Cosine => {
                        let den = (sq_a[b] * sq_b[b]).sqrt();
                        if den > 0.0 {
                            dot[b] / den
                        } else {
                            0.0
                        }
                    }
                    Similarity::Pearson => {
                        if cnt[b] < 2 {
                            return 0.0;
                        }
                        let m = cnt[b] as f64;
                        let cov = dot[b] - sum_a[b] * sum_b[b] / m;
                        let var_a = (sq_a[b] - sum_a[b] * sum_a[b] / m).max(0.0);
                        let var_b = (sq_b[b] - sum_b[b] * sum_b[b] / m).max(0.0);
                        let den = (var_a * var_b).sqrt();
                        if den > 0.0 {
                            cov / den
                        } else {
                            0.0
                        }
                    }
                };
                let shrunk = if shrinkage > 0.0 {
                    raw * cnt[b] as f64 / (cnt[b] as f64 + shrinkage)
                } else {
                    raw
                };
                shrunk.clamp(-1.0, 1.0)
            })
            .collect()
    };

    let rows = if force_seq {
        par::map_indexed_seq(n, upper)
    } else {
        par::map_indexed(n, upper)
    };

    let mut values = vec![0.0f64; n * n];
    for (a, row) in rows.into_iter().enumerate() {
        for (offset, sim) in row.into_iter().enumerate() {
            let b = a + 1 + offset;
            values[a * n + b] = sim;
            values[b * n + a] = sim;
        }
    }
    SimMatrix { n, values }
}

struct Neighbor {
    sim: f64,
    value: f64,
    center: f64,
}

impl KnnModel {
    /// Predict a single rating; `None` when no neighbor can score the item.
    pub(crate) fn predict(
        &self,
        train: &RatingDataset,
        user: u32,
        item: u32,
        config: &ModelConfig,
    ) -> Option<f64> {
        let mut candidates: Vec<(u32, Neighbor)> = match self.axis {
            KnnAxis::User => self.item_profiles[item as usize]
                .iter()
                .filter(|&&(v, _)| v != user && self.sim.get(user, v) > 0.0)
                .map(|&(v, r)| {
                    (
                        v,
                        Neighbor {
                            sim: self.sim.get(user, v),
                            value: r,
                            center: self.user_means[v as usize],
                        },
                    )
                })
                .collect(),
            KnnAxis::Item => train
                .profile(user)
                .iter()
                .filter(|&&(j, _)| j != item && self.sim.get(item, j) > 0.0)
                .map(|&(j, r)| {
                    (
                        j,
                        Neighbor {
                            sim: self.sim.get(item, j),
                            value: r,
                            center: self.item_means[j as usize],
                        },
                    )
                })
                .collect(),
        };
        if candidates.is_empty() {
            return None;
        }
        let ids: &crate::ids::Vocab = match self.axis {
            KnnAxis::User => train.users(),
            KnnAxis::Item => train.items(),
        };
        candidates.sort_unstable_by(|a, b| {
            b.1.sim
                .partial_cmp(&a.1.sim)
                .unwrap()
                .then_with(|| ids.id(a.0).cmp(ids.id(b.0)))
        });
        candidates.truncate(config.k);

        let base = match self.axis {
            KnnAxis::User => self.user_means[user as usize],
            KnnAxis::Item => self.item_means[item as usize],
        };
        Some(combine(
            candidates.iter().map(|(_, n)| n),
            config.similarity,
            base,
        ))
    }

    /// Relevance-score every unrated catalog item for `user`.
    ///
    /// Ranking aggregates over the precomputed k-nearest-neighbor lists:
    /// for user-based models, `Σ sim(u,v)·r_v(i)` over u's peer group; for
    /// item-based models, `Σ sim(i,j)·r_u(j)` over the candidate's neighbor
    /// list intersected with the profile. Unlike the normalized average
    /// that [`KnnModel::predict`] returns for rating prediction, the sum
    /// keeps the support signal — how many close neighbors actually back an
    /// item — which is what the neighborhood recommenders rank by. Items no
    /// neighbor can reach score 0.
    pub(crate) fn score_candidates(&self, model: &TrainedModel, user: u32) -> Vec<(u32, f64)> {
        let train = model.train_data();
        let n_items = train.n_items();
        match self.axis {
            KnnAxis::User => {
                let mut score = vec![0.0f64; n_items];
                let mut rated = vec![false; n_items];
                for &(i, _) in train.profile(user) {
                    rated[i as usize] = true;
                }
                for &(v, s) in &self.neighbors[user as usize] {
                    for &(i, r) in train.profile(v) {
                        if !rated[i as usize] {
                            score[i as usize] += s * r;
                        }
                    }
                }
                (0..n_items)
                    .filter(|&i| !rated[i])
                    .map(|i| (i as u32, score[i]))
                    .collect()
            }
            KnnAxis::Item => (0..n_items as u32)
                .filter(|&i| !train.has_rated(user, i))
                .map(|i| {
                    let score: f64 = self.neighbors[i as usize]
                        .iter()
                        .filter_map(|&(j, s)| train.rating_of(user, j).map(|r| s * r))
                        .sum();
                    (i, score)
                })
                .collect(),
        }
    }
}

fn combine<'a>(
    neighbors: impl Iterator<Item = &'a Neighbor>,
    similarity: Similarity,
    base: f64,
) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for n in neighbors {
        den += n.sim.abs();
        num += match similarity {
            Similarity::Cosine => n.sim * n.value,
            Similarity::Pearson => n.sim * (n.value - n.center),
        };
    }
    if den == 0.0 {
        return base;
    }
    match similarity {
        Similarity::Cosine => num / den,
        Similarity::Pearson => base + num / den,
    }
}
