//! In-memory rating data: explicit ratings with per-user profiles and
//! per-item counts, raw implicit interactions, and the item → supplier map.

use crate::ids::Vocab;
use crate::{Error, Result};

pub const DEFAULT_RATING_MIN: f64 = 1.0;
pub const DEFAULT_RATING_MAX: f64 = 5.0;

/// One aggregated implicit-feedback record (e.g. playcounts).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interaction {
    pub user: String,
    pub item: String,
    pub count: u64,
}

/// A single explicit rating, on dense indices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rating {
    pub user: u32,
    pub item: u32,
    pub value: f64,
}

/// Immutable explicit-rating dataset.
///
/// Users and items are interned to dense indices; `profiles` and
/// `item_counts` are derived indices over the same `ratings` and stay
/// consistent with it by construction.
#[derive(Debug, Clone)]
pub struct RatingDataset {
    users: Vocab,
    items: Vocab,
    ratings: Vec<Rating>,
    profiles: Vec<Vec<(u32, f64)>>,
    item_counts: Vec<u32>,
    rating_min: f64,
    rating_max: f64,
}

impl RatingDataset {
    /// Build a dataset from `(user, item, value)` rows.
    ///
    /// Duplicate `(user, item)` pairs keep the last value seen. Ids are
    /// interned in first-seen order, so identical input produces an
    /// identical dataset.
    pub fn from_rows(rows: &[(String, String, f64)], scale: (f64, f64)) -> Result<Self> {
        let (rating_min, rating_max) = scale;
        if !(rating_min < rating_max) {
            return Err(Error::InvalidConfig(format!(
                "rating scale [{rating_min}, {rating_max}] is not increasing"
            )));
        }

        let mut users = Vocab::new();
        let mut items = Vocab::new();
        let mut profiles: Vec<Vec<(u32, f64)>> = Vec::new();
        for (user, item, value) in rows {
            let u = users.intern(user) as usize;
            let i = items.intern(item);
            if profiles.len() <= u {
                profiles.push(Vec::new());
            }
            // keep-last aggregation for duplicate pairs
            match profiles[u].iter_mut().find(|(it, _)| *it == i) {
                Some(entry) => entry.1 = *value,
                None => profiles[u].push((i, *value)),
            }
        }
        for profile in &mut profiles {
            profile.sort_unstable_by_key(|&(item, _)| item);
        }

        let mut ratings = Vec::new();
        let mut item_counts = vec![0u32; items.len()];
        for (u, profile) in profiles.iter().enumerate() {
            for &(item, value) in profile {
                ratings.push(Rating {
                    user: u as u32,
                    item,
                    value,
                });
                item_counts[item as usize] += 1;
            }
        }

        Ok(Self {
            users,
            items,
            ratings,
            profiles,
            item_counts,
            rating_min,
            rating_max,
        })
    }

    pub fn empty(scale: (f64, f64)) -> Self {
        Self::from_rows(&[], scale).expect("valid scale")
    }

    pub fn n_users(&self) -> usize {
        self.users.len()
    }

    pub fn n_items(&self) -> usize {
        self.items.len()
    }

    pub fn n_ratings(&self) -> usize {
        self.ratings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ratings.is_empty()
    }

    pub fn users(&self) -> &Vocab {
        &self.users
    }

    pub fn items(&self) -> &Vocab {
        &self.items
    }

    pub fn ratings(&self) -> &[Rating] {
        &self.ratings
    }

    /// A user's profile ρ_u as `(item, value)` pairs sorted by item index.
    pub fn profile(&self, user: u32) -> &[(u32, f64)] {
        &self.profiles[user as usize]
    }

    /// Number of ratings an item received.
    pub fn item_count(&self, item: u32) -> u32 {
        self.item_counts[item as usize]
    }

    pub fn item_counts(&self) -> &[u32] {
        &self.item_counts
    }

    pub fn rating_bounds(&self) -> (f64, f64) {
        (self.rating_min, self.rating_max)
    }

    pub fn has_rated(&self, user: u32, item: u32) -> bool {
        self.profiles[user as usize]
            .binary_search_by_key(&item, |&(it, _)| it)
            .is_ok()
    }

    pub fn rating_of(&self, user: u32, item: u32) -> Option<f64> {
        let profile = &self.profiles[user as usize];
        profile
            .binary_search_by_key(&item, |&(it, _)| it)
            .ok()
            .map(|pos| profile[pos].1)
    }

    pub fn global_mean(&self) -> f64 {
        if self.ratings.is_empty() {
            return 0.0;
        }
        self.ratings.iter().map(|r| r.value).sum::<f64>() / self.ratings.len() as f64
    }

    pub fn user_mean(&self, user: u32) -> f64 {
        let profile = self.profile(user);
        if profile.is_empty() {
            return self.global_mean();
        }
        profile.iter().map(|&(_, v)| v).sum::<f64>() / profile.len() as f64
    }

    pub fn item_mean(&self, item: u32) -> f64 {
        let count = self.item_counts[item as usize];
        if count == 0 {
            return self.global_mean();
        }
        let sum: f64 = self
            .ratings
            .iter()
            .filter(|r| r.item == item)
            .map(|r| r.value)
            .sum();
        sum / count as f64
    }

    /// Per-item mean ratings in one pass, for prediction fallbacks.
    pub fn item_means(&self) -> Vec<f64> {
        let mut sums = vec![0.0f64; self.items.len()];
        for r in &self.ratings {
            sums[r.item as usize] += r.value;
        }
        let global = self.global_mean();
        sums.iter()
            .zip(&self.item_counts)
            .map(|(&s, &c)| if c == 0 { global } else { s / c as f64 })
            .collect()
    }

    /// Inverted index: item → `(user, value)` pairs sorted by user index.
    pub fn item_profiles(&self) -> Vec<Vec<(u32, f64)>> {
        let mut out = vec![Vec::new(); self.items.len()];
        for r in &self.ratings {
            out[r.item as usize].push((r.user, r.value));
        }
        out
    }

    /// Materialize rows with external ids, e.g. for rebuilding after a filter.
    pub fn to_rows(&self) -> Vec<(String, String, f64)> {
        self.ratings
            .iter()
            .map(|r| {
                (
                    self.users.id(r.user).to_owned(),
                    self.items.id(r.item).to_owned(),
                    r.value,
                )
            })
            .collect()
    }

    /// Recount item ratings from scratch and compare with the kept index.
    /// Used by tests and debug assertions.
    pub fn check_consistency(&self) -> bool {
        let mut counts = vec![0u32; self.items.len()];
        let mut total = 0usize;
        for profile in &self.profiles {
            for &(item, _) in profile {
                counts[item as usize] += 1;
                total += 1;
            }
        }
        counts == self.item_counts && total == self.ratings.len()
    }
}

/// Total mapping from the dataset's items to their suppliers (A(·)).
#[derive(Debug, Clone)]
pub struct SupplierMap {
    suppliers: Vocab,
    item_supplier: Vec<u32>,
}

impl SupplierMap {
    /// Join raw `(item, supplier)` pairs against `dataset`.
    ///
    /// Items with no supplier row are dropped from the dataset together with
    /// their ratings; the returned map is total over the remaining catalog.
    pub fn join(dataset: &RatingDataset, pairs: &[(String, String)]) -> Result<SupplierJoin> {
        use std::collections::HashMap;
        let mut by_item: HashMap<&str, &str> = HashMap::new();
        for (item, supplier) in pairs {
            if let Some(prev) = by_item.insert(item.as_str(), supplier.as_str()) {
                if prev != supplier {
                    return Err(Error::SupplierConflict {
                        item: item.clone(),
                        first: prev.to_owned(),
                        second: supplier.clone(),
                    });
                }
            }
        }

        let mapped: Vec<bool> = (0..dataset.n_items() as u32)
            .map(|i| by_item.contains_key(dataset.items().id(i)))
            .collect();
        let dropped_items = mapped.iter().filter(|&&m| !m).count();

        let (kept, dropped_ratings) = if dropped_items == 0 {
            (dataset.clone(), 0)
        } else {
            let rows: Vec<(String, String, f64)> = dataset
                .ratings()
                .iter()
                .filter(|r| mapped[r.item as usize])
                .map(|r| {
                    (
                        dataset.users().id(r.user).to_owned(),
                        dataset.items().id(r.item).to_owned(),
                        r.value,
                    )
                })
                .collect();
            let dropped = dataset.n_ratings() - rows.len();
            (RatingDataset::from_rows(&rows, dataset.rating_bounds())?, dropped)
        };

        if kept.is_empty() {
            return Err(Error::EmptyDataset(
                "no items remain after the supplier join".to_owned(),
            ));
        }

        let mut suppliers = Vocab::new();
        let item_supplier = (0..kept.n_items() as u32)
            .map(|i| suppliers.intern(by_item[kept.items().id(i)]))
            .collect();

        Ok(SupplierJoin {
            dataset: kept,
            map: SupplierMap {
                suppliers,
                item_supplier,
            },
            dropped_items,
            dropped_ratings,
        })
    }

    pub fn supplier_of(&self, item: u32) -> u32 {
        self.item_supplier[item as usize]
    }

    pub fn suppliers(&self) -> &Vocab {
        &self.suppliers
    }

    pub fn n_suppliers(&self) -> usize {
        self.suppliers.len()
    }

    /// Pairs with external ids, aligned with `dataset.items()`.
    pub fn to_pairs(&self, items: &Vocab) -> Vec<(String, String)> {
        self.item_supplier
            .iter()
            .enumerate()
            .map(|(i, &s)| {
                (
                    items.id(i as u32).to_owned(),
                    self.suppliers.id(s).to_owned(),
                )
            })
            .collect()
    }
}

/// Result of joining a supplier file against a dataset.
#[derive(Debug, Clone)]
pub struct SupplierJoin {
    pub dataset: RatingDataset,
    pub map: SupplierMap,
    pub dropped_items: usize,
    pub dropped_ratings: usize,
}

/// A train/test split, plus the users whose single rating was forced into
/// train (recorded as warnings, not errors).
#[derive(Debug, Clone)]
pub struct SplitPair {
    pub train: RatingDataset,
    pub test: RatingDataset,
    pub seed: u64,
    pub forced_into_train: Vec<String>,
}
