use std::collections::HashMap;

use crate::dataset::{Interaction, RatingDataset};
use crate::{Error, Result};

/// Convert aggregated interaction counts to explicit ratings by per-user
/// min–max scaling onto `[r_min, r_max]`.
///
/// Within each user, more interactions never map to a lower rating; the
/// user's extremes land exactly on `r_min` / `r_max`. A user whose counts
/// are all equal gets the scale midpoint.
pub fn implicit_to_explicit(
    interactions: &[Interaction],
    scale: (f64, f64),
) -> Result<RatingDataset> {
    let (r_min, r_max) = scale;
    if !(r_min < r_max) {
        return Err(Error::InvalidConfig(format!(
            "rating scale [{r_min}, {r_max}] is not increasing"
        )));
    }
    if interactions.is_empty() {
        return Err(Error::EmptyDataset("no interactions to convert".to_owned()));
    }
    for it in interactions {
        if it.count == 0 {
            return Err(Error::InvalidConfig(format!(
                "interaction ({}, {}) has count 0",
                it.user, it.item
            )));
        }
    }

    let mut extremes: HashMap<&str, (u64, u64)> = HashMap::new();
    for it in interactions {
        let entry = extremes.entry(it.user.as_str()).or_insert((it.count, it.count));
        entry.0 = entry.0.min(it.count);
        entry.1 = entry.1.max(it.count);
    }

    let midpoint = (r_min + r_max) / 2.0;
    let rows: Vec<(String, String, f64)> = interactions
        .iter()
        .map(|it| {
            let (lo, hi) = extremes[it.user.as_str()];
            let value = if lo == hi {
                midpoint
            } else {
                r_min + (r_max - r_min) * (it.count - lo) as f64 / (hi - lo) as f64
            };
            (it.user.clone(), it.item.clone(), value)
        })
        .collect();

    RatingDataset::from_rows(&rows, scale)
}

/// Drop users with fewer than `min_ratings` ratings (strictly fewer, so a
/// profile of exactly `min_ratings` survives), then drop items left with no
/// ratings. Applied once, not to a fixpoint.
pub fn filter_min_profile(dataset: &RatingDataset, min_ratings: usize) -> Result<RatingDataset> {
    if min_ratings == 0 {
        return Err(Error::InvalidConfig("min_ratings must be >= 1".to_owned()));
    }
    let rows: Vec<(String, String, f64)> = dataset
        .ratings()
        .iter()
        .filter(|r| dataset.profile(r.user).len() >= min_ratings)
        .map(|r| {
            (
                dataset.users().id(r.user).to_owned(),
                dataset.items().id(r.item).to_owned(),
                r.value,
            )
        })
        .collect();
    if rows.is_empty() {
        return Err(Error::EmptyDataset(format!(
            "no user has at least {min_ratings} ratings"
        )));
    }
    RatingDataset::from_rows(&rows, dataset.rating_bounds())
}
