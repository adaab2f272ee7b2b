use std::collections::{HashMap, HashSet};

use crate::dataset::RatingDataset;
use crate::recsys::RecommendationTable;
use crate::{Error, Result};

/// Mean over users with at least one test rating of `|ℓ_u ∩ test_u| / n`.
pub fn precision_at_n(
    recs: &RecommendationTable,
    test: &RatingDataset,
    n: usize,
) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidConfig("precision needs n >= 1".into()));
    }
    let mut test_items: HashMap<&str, HashSet<&str>> = HashMap::new();
    for u in 0..test.n_users() as u32 {
        let items = test
            .profile(u)
            .iter()
            .map(|&(i, _)| test.items().id(i))
            .collect();
        test_items.insert(test.users().id(u), items);
    }

    let mut sum = 0.0;
    let mut evaluated = 0usize;
    for row in recs.rows() {
        let Some(held_out) = test_items.get(row.user.as_str()) else {
            continue;
        };
        if held_out.is_empty() {
            continue;
        }
        let hits = row
            .items
            .iter()
            .filter(|(item, _)| held_out.contains(item.as_str()))
            .count();
        sum += hits as f64 / n as f64;
        evaluated += 1;
    }
    if evaluated == 0 {
        return Err(Error::NoEvaluableUsers);
    }
    Ok(sum / evaluated as f64)
}

/// Fraction of the catalog recommended to at least one user.
pub fn catalog_coverage(recs: &RecommendationTable, train: &RatingDataset) -> f64 {
    if train.n_items() == 0 {
        return 0.0;
    }
    let mut seen: HashSet<&str> = HashSet::new();
    for row in recs.rows() {
        for (item, _) in &row.items {
            seen.insert(item);
        }
    }
    seen.len() as f64 / train.n_items() as f64
}
