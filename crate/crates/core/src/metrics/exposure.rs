//! Supplier-side exposure: recommendation share q(s) versus rating share
//! p(s) per supplier group, and the supplier popularity deviation (SPD).

use crate::dataset::{RatingDataset, SupplierMap};
use crate::recsys::RecommendationTable;
use crate::segment::SupplierGroups;
use crate::{Error, Result};

/// Per-group recommendation shares `q` and rating shares `p`; each vector
/// sums to 1.
#[derive(Debug, Clone)]
pub struct SupplierExposure {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
}

/// `q(s)` counts recommendation slots whose item belongs to supplier group
/// `s`, over all emitted slots; `p(s)` counts train ratings the same way.
pub fn supplier_exposure(
    recs: &RecommendationTable,
    train: &RatingDataset,
    groups: &SupplierGroups,
    map: &SupplierMap,
) -> Result<SupplierExposure> {
    let n_groups = groups.n_groups();

    let mut q_counts = vec![0u64; n_groups];
    let mut slots = 0u64;
    for row in recs.rows() {
        for (item, _) in &row.items {
            let idx = train
                .items()
                .get(item)
                .ok_or_else(|| Error::UnknownItem(item.clone(), "train catalog".to_owned()))?;
            let group = groups
                .group_of(map.supplier_of(idx))
                .ok_or_else(|| Error::UnmappedItem(item.clone()))?;
            q_counts[group as usize] += 1;
            slots += 1;
        }
    }
    if slots == 0 {
        return Err(Error::EmptyDataset("recommendation table has no slots".into()));
    }

    let mut p_counts = vec![0u64; n_groups];
    for r in train.ratings() {
        let group = groups
            .group_of(map.supplier_of(r.item))
            .ok_or_else(|| Error::UnmappedItem(train.items().id(r.item).to_owned()))?;
        p_counts[group as usize] += 1;
    }
    let total_ratings = train.n_ratings() as f64;

    Ok(SupplierExposure {
        q: q_counts.iter().map(|&c| c as f64 / slots as f64).collect(),
        p: p_counts
            .iter()
            .map(|&c| c as f64 / total_ratings)
            .collect(),
    })
}

/// Supplier popularity deviation: `Σ_s |q(s) − p(s)| / |S|`.
pub fn compute_spd(exposure: &SupplierExposure) -> f64 {
    let n = exposure.q.len();
    if n == 0 {
        return 0.0;
    }
    exposure
        .q
        .iter()
        .zip(&exposure.p)
        .map(|(q, p)| (q - p).abs())
        .sum::<f64>()
        / n as f64
}
