//! The tabular series behind the long-tail, amplification, group, and
//! supplier plots.

use std::collections::HashMap;

use crate::dataset::{RatingDataset, SupplierMap};
use crate::metrics::calibration::{
    index_rows, list_distribution_for, profile_category_distribution,
};
use crate::recsys::RecommendationTable;
use crate::segment::{Category, ItemSegmentation, UserGroups};
use crate::{Error, Result};

/// One catalog item: how many users rated it vs how many received it.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatterPoint {
    pub item: String,
    pub pop_data: f64,
    pub pop_rec: f64,
}

#[derive(Debug, Clone)]
pub struct ScatterReport {
    pub points: Vec<ScatterPoint>,
    /// Pearson correlation of `pop_data` vs `pop_rec` over all items.
    pub correlation: f64,
}

/// Data popularity versus recommendation popularity per catalog item;
/// never-recommended items appear with `pop_rec = 0`.
pub fn popularity_scatter(
    recs: &RecommendationTable,
    train: &RatingDataset,
) -> Result<ScatterReport> {
    let mut rec_counts = vec![0u32; train.n_items()];
    for row in recs.rows() {
        for (item, _) in &row.items {
            let idx = train
                .items()
                .get(item)
                .ok_or_else(|| Error::UnknownItem(item.clone(), "train catalog".to_owned()))?;
            rec_counts[idx as usize] += 1;
        }
    }
    let n_data_users = train.n_users().max(1) as f64;
    let n_rec_users = recs.n_users().max(1) as f64;

    let points: Vec<ScatterPoint> = (0..train.n_items() as u32)
        .map(|i| ScatterPoint {
            item: train.items().id(i).to_owned(),
            pop_data: train.item_count(i) as f64 / n_data_users,
            pop_rec: rec_counts[i as usize] as f64 / n_rec_users,
        })
        .collect();

    let xs: Vec<f64> = points.iter().map(|p| p.pop_data).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.pop_rec).collect();
    Ok(ScatterReport {
        correlation: pearson_correlation(&xs, &ys),
        points,
    })
}

/// Pearson correlation coefficient; 0 when either side has no variance.
pub fn pearson_correlation(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 || n != ys.len() {
        return 0.0;
    }
    let nf = n as f64;
    let mean_x = xs.iter().sum::<f64>() / nf;
    let mean_y = ys.iter().sum::<f64>() / nf;
    let mut cov = 0.0;
    let mut var_x = 0.0;
    let mut var_y = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        cov += (x - mean_x) * (y - mean_y);
        var_x += (x - mean_x) * (x - mean_x);
        var_y += (y - mean_y) * (y - mean_y);
    }
    let den = (var_x * var_y).sqrt();
    if den > 0.0 {
        cov / den
    } else {
        0.0
    }
}

/// Mean profile and recommendation proportions for one user group and one
/// item category. Per group and side, the three category rows sum to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupPopRow {
    /// 1-based group number (1 is the most popularity-focused).
    pub group: usize,
    pub category: Category,
    pub profile: f64,
    pub recommendation: f64,
}

pub fn group_popularity_report(
    recs: &RecommendationTable,
    train: &RatingDataset,
    groups: &UserGroups,
    segmentation: &ItemSegmentation,
) -> Result<Vec<GroupPopRow>> {
    let rec_index = index_rows(recs);
    let mut rows = Vec::with_capacity(groups.n_groups() * 3);
    for g in 0..groups.n_groups() {
        let members = groups.members(g);
        if members.is_empty() {
            return Err(Error::EmptyGroup { group: g + 1 });
        }
        let mut profile_mass = [0.0f64; 3];
        let mut rec_mass = [0.0f64; 3];
        for &u in members {
            let p = profile_category_distribution(train.profile(u), segmentation)?;
            let q = list_distribution_for(train, segmentation, &rec_index, u)?;
            for c in 0..3 {
                profile_mass[c] += p.0[c];
                rec_mass[c] += q.0[c];
            }
        }
        let n = members.len() as f64;
        for category in Category::ALL {
            rows.push(GroupPopRow {
                group: g + 1,
                category,
                profile: profile_mass[category.index()] / n,
                recommendation: rec_mass[category.index()] / n,
            });
        }
    }
    Ok(rows)
}

/// One supplier, ranked by data popularity (1 is the most rated), with its
/// share of the rating data and of the recommendation slots.
#[derive(Debug, Clone, PartialEq)]
pub struct SupplierRankRow {
    pub supplier: String,
    pub rank: usize,
    pub data_share: f64,
    pub rec_share: f64,
}

pub fn supplier_rank_report(
    recs: &RecommendationTable,
    train: &RatingDataset,
    map: &SupplierMap,
) -> Result<Vec<SupplierRankRow>> {
    let n_suppliers = map.n_suppliers();
    let mut data_counts = vec![0u64; n_suppliers];
    for r in train.ratings() {
        data_counts[map.supplier_of(r.item) as usize] += 1;
    }
    let mut rec_counts: HashMap<u32, u64> = HashMap::new();
    let mut slots = 0u64;
    for row in recs.rows() {
        for (item, _) in &row.items {
            let idx = train
                .items()
                .get(item)
                .ok_or_else(|| Error::UnknownItem(item.clone(), "train catalog".to_owned()))?;
            *rec_counts.entry(map.supplier_of(idx)).or_insert(0) += 1;
            slots += 1;
        }
    }

    let total_data: u64 = data_counts.iter().sum();
    let mut order: Vec<u32> = (0..n_suppliers as u32).collect();
    order.sort_by(|&a, &b| {
        data_counts[b as usize]
            .cmp(&data_counts[a as usize])
            .then_with(|| map.suppliers().id(a).cmp(map.suppliers().id(b)))
    });

    Ok(order
        .iter()
        .enumerate()
        .map(|(pos, &s)| SupplierRankRow {
            supplier: map.suppliers().id(s).to_owned(),
            rank: pos + 1,
            data_share: if total_data > 0 {
                data_counts[s as usize] as f64 / total_data as f64
            } else {
                0.0
            },
            rec_share: if slots > 0 {
                *rec_counts.get(&s).unwrap_or(&0) as f64 / slots as f64
            } else {
                0.0
            },
        })
        .collect())
}
