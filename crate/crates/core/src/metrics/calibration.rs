//! User-side calibration: category distributions, Jensen–Shannon divergence,
//! and the users' popularity-propensity deviation (UPD).

use std::collections::HashMap;

use crate::dataset::RatingDataset;
use crate::recsys::RecommendationTable;
use crate::segment::{Category, ItemSegmentation, UserGroups};
use crate::{par, Error, Result};

/// Probability mass over the item categories, in H, M, T order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CategoryDistribution(pub [f64; 3]);

impl CategoryDistribution {
    pub fn get(&self, c: Category) -> f64 {
        self.0[c.index()]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Rating-weighted category distribution of a user profile:
/// `p(c|u) = Σ_{i∈ρ_u} r(u,i)·1(i∈c) / Σ_i r(u,i)`.
pub fn profile_category_distribution(
    profile: &[(u32, f64)],
    segmentation: &ItemSegmentation,
) -> Result<CategoryDistribution> {
    if profile.is_empty() {
        return Err(Error::EmptyDistribution("profile"));
    }
    let mut mass = [0.0f64; 3];
    for &(item, value) in profile {
        mass[segmentation.category(item).index()] += value;
    }
    let total: f64 = mass.iter().sum();
    if total <= 0.0 {
        return Err(Error::EmptyDistribution("profile rating mass"));
    }
    Ok(CategoryDistribution([
        mass[0] / total,
        mass[1] / total,
        mass[2] / total,
    ]))
}

/// Count-based category distribution of a recommendation list:
/// `q(c|u) = |{i ∈ ℓ_u : i ∈ c}| / |ℓ_u|`.
pub fn list_category_distribution(
    items: &[u32],
    segmentation: &ItemSegmentation,
) -> Result<CategoryDistribution> {
    if items.is_empty() {
        return Err(Error::EmptyDistribution("recommendation list"));
    }
    let mut counts = [0usize; 3];
    for &item in items {
        counts[segmentation.category(item).index()] += 1;
    }
    let n = items.len() as f64;
    Ok(CategoryDistribution([
        counts[0] as f64 / n,
        counts[1] as f64 / n,
        counts[2] as f64 / n,
    ]))
}

/// Jensen–Shannon divergence with base-2 logarithms, so the value lies in
/// `[0, 1]`. Uses the `0·log 0 ≡ 0` convention and stays finite when either
/// side has zero entries.
pub fn jensen_shannon(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::MismatchedSupport {
            left: p.len(),
            right: q.len(),
        });
    }
    let mut acc = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        let m = 0.5 * (a + b);
        if a > 0.0 {
            acc += 0.5 * a * (a / m).log2();
        }
        if b > 0.0 {
            acc += 0.5 * b * (b / m).log2();
        }
    }
    // the mathematical range is [0, 1]; strip floating-point dust
    Ok(acc.clamp(0.0, 1.0))
}

/// UPD and its per-group decomposition.
#[derive(Debug, Clone)]
pub struct UpdReport {
    /// Mean over groups of the mean per-user JSD in the group.
    pub upd: f64,
    pub per_group: Vec<f64>,
}

/// Users' popularity-propensity deviation: for every user, the JSD between
/// the profile distribution and the recommendation-list distribution, then
/// averaged within each group and across groups.
pub fn compute_upd(
    recs: &RecommendationTable,
    train: &RatingDataset,
    segmentation: &ItemSegmentation,
    groups: &UserGroups,
) -> Result<UpdReport> {
    let jsds = per_user_jsd(recs, train, segmentation)?;
    let mut per_group = Vec::with_capacity(groups.n_groups());
    for g in 0..groups.n_groups() {
        let members = groups.members(g);
        if members.is_empty() {
            return Err(Error::EmptyGroup { group: g + 1 });
        }
        let sum: f64 = members.iter().map(|&u| jsds[u as usize]).sum();
        per_group.push(sum / members.len() as f64);
    }
    let upd = per_group.iter().sum::<f64>() / per_group.len() as f64;
    Ok(UpdReport { upd, per_group })
}

/// JSD between profile and list distributions for every train user.
pub(crate) fn per_user_jsd(
    recs: &RecommendationTable,
    train: &RatingDataset,
    segmentation: &ItemSegmentation,
) -> Result<Vec<f64>> {
    let rec_index = index_rows(recs);
    let results = par::map_indexed(train.n_users(), |u| -> Result<f64> {
        let user = u as u32;
        let p = profile_category_distribution(train.profile(user), segmentation)?;
        let q = list_distribution_for(train, segmentation, &rec_index, user)?;
        jensen_shannon(p.as_slice(), q.as_slice())
    });
    results.into_iter().collect()
}

pub(crate) type RecIndex<'a> = HashMap<&'a str, &'a crate::recsys::RecList>;

pub(crate) fn index_rows(recs: &RecommendationTable) -> RecIndex<'_> {
    recs.rows().iter().map(|r| (r.user.as_str(), r)).collect()
}

pub(crate) fn list_distribution_for(
    train: &RatingDataset,
    segmentation: &ItemSegmentation,
    rec_index: &RecIndex<'_>,
    user: u32,
) -> Result<CategoryDistribution> {
    let user_id = train.users().id(user);
    let row = rec_index.get(user_id).ok_or_else(|| {
        Error::UnknownUser(user_id.to_owned(), "recommendation table".to_owned())
    })?;
    let items = row
        .items
        .iter()
        .map(|(item, _)| {
            train
                .items()
                .get(item)
                .ok_or_else(|| Error::UnknownItem(item.clone(), "train catalog".to_owned()))
        })
        .collect::<Result<Vec<u32>>>()?;
    list_category_distribution(&items, segmentation)
}
