//! Long-tail partitions computed from training data only: items into
//! popularity categories H/M/T, users into propensity groups, and suppliers
//! into Pareto groups.

use serde::{Deserialize, Serialize};

use crate::dataset::{RatingDataset, SupplierMap};
use crate::{Error, Result};

pub const DEFAULT_HEAD_SHARE: f64 = 0.2;
pub const DEFAULT_TAIL_SHARE: f64 = 0.2;
pub const DEFAULT_N_GROUPS: usize = 3;

/// Item popularity category.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Category {
    Head,
    Mid,
    Tail,
}

impl Category {
    pub const ALL: [Category; 3] = [Category::Head, Category::Mid, Category::Tail];

    pub fn index(self) -> usize {
        match self {
            Category::Head => 0,
            Category::Mid => 1,
            Category::Tail => 2,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Category::Head => "H",
            Category::Mid => "M",
            Category::Tail => "T",
        }
    }

    pub fn from_label(s: &str) -> Result<Self> {
        match s {
            "H" => Ok(Category::Head),
            "M" => Ok(Category::Mid),
            "T" => Ok(Category::Tail),
            other => Err(Error::InvalidConfig(format!(
                "unknown item category '{other}' (expected H, M, or T)"
            ))),
        }
    }
}

/// Per-item rating counts and the fraction of users who rated each item.
#[derive(Debug, Clone)]
pub struct ItemPopularity {
    counts: Vec<u32>,
    n_users: usize,
    total_ratings: u64,
}

impl ItemPopularity {
    pub fn count(&self, item: u32) -> u32 {
        self.counts[item as usize]
    }

    pub fn user_fraction(&self, item: u32) -> f64 {
        self.counts[item as usize] as f64 / self.n_users as f64
    }

    pub fn n_items(&self) -> usize {
        self.counts.len()
    }

    pub fn total_ratings(&self) -> u64 {
        self.total_ratings
    }

    /// Item indices sorted by count descending, ties by ascending item id.
    pub fn ranked(&self, dataset: &RatingDataset) -> Vec<u32> {
        let mut order: Vec<u32> = (0..self.counts.len() as u32).collect();
        order.sort_by(|&a, &b| {
            self.counts[b as usize]
                .cmp(&self.counts[a as usize])
                .then_with(|| dataset.items().id(a).cmp(dataset.items().id(b)))
        });
        order
    }
}

/// Count how often each item was rated in train.
pub fn compute_item_popularity(train: &RatingDataset) -> ItemPopularity {
    ItemPopularity {
        counts: train.item_counts().to_vec(),
        n_users: train.n_users().max(1),
        total_ratings: train.n_ratings() as u64,
    }
}

/// Total assignment of items to H/M/T categories, with the realized
/// rating-mass share of each category.
#[derive(Debug, Clone)]
pub struct ItemSegmentation {
    category: Vec<Category>,
    pub mass_shares: [f64; 3],
}

impl ItemSegmentation {
    pub fn category(&self, item: u32) -> Category {
        self.category[item as usize]
    }

    pub fn n_items(&self) -> usize {
        self.category.len()
    }

    pub fn items_in(&self, c: Category) -> Vec<u32> {
        (0..self.category.len() as u32)
            .filter(|&i| self.category[i as usize] == c)
            .collect()
    }

    /// Build directly from per-item categories (e.g. read back from a file).
    pub fn from_categories(category: Vec<Category>, counts: &[u32]) -> Self {
        let total: u64 = counts.iter().map(|&c| c as u64).sum();
        let mut mass = [0u64; 3];
        for (i, c) in category.iter().enumerate() {
            mass[c.index()] += counts[i] as u64;
        }
        let mass_shares = if total == 0 {
            [0.0; 3]
        } else {
            [
                mass[0] as f64 / total as f64,
                mass[1] as f64 / total as f64,
                mass[2] as f64 / total as f64,
            ]
        };
        Self {
            category,
            mass_shares,
        }
    }
}

/// Partition items by the Pareto rule: the head is the minimal most-popular
/// prefix holding at least `head_share` of the rating mass, the tail is the
/// minimal least-popular suffix of the remainder holding at least
/// `tail_share`, and the mid is whatever is left (possibly empty).
pub fn segment_items_pareto(
    train: &RatingDataset,
    popularity: &ItemPopularity,
    head_share: f64,
    tail_share: f64,
) -> Result<ItemSegmentation> {
    if !(head_share > 0.0 && tail_share > 0.0 && head_share + tail_share < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "head_share {head_share} + tail_share {tail_share} must be positive and sum below 1"
        )));
    }
    if popularity.n_items() == 0 {
        return Err(Error::EmptyDataset("no items to segment".to_owned()));
    }

    let order = popularity.ranked(train);
    let total = popularity.total_ratings() as f64;

    let mut category = vec![Category::Mid; order.len()];
    // head: walk from the most popular end
    let mut cum = 0u64;
    let mut head_end = 0usize;
    for (pos, &item) in order.iter().enumerate() {
        cum += popularity.count(item) as u64;
        category[item as usize] = Category::Head;
        head_end = pos + 1;
        if cum as f64 / total >= head_share {
            break;
        }
    }
    // tail: walk from the least popular end of the remainder
    let mut cum_tail = 0u64;
    for &item in order[head_end..].iter().rev() {
        if cum_tail as f64 / total >= tail_share {
            break;
        }
        cum_tail += popularity.count(item) as u64;
        category[item as usize] = Category::Tail;
    }

    Ok(ItemSegmentation::from_categories(
        category,
        &(0..train.n_items() as u32)
            .map(|i| popularity.count(i))
            .collect::<Vec<_>>(),
    ))
}

/// How a user's leaning towards popular items is scored when ranking users.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PropensityMeasure {
    /// Fraction of distinct profile items that are head items.
    ItemFraction,
    /// Head share of the profile's rating mass.
    RatingWeighted,
}

/// Ordered partition of users into propensity groups G1..Gk, most
/// popularity-focused first.
#[derive(Debug, Clone)]
pub struct UserGroups {
    groups: Vec<Vec<u32>>,
    propensity: Vec<f64>,
    group_of: Vec<u32>,
}

impl UserGroups {
    pub fn n_groups(&self) -> usize {
        self.groups.len()
    }

    pub fn members(&self, group: usize) -> &[u32] {
        &self.groups[group]
    }

    pub fn propensity(&self, user: u32) -> f64 {
        self.propensity[user as usize]
    }

    /// 0-based group index for a user.
    pub fn group_of(&self, user: u32) -> u32 {
        self.group_of[user as usize]
    }

    /// Build from explicit 0-based assignments (e.g. read back from a file).
    pub fn from_assignments(assignments: Vec<u32>, propensity: Vec<f64>, n_groups: usize) -> Result<Self> {
        let mut groups = vec![Vec::new(); n_groups];
        for (user, &g) in assignments.iter().enumerate() {
            if g as usize >= n_groups {
                return Err(Error::InvalidConfig(format!(
                    "group index {g} out of range for {n_groups} groups"
                )));
            }
            groups[g as usize].push(user as u32);
        }
        if let Some(empty) = groups.iter().position(|g| g.is_empty()) {
            return Err(Error::EmptyGroup { group: empty + 1 });
        }
        Ok(Self {
            groups,
            propensity,
            group_of: assignments,
        })
    }
}

/// Rank users by their propensity towards head items (ties broken by
/// ascending user id) and cut the ranking into `n_groups` contiguous bins
/// whose sizes differ by at most one, earlier bins taking the extra.
pub fn group_users_by_propensity(
    train: &RatingDataset,
    segmentation: &ItemSegmentation,
    n_groups: usize,
    measure: PropensityMeasure,
) -> Result<UserGroups> {
    let n_users = train.n_users();
    if n_groups == 0 || n_groups > n_users {
        return Err(Error::NotEnoughMembers {
            requested: n_groups,
            available: n_users,
        });
    }

    let propensity: Vec<f64> = (0..n_users as u32)
        .map(|u| {
            let profile = train.profile(u);
            match measure {
                PropensityMeasure::ItemFraction => {
                    let head = profile
                        .iter()
                        .filter(|&&(i, _)| segmentation.category(i) == Category::Head)
                        .count();
                    head as f64 / profile.len() as f64
                }
                PropensityMeasure::RatingWeighted => {
                    let total: f64 = profile.iter().map(|&(_, v)| v).sum();
                    let head: f64 = profile
                        .iter()
                        .filter(|&&(i, _)| segmentation.category(i) == Category::Head)
                        .map(|&(_, v)| v)
                        .sum();
                    if total > 0.0 {
                        head / total
                    } else {
                        0.0
                    }
                }
            }
        })
        .collect();

    let mut order: Vec<u32> = (0..n_users as u32).collect();
    order.sort_by(|&a, &b| {
        propensity[b as usize]
            .partial_cmp(&propensity[a as usize])
            .unwrap()
            .then_with(|| train.users().id(a).cmp(train.users().id(b)))
    });

    let base = n_users / n_groups;
    let extra = n_users % n_groups;
    let mut groups = Vec::with_capacity(n_groups);
    let mut group_of = vec![0u32; n_users];
    let mut cursor = 0usize;
    for g in 0..n_groups {
        let size = base + usize::from(g < extra);
        let members: Vec<u32> = order[cursor..cursor + size].to_vec();
        for &u in &members {
            group_of[u as usize] = g as u32;
        }
        groups.push(members);
        cursor += size;
    }

    Ok(UserGroups {
        groups,
        propensity,
        group_of,
    })
}

/// Ordered partition of suppliers into S1/S2/S3 by rating mass.
#[derive(Debug, Clone)]
pub struct SupplierGroups {
    groups: Vec<Vec<u32>>,
    mass: Vec<u64>,
    total_mass: u64,
    group_of: Vec<Option<u32>>,
    pub warning: Option<String>,
}

impl SupplierGroups {
    pub fn n_groups(&self) -> usize {
        self.groups.len()
    }

    pub fn members(&self, group: usize) -> &[u32] {
        &self.groups[group]
    }

    /// 0-based group of a supplier; `None` if it has no train mass.
    pub fn group_of(&self, supplier: u32) -> Option<u32> {
        self.group_of[supplier as usize]
    }

    pub fn mass(&self, supplier: u32) -> u64 {
        self.mass[supplier as usize]
    }

    pub fn mass_share(&self, supplier: u32) -> f64 {
        if self.total_mass == 0 {
            0.0
        } else {
            self.mass[supplier as usize] as f64 / self.total_mass as f64
        }
    }

    pub fn group_mass_share(&self, group: usize) -> f64 {
        if self.total_mass == 0 {
            return 0.0;
        }
        let sum: u64 = self.groups[group].iter().map(|&s| self.mass[s as usize]).sum();
        sum as f64 / self.total_mass as f64
    }

    /// Build from explicit assignments (e.g. read back from a file).
    pub fn from_assignments(assignments: Vec<Option<u32>>, mass: Vec<u64>, n_groups: usize) -> Self {
        let mut groups = vec![Vec::new(); n_groups];
        for (s, &g) in assignments.iter().enumerate() {
            if let Some(g) = g {
                groups[g as usize].push(s as u32);
            }
        }
        let total_mass = mass.iter().sum();
        Self {
            groups,
            mass,
            total_mass,
            group_of: assignments,
            warning: None,
        }
    }
}

/// Group suppliers by the Pareto rule over their train rating mass: S1 is
/// the minimal most-popular prefix holding at least `head_share` of mass,
/// S3 the minimal suffix of the remainder holding at least `tail_share`,
/// S2 the rest. Fewer than three suppliers yield empty groups and a warning.
pub fn group_suppliers_pareto(
    train: &RatingDataset,
    supplier_map: &SupplierMap,
    head_share: f64,
    tail_share: f64,
) -> Result<SupplierGroups> {
    if !(head_share > 0.0 && tail_share > 0.0 && head_share + tail_share < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "supplier shares ({head_share}, {tail_share}) must be positive and sum below 1"
        )));
    }

    let n_suppliers = supplier_map.n_suppliers();
    let mut mass = vec![0u64; n_suppliers];
    for r in train.ratings() {
        mass[supplier_map.supplier_of(r.item) as usize] += 1;
    }
    let total_mass: u64 = mass.iter().sum();

    let mut present: Vec<u32> = (0..n_suppliers as u32).filter(|&s| mass[s as usize] > 0).collect();
    present.sort_by(|&a, &b| {
        mass[b as usize].cmp(&mass[a as usize]).then_with(|| {
            supplier_map
                .suppliers()
                .id(a)
                .cmp(supplier_map.suppliers().id(b))
        })
    });

    let mut group_of: Vec<Option<u32>> = vec![None; n_suppliers];
    let total = total_mass as f64;
    let mut cum = 0u64;
    let mut head_end = 0usize;
    for (pos, &s) in present.iter().enumerate() {
        cum += mass[s as usize];
        group_of[s as usize] = Some(0);
        head_end = pos + 1;
        if cum as f64 / total >= head_share {
            break;
        }
    }
    let mut cum_tail = 0u64;
    for &s in present[head_end..].iter().rev() {
        if cum_tail as f64 / total >= tail_share {
            break;
        }
        cum_tail += mass[s as usize];
        group_of[s as usize] = Some(2);
    }
    for &s in &present {
        if group_of[s as usize].is_none() {
            group_of[s as usize] = Some(1);
        }
    }

    let mut groups = vec![Vec::new(), Vec::new(), Vec::new()];
    for &s in &present {
        groups[group_of[s as usize].unwrap() as usize].push(s);
    }

    let warning = if present.len() < 3 {
        Some(format!(
            "only {} supplier(s) with train ratings; partition is degenerate",
            present.len()
        ))
    } else {
        None
    };

    Ok(SupplierGroups {
        groups,
        mass,
        total_mass,
        group_of,
        warning,
    })
}

/// The long-tail curve: `(rank, user_fraction)` with items ranked from the
/// most popular down.
pub fn longtail_series(train: &RatingDataset, popularity: &ItemPopularity) -> Vec<(usize, f64)> {
    popularity
        .ranked(train)
        .iter()
        .enumerate()
        .map(|(pos, &item)| (pos + 1, popularity.user_fraction(item)))
        .collect()
}
