//! Deterministic Zipf-shaped synthetic rating data for desk-scale runs.
//!
//! Item popularity follows a Zipf law over item ranks. Each user draws their
//! profile from a mixture: with probability equal to their affinity the next
//! item comes from the popularity distribution, otherwise uniformly from the
//! catalog (the niche component). Supplier ownership is itself Zipf-assigned
//! so supplier mass ends up long-tailed too.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::RatingDataset;
use crate::{par, Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n_users: usize,
    pub n_items: usize,
    pub n_suppliers: usize,
    #[serde(default = "default_exponent")]
    pub zipf_exponent: f64,
    /// Fixed popularity affinity for every user; when absent, affinities are
    /// spread evenly over [0, 1] so the population mixes mainstream and
    /// niche tastes.
    #[serde(default)]
    pub affinity: Option<f64>,
    #[serde(default = "default_ratings_min")]
    pub ratings_per_user_min: usize,
    #[serde(default = "default_ratings_max")]
    pub ratings_per_user_max: usize,
    /// Standard deviation of the Gaussian rating noise.
    #[serde(default = "default_noise")]
    pub rating_noise: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_exponent() -> f64 {
    1.0
}
fn default_ratings_min() -> usize {
    20
}
fn default_ratings_max() -> usize {
    60
}
fn default_noise() -> f64 {
    0.4
}
fn default_seed() -> u64 {
    42
}

impl SyntheticSpec {
    pub fn new(n_users: usize, n_items: usize, n_suppliers: usize) -> Self {
        Self {
            n_users,
            n_items,
            n_suppliers,
            zipf_exponent: default_exponent(),
            affinity: None,
            ratings_per_user_min: default_ratings_min(),
            ratings_per_user_max: default_ratings_max(),
            rating_noise: default_noise(),
            seed: default_seed(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_users == 0 || self.n_items == 0 || self.n_suppliers == 0 {
            return Err(Error::InvalidConfig(
                "synthetic sizes must all be positive".into(),
            ));
        }
        if !(self.zipf_exponent > 0.0) {
            return Err(Error::InvalidConfig("zipf exponent must be > 0".into()));
        }
        if self.ratings_per_user_min == 0
            || self.ratings_per_user_min > self.ratings_per_user_max
            || self.ratings_per_user_max > self.n_items
        {
            return Err(Error::InvalidConfig(format!(
                "ratings per user [{}, {}] must fit inside the catalog of {}",
                self.ratings_per_user_min, self.ratings_per_user_max, self.n_items
            )));
        }
        if let Some(a) = self.affinity {
            if !(0.0..=1.0).contains(&a) {
                return Err(Error::InvalidConfig("affinity must be in [0, 1]".into()));
            }
        }
        if self.rating_noise < 0.0 {
            return Err(Error::InvalidConfig("rating noise must be >= 0".into()));
        }
        Ok(())
    }
}

/// Cumulative Zipf weights over `n` ranks; sample by inverting a uniform.
struct ZipfSampler {
    cumulative: Vec<f64>,
}

impl ZipfSampler {
    fn new(n: usize, exponent: f64) -> Self {
        let mut cumulative = Vec::with_capacity(n);
        let mut acc = 0.0;
        for rank in 0..n {
            acc += 1.0 / ((rank + 1) as f64).powf(exponent);
            cumulative.push(acc);
        }
        let total = acc;
        for c in &mut cumulative {
            *c /= total;
        }
        Self { cumulative }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> usize {
        let u: f64 = rng.gen();
        self.cumulative.partition_point(|&c| c < u)
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    // Box–Muller
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Generate a rating dataset and a total item → supplier mapping.
///
/// Fully deterministic: users draw from per-user RNG streams derived from
/// the seed, so the output is identical across runs and thread counts.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<(RatingDataset, Vec<(String, String)>)> {
    spec.validate()?;

    let uw = digits(spec.n_users);
    let iw = digits(spec.n_items);
    let sw = digits(spec.n_suppliers);
    let item_id = |rank: usize| format!("i{rank:0iw$}");

    let items = ZipfSampler::new(spec.n_items, spec.zipf_exponent);
    let suppliers = ZipfSampler::new(spec.n_suppliers, 1.0);

    // supplier ownership and per-item quality, one stream per item
    let mut supplier_pairs = Vec::with_capacity(spec.n_items);
    let mut quality = Vec::with_capacity(spec.n_items);
    for rank in 0..spec.n_items {
        let mut rng = ChaCha8Rng::seed_from_u64(
            splitmix64(spec.seed).wrapping_add(splitmix64(0x17e6_0000 ^ rank as u64)),
        );
        let owner = suppliers.sample(&mut rng);
        supplier_pairs.push((item_id(rank), format!("s{owner:0sw$}")));
        quality.push(rng.gen_range(-0.5..0.5));
    }

    let per_user = |u: usize| -> Vec<(String, String, f64)> {
        let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(spec.seed).wrapping_add(
            splitmix64(0xabcd_0000 ^ u as u64),
        ));
        let affinity = spec.affinity.unwrap_or(if spec.n_users > 1 {
            u as f64 / (spec.n_users - 1) as f64
        } else {
            0.5
        });
        let size = rng.gen_range(spec.ratings_per_user_min..=spec.ratings_per_user_max);
        let mean = rng.gen_range(3.0..4.0);

        let mut chosen = std::collections::HashSet::with_capacity(size);
        let mut picks = Vec::with_capacity(size);
        let mut attempts = 0usize;
        while picks.len() < size && attempts < size * 200 {
            attempts += 1;
            let rank = if rng.gen::<f64>() < affinity {
                items.sample(&mut rng)
            } else {
                rng.gen_range(0..spec.n_items)
            };
            if chosen.insert(rank) {
                picks.push(rank);
            }
        }
        // deterministic fill for pathological rejection runs
        let mut next = 0usize;
        while picks.len() < size {
            if chosen.insert(next) {
                picks.push(next);
            }
            next += 1;
        }

        let user = format!("u{u:0uw$}");
        picks
            .into_iter()
            .map(|rank| {
                let value = (mean + quality[rank] + spec.rating_noise * standard_normal(&mut rng))
                    .clamp(1.0, 5.0);
                (user.clone(), item_id(rank), value)
            })
            .collect()
    };

    let rows: Vec<(String, String, f64)> = par::map_indexed(spec.n_users, per_user)
        .into_iter()
        .flatten()
        .collect();

    let dataset = RatingDataset::from_rows(&rows, (1.0, 5.0))?;
    Ok((dataset, supplier_pairs))
}

fn digits(n: usize) -> usize {
    n.max(1).to_string().len()
}
