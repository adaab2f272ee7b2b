use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::{RatingDataset, SplitPair};
use crate::{Error, Result};

/// FNV-1a, used to derive stable per-user RNG streams from external ids.
fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

/// Split each user's profile at random into train and test.
///
/// Per user, `round(test_fraction * |profile|)` ratings go to test, clamped
/// so train always keeps at least one. The selection is driven by a per-user
/// RNG stream derived from the seed and the external user id, so the split
/// is identical across runs and independent of row order.
pub fn split_train_test(
    dataset: &RatingDataset,
    test_fraction: f64,
    seed: u64,
) -> Result<SplitPair> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "test_fraction must be in (0, 1), got {test_fraction}"
        )));
    }
    if dataset.is_empty() {
        return Err(Error::EmptyDataset("cannot split an empty dataset".to_owned()));
    }

    let mut train_rows = Vec::new();
    let mut test_rows = Vec::new();
    let mut forced_into_train = Vec::new();

    for user in 0..dataset.n_users() as u32 {
        let profile = dataset.profile(user);
        let user_id = dataset.users().id(user);
        if profile.len() == 1 {
            forced_into_train.push(user_id.to_owned());
        }
        let wanted = (test_fraction * profile.len() as f64).round() as usize;
        let n_test = wanted.min(profile.len() - 1);

        let mut indices: Vec<usize> = (0..profile.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(fnv1a(user_id.as_bytes()) ^ splitmix64(seed));
        indices.shuffle(&mut rng);

        for (pos, &idx) in indices.iter().enumerate() {
            let (item, value) = profile[idx];
            let row = (
                user_id.to_owned(),
                dataset.items().id(item).to_owned(),
                value,
            );
            if pos < n_test {
                test_rows.push(row);
            } else {
                train_rows.push(row);
            }
        }
    }

    Ok(SplitPair {
        train: RatingDataset::from_rows(&train_rows, dataset.rating_bounds())?,
        test: RatingDataset::from_rows(&test_rows, dataset.rating_bounds())?,
        seed,
        forced_into_train,
    })
}
