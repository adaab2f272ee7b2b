//! Loading, conversion, filtering, and splitting of rating data.

mod load;
mod split;
mod transform;

pub use load::{load_ratings, load_supplier_pairs, LoadedRatings, RatingsFormat};
pub use split::split_train_test;
pub use transform::{filter_min_profile, implicit_to_explicit};

pub const DEFAULT_MIN_RATINGS: usize = 20;
pub const DEFAULT_TEST_FRACTION: f64 = 0.2;
