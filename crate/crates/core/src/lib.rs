//! Recommender training and multi-sided exposure-bias auditing.
//!
//! The crate trains classic collaborative-filtering models (biased matrix
//! factorization, user/item kNN, most-popular) on long-tailed rating data
//! and measures who the resulting recommendations actually serve:
//!
//! * **UPD** — users' popularity-propensity deviation: per user-group mean
//!   Jensen–Shannon divergence between the popularity-category distribution
//!   of a user's profile and of their recommendation list.
//! * **SPD** — supplier popularity deviation: mean absolute gap between each
//!   supplier group's share of recommendation slots and its share of the
//!   rating data (`1 - SPD` is proportional supplier fairness).
//!
//! plus precision@N, catalog coverage, and the tabular series behind the
//! usual long-tail / amplification plots.
//!
//! The pipeline is file-mediated: every stage (`ingest`, `segment`, `train`,
//! `recommend`, `evaluate`) reads and writes documented delimited-text or
//! JSON artifacts, so external recommenders can be audited by dropping their
//! recommendation lists into the same flow. [`harness::run_experiment`] ties
//! the stages together; [`synth`] generates Zipf-shaped datasets for
//! desk-scale experiments.
//!
//! Per-user inner loops (similarity rows, list generation, per-user metric
//! terms) run on rayon when the `parallel` feature (default) is enabled;
//! sequential twins (`*_seq`) are kept as the reference path and outputs are
//! bit-identical either way.

// `!(a < b)` guards intentionally treat NaN as invalid; `a >= b` would not
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dataset;
pub mod error;
pub mod harness;
pub mod ids;
pub mod ingest;
pub mod metrics;
pub mod recsys;
pub mod segment;
pub mod synth;

mod io;
mod par;

pub use error::Error;

/// Convenience alias used across the crate.
pub type Result<T> = std::result::Result<T, Error>;
