//! Execution helpers for the data-parallel inner loops.
//!
//! With the `parallel` feature (on by default) the hot per-user and per-row
//! loops run on rayon; without it they fall back to plain iterators. Output
//! order is the sequential order in both cases, so results are identical and
//! independent of thread scheduling.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map `f` over `0..n`, collecting results in index order.
#[cfg(feature = "parallel")]
pub(crate) fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    map_indexed_seq(n, f)
}

/// Always-sequential twin of [`map_indexed`]; the reference execution path.
pub(crate) fn map_indexed_seq<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}
