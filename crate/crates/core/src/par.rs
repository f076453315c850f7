//! Data-parallel helpers with sequential fallbacks.
//!
//! Every helper here produces a result that is bit-identical whether the
//! `parallel` feature is on or off. Ordered maps preserve input order, and
//! chunked folds are only used with merges that are associative and
//! commutative (integer count sums), so chunk boundaries cannot change the
//! outcome.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Minimum items per chunk for folded counting; below this the split overhead
/// dominates.
#[cfg(feature = "parallel")]
const MIN_CHUNK: usize = 1024;

/// Ordered map over a slice.
#[cfg(feature = "parallel")]
pub(crate) fn map_slice<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_slice<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    items.iter().map(f).collect()
}

/// Ordered map over `0..n`, used for per-fold work.
#[cfg(feature = "parallel")]
pub(crate) fn map_indices<U, F>(n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_indices<U, F>(n: usize, f: F) -> Vec<U>
where
    F: Fn(usize) -> U,
{
    (0..n).map(f).collect()
}

/// Folds `items` chunk by chunk into accumulators and merges them. `merge`
/// must be associative and commutative for the result to be independent of
/// chunking.
#[cfg(feature = "parallel")]
pub(crate) fn fold_merge<T, A, I, F, M>(items: &[T], init: I, fold: F, merge: M) -> A
where
    T: Sync,
    A: Send,
    I: Fn() -> A + Sync + Send,
    F: Fn(&mut A, &T) + Sync + Send,
    M: Fn(A, A) -> A + Sync + Send,
{
    items
        .par_chunks(MIN_CHUNK.max(items.len() / (rayon::current_num_threads() * 4).max(1)))
        .map(|chunk| {
            let mut acc = init();
            for item in chunk {
                fold(&mut acc, item);
            }
            acc
        })
        .reduce(&init, merge)
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn fold_merge<T, A, I, F, M>(items: &[T], init: I, fold: F, _merge: M) -> A
where
    I: Fn() -> A,
    F: Fn(&mut A, &T),
    M: Fn(A, A) -> A,
{
    let mut acc = init();
    for item in items {
        fold(&mut acc, item);
    }
    acc
}
