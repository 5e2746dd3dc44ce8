//! Internal map helpers that run on rayon with the `parallel` feature and
//! fall back to plain iterators without it. Output order always matches
//! input order, so results are identical either way.

#[cfg(feature = "parallel")]
pub(crate) fn map_range<R, F>(n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_range<R, F>(n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    (0..n).map(f).collect()
}

/// Fallible variant; the first error (in input order) wins.
pub(crate) fn try_map_range<R, E, F>(n: usize, f: F) -> Result<Vec<R>, E>
where
    R: Send,
    E: Send,
    F: Fn(usize) -> Result<R, E> + Sync + Send,
{
    map_range(n, f).into_iter().collect()
}
