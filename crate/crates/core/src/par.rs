//! Conditional data-parallelism.
//!
//! With the `parallel` feature (default) the helpers fan work out over the
//! rayon thread pool; without it they compile to plain sequential iteration.
//! Both versions produce results in input order, so every caller is
//! deterministic regardless of thread scheduling. Reductions that sum
//! floating-point partials must therefore go through `map_collect` and merge
//! the collected parts in order, never through an unordered parallel reduce.

#[cfg(feature = "parallel")]
pub(crate) fn map_collect<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_collect<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}
