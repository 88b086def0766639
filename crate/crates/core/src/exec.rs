//! Data-parallel map with a sequential fallback.
//!
//! Heavy campaigns (seed sweeps, verification batches, per-user training)
//! fan out over rayon when the `parallel` feature is enabled and the caller
//! passes `parallel = true`. The sequential path produces the same output in
//! the same order, so results never depend on the execution mode.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Maps `f` over `0..n`, preserving index order in the output.
pub fn map_indexed<T, F>(n: usize, parallel: bool, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    #[cfg(feature = "parallel")]
    {
        if parallel {
            return (0..n).into_par_iter().map(&f).collect();
        }
    }
    let _ = parallel;
    (0..n).map(f).collect()
}
