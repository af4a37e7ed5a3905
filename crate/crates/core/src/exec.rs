//! Replicate-level parallelism.
//!
//! Replicates are split into fixed-size batches; each batch runs on one
//! worker and the per-batch results come back in batch order. Results are
//! therefore identical whether batches run on rayon or sequentially, and
//! independent of the thread count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Replicates per batch.
pub const BATCH: usize = 1024;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Execution {
    /// rayon when the `parallel` feature is enabled, sequential otherwise.
    #[default]
    Parallel,
    Sequential,
}

impl Execution {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// Runs `f(start..end)` on consecutive batches covering `0..replicates`,
/// returning per-batch results in order.
pub fn map_batches<T, F>(exec: Execution, replicates: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(std::ops::Range<usize>) -> T + Sync + Send,
{
    let batches = replicates.div_ceil(BATCH);
    let range = move |b: usize| b * BATCH..((b + 1) * BATCH).min(replicates);
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return (0..batches).into_par_iter().map(|b| f(range(b))).collect();
    }
    let _ = exec;
    (0..batches).map(|b| f(range(b))).collect()
}

/// Per-replicate values in replicate order.
pub fn map_replicates<T, F>(exec: Execution, replicates: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    map_batches(exec, replicates, |r| r.map(&f).collect::<Vec<T>>())
        .into_iter()
        .flatten()
        .collect()
}
