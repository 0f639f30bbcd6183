//! Chunked execution over trial indices with a fixed, order-preserving
//! reduction, so parallel and sequential runs produce identical results.

/// How trials are scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    /// Chunks run on the rayon pool (sequential when the `parallel` feature
    /// is disabled).
    Parallel,
    Sequential,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

/// Trials per work unit.
pub(crate) const CHUNK: u64 = 64;

/// Applies `f` to consecutive index ranges covering `0..total` and returns
/// the results in range order.
pub(crate) fn map_chunks<T, F>(total: u64, exec: Execution, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(std::ops::Range<u64>) -> T + Sync + Send,
{
    let chunks = total.div_ceil(CHUNK);
    let range = move |c: u64| c * CHUNK..((c + 1) * CHUNK).min(total);
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            (0..chunks).into_par_iter().map(|c| f(range(c))).collect()
        }
        _ => (0..chunks).map(|c| f(range(c))).collect(),
    }
}
