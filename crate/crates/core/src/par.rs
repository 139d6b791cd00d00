//! Data-parallel mapping with a sequential fallback.
//!
//! With the `parallel` feature, [`Execution::Parallel`] distributes work over
//! the rayon pool; without it every call runs on the current thread. Results
//! are always returned in index order, so output does not depend on the
//! execution mode.

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// Whether `Parallel` actually uses more than one thread in this build.
    pub const fn parallel_available() -> bool {
        cfg!(feature = "parallel")
    }
}

/// `(0..n).map(f)` collected in order.
pub fn map_indices<T, F>(n: usize, exec: Execution, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            (0..n).into_par_iter().map(f).collect()
        }
        _ => (0..n).map(f).collect(),
    }
}

/// Runs `op` inside a pool of `workers` threads; nested [`map_indices`] calls
/// with [`Execution::Parallel`] use that pool.
pub fn with_workers<R, F>(workers: usize, op: F) -> Result<R>
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    if workers == 0 {
        return Err(Error::precondition("worker count must be at least 1"));
    }
    #[cfg(feature = "parallel")]
    {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::precondition(format!("cannot start worker pool: {e}")))?;
        Ok(pool.install(op))
    }
    #[cfg(not(feature = "parallel"))]
    {
        Ok(op())
    }
}
