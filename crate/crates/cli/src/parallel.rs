//! Worker pool setup and order-preserving parallel maps.

use rayon::prelude::*;
use rayon::ThreadPool;

use crate::error::{invalid, CliResult};

pub const THREADS_ENV: &str = "ROUGHPATH_THREADS";

/// `--threads`, else `ROUGHPATH_THREADS`, else rayon's default.
pub fn pool(threads: Option<usize>) -> CliResult<ThreadPool> {
    let n = match threads {
        Some(n) => Some(n),
        None => match std::env::var(THREADS_ENV) {
            Ok(v) if !v.trim().is_empty() => Some(
                v.trim()
                    .parse::<usize>()
                    .map_err(|_| invalid(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?,
            ),
            _ => None,
        },
    };
    if n == Some(0) {
        return Err(invalid("thread count must be positive"));
    }
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = n {
        b = b.num_threads(n);
    }
    b.build().map_err(|e| invalid(format!("cannot start worker pool: {e}")))
}

/// `f(0), .., f(n-1)` computed in parallel, returned in index order. Any
/// reduction over the result is then independent of the thread count.
pub fn map_indexed<T, E, F>(pool: &ThreadPool, n: usize, f: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(usize) -> Result<T, E> + Sync + Send,
{
    pool.install(|| (0..n).into_par_iter().map(&f).collect())
}
