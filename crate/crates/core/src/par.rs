//! Order-preserving map helpers. With the `parallel` feature the work is
//! spread over the current rayon pool; without it everything runs in order
//! on the calling thread. Results are identical either way.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// `f` applied to `0..n`, collected in index order.
pub fn map_range<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// `f` applied to each item, collected in input order.
pub fn map_slice<'a, S, T, F>(items: &'a [S], f: F) -> Vec<T>
where
    S: Sync,
    T: Send,
    F: Fn(&'a S) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Always sequential; the reference path the benches compare against.
pub fn map_range_serial<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}

/// Runs `f` with at most `workers` threads. `workers <= 1` runs on the
/// calling thread with parallel helpers forced into a one-thread pool.
pub fn with_workers<T, F>(workers: usize, f: F) -> crate::Result<T>
where
    T: Send,
    F: FnOnce() -> T + Send,
{
    #[cfg(feature = "parallel")]
    {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers.max(1))
            .build()
            .map_err(|e| crate::Error::Numeric(format!("thread pool: {e}")))?;
        Ok(pool.install(f))
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = workers;
        Ok(f())
    }
}
