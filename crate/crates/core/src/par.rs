//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature (default) these are thin wrappers over rayon;
//! without it they degrade to plain iterator code with identical results.
//! Result order always matches input order.

#[cfg(feature = "parallel")]
pub fn map<I, R, F>(items: Vec<I>, f: F) -> Vec<R>
where
    I: Send,
    R: Send,
    F: Fn(I) -> R + Sync + Send,
{
    use rayon::prelude::*;
    items.into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map<I, R, F>(items: Vec<I>, f: F) -> Vec<R>
where
    F: Fn(I) -> R,
{
    items.into_iter().map(f).collect()
}

/// Always-sequential variant, kept for benchmark comparisons.
pub fn map_seq<I, R, F>(items: Vec<I>, f: F) -> Vec<R>
where
    F: Fn(I) -> R,
{
    items.into_iter().map(f).collect()
}

/// Runs `f` inside a pool of `jobs` worker threads, so any nested [`map`]
/// call is confined to that pool; `jobs = 1` makes the whole computation
/// effectively sequential. Without the `parallel` feature `f` runs directly
/// on the caller thread.
#[cfg(feature = "parallel")]
pub fn with_jobs<R: Send>(jobs: usize, f: impl FnOnce() -> R + Send) -> R {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .expect("thread pool")
        .install(f)
}

#[cfg(not(feature = "parallel"))]
pub fn with_jobs<R: Send>(_jobs: usize, f: impl FnOnce() -> R + Send) -> R {
    f()
}
