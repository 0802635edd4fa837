//! Thread-count aware map helpers with a sequential fallback.
//!
//! `threads == 1` always runs on the calling thread. `threads == 0` uses the global
//! rayon pool, any other value a dedicated pool of that size. Without the `parallel`
//! feature everything is sequential.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Maps `f` over `items`, preserving input order in the output.
pub(crate) fn map_ordered<T, R, F>(items: &[T], threads: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(usize, &T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if threads != 1 {
            let job = || {
                items
                    .par_iter()
                    .enumerate()
                    .map(|(i, item)| f(i, item))
                    .collect()
            };
            return install(threads, job);
        }
    }
    let _ = threads;
    items
        .iter()
        .enumerate()
        .map(|(i, item)| f(i, item))
        .collect()
}

/// Runs `job` inside a pool with the requested number of workers.
#[cfg(feature = "parallel")]
pub(crate) fn install<R: Send>(threads: usize, job: impl FnOnce() -> R + Send) -> R {
    match build_pool(threads) {
        Some(pool) => pool.install(job),
        None => job(),
    }
}

/// Dedicated pool for `threads > 0`; `None` means "use the global pool".
#[cfg(feature = "parallel")]
pub(crate) fn build_pool(threads: usize) -> Option<rayon::ThreadPool> {
    if threads == 0 {
        return None;
    }
    match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(pool) => Some(pool),
        Err(err) => {
            log::warn!("could not build a {threads}-thread pool ({err}); using the global pool");
            None
        }
    }
}

/// Whether a request for `threads` workers actually runs concurrently.
#[cfg(feature = "parallel")]
pub(crate) fn is_parallel(threads: usize) -> bool {
    threads != 1
}
