//! Order-preserving map over a slice, on a rayon pool when the `parallel`
//! feature is enabled and more than one job is requested.

/// Number of worker threads to use when the caller asks for "all cores".
pub fn available_jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// `items.iter().map(f).collect()`, possibly on `jobs` threads.
///
/// `jobs == 0` means one job per available core. Output order always matches
/// input order.
pub fn map_ordered<T, R, F>(items: &[T], jobs: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    let jobs = if jobs == 0 { available_jobs() } else { jobs };
    if jobs <= 1 || items.len() <= 1 {
        return items.iter().map(f).collect();
    }
    parallel_map(items, jobs, f)
}

#[cfg(feature = "parallel")]
fn parallel_map<T, R, F>(items: &[T], jobs: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    use rayon::prelude::*;

    match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(pool) => pool.install(|| items.par_iter().map(&f).collect()),
        Err(e) => {
            log::warn!("could not start a {jobs}-thread pool ({e}); running sequentially");
            items.iter().map(f).collect()
        }
    }
}

#[cfg(not(feature = "parallel"))]
fn parallel_map<T, R, F>(items: &[T], _jobs: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    items.iter().map(f).collect()
}
