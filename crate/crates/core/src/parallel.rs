/// Maps `f` over `items`, on up to `jobs` threads when the `parallel`
/// feature is enabled. Output order always matches input order.
pub(crate) fn map<T, R, F>(items: Vec<T>, jobs: usize, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if jobs > 1 && items.len() > 1 {
        use rayon::prelude::*;
        if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
            return pool.install(|| items.into_par_iter().map(&f).collect());
        }
    }
    let _ = jobs;
    items.into_iter().map(f).collect()
}
