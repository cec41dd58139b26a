use rayon::prelude::*;

/// Maps `f` over `items` on at most `jobs` worker threads, keeping input
/// order. `jobs <= 1` runs inline on the calling thread.
pub fn map_ordered<T, R, F>(items: &[T], jobs: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    if jobs <= 1 || items.len() < 2 {
        return items.iter().map(f).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(pool) => pool.install(|| items.par_iter().map(&f).collect()),
        Err(e) => {
            log::warn!("could not start {jobs} workers ({e}); scoring on one thread");
            items.iter().map(f).collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_kept() {
        let items: Vec<u64> = (0..1000).collect();
        let serial = map_ordered(&items, 1, |x| x * x);
        let parallel = map_ordered(&items, 4, |x| x * x);
        assert_eq!(serial, parallel);
    }
}
