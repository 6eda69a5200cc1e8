//! Index-ordered parallel maps. With the `parallel` feature disabled every
//! function runs sequentially; results are identical either way.

/// `(0..n).map(f)`, possibly in parallel on the global pool.
pub fn map<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Like [`map`], on a dedicated pool of `workers` threads. `workers <= 1`
/// runs on the calling thread.
pub fn map_with_workers<T, F>(n: usize, workers: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if workers > 1 {
        use rayon::prelude::*;
        if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
            return pool.install(|| (0..n).into_par_iter().map(&f).collect());
        }
    }
    let _ = workers;
    (0..n).map(f).collect()
}

/// Worker count used when the caller does not choose one.
pub fn default_workers() -> usize {
    #[cfg(feature = "parallel")]
    {
        rayon::current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let seq: Vec<usize> = (0..50).map(|i| i * i).collect();
        assert_eq!(map(50, |i| i * i), seq);
        assert_eq!(map_with_workers(50, 1, |i| i * i), seq);
        assert_eq!(map_with_workers(50, 3, |i| i * i), seq);
    }
}
