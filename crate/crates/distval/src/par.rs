//! Order-preserving batch map. With the `parallel` feature (default) the
//! closure runs on the rayon pool; without it the same call runs
//! sequentially, so results are identical either way.

#[cfg(feature = "parallel")]
pub fn map_ordered<U, F>(count: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    use rayon::prelude::*;
    (0..count).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_ordered<U, F>(count: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    (0..count).map(f).collect()
}

/// Caps the worker count for all subsequent parallel maps. Returns false if
/// the pool was already started (rayon's global pool is build-once) or the
/// build is sequential.
pub fn configure_threads(n: usize) -> bool {
    #[cfg(feature = "parallel")]
    {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_ok()
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = n;
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preserves_index_order() {
        let out = map_ordered(257, |i| 3 * i);
        assert_eq!(out, (0..257).map(|i| 3 * i).collect::<Vec<_>>());
    }
}
