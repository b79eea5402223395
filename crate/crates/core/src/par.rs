//! Data-parallel helpers. With the `parallel` feature, work is fanned out on
//! the rayon pool; without it (or with [`Exec::Sequential`]) the same chunked
//! code runs on the calling thread. Results are combined in chunk order, so
//! the output never depends on the worker count.

/// Items handled by one task. Fixed so that reductions group the same items
/// regardless of how many workers exist.
pub const CHUNK: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Exec {
    Sequential,
    #[default]
    Parallel,
}

impl Exec {
    /// Whether this mode actually runs on the rayon pool in this build.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }
}

/// Map `f` over `items` in fixed-size chunks, returning one result per chunk
/// in chunk order.
pub fn map_chunks<T, R, F>(exec: Exec, items: &[T], chunk: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&[T]) -> R + Sync + Send,
{
    let chunk = chunk.max(1);
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return items.par_chunks(chunk).map(f).collect();
    }
    let _ = exec;
    items.chunks(chunk).map(f).collect()
}

/// Map `f` over each item, preserving order.
pub fn map<T, R, F>(exec: Exec, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return items.par_iter().map(f).collect();
    }
    let _ = exec;
    items.iter().map(f).collect()
}

/// Map over `0..n`, preserving order.
pub fn map_range<R, F>(exec: Exec, n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..n).map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chunk_results_are_ordered() {
        let v: Vec<u32> = (0..100).collect();
        for exec in [Exec::Sequential, Exec::Parallel] {
            let sums = map_chunks(exec, &v, 16, |c| c.iter().sum::<u32>());
            assert_eq!(sums.len(), 7);
            assert_eq!(sums[0], (0..16).sum::<u32>());
            assert_eq!(sums.iter().sum::<u32>(), 4950);
            assert_eq!(map(exec, &v, |x| x * 2)[99], 198);
            assert_eq!(map_range(exec, 5, |i| i), vec![0, 1, 2, 3, 4]);
        }
    }
}
