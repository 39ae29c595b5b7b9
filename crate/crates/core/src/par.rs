//! Data-parallel helpers. With the `parallel` feature these dispatch to
//! rayon; without it every call runs on the current thread.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Execution strategy for the data-parallel loops (garbling layers, OT
/// extension rows, trial sweeps).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    Parallel,
}

impl Default for Exec {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Exec::Parallel
        } else {
            Exec::Sequential
        }
    }
}

impl Exec {
    /// True only when parallel execution is requested and compiled in.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }
}

pub fn current_num_threads() -> usize {
    #[cfg(feature = "parallel")]
    {
        rayon::current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        1
    }
}

/// `items.iter().map(f).collect()`, in parallel when `exec` allows.
pub fn map_slice<T, R, F>(exec: Exec, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return items.par_iter().map(f).collect();
    }
    let _ = exec;
    items.iter().map(f).collect()
}

/// `(0..len).map(f).collect()`, in parallel when `exec` allows.
pub fn map_range<R, F>(exec: Exec, len: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return (0..len).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..len).map(f).collect()
}

/// Applies `f` to disjoint mutable chunks of `v`; the second argument is the
/// chunk's starting index.
pub fn for_each_chunk_mut<T, F>(exec: Exec, v: &mut [T], chunk: usize, f: F)
where
    T: Send,
    F: Fn(&mut [T], usize) + Sync + Send,
{
    let chunk = chunk.max(1);
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        v.par_chunks_mut(chunk).enumerate().for_each(|(i, c)| f(c, i * chunk));
        return;
    }
    let _ = exec;
    for (i, c) in v.chunks_mut(chunk).enumerate() {
        f(c, i * chunk);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_strategies_agree() {
        let items: Vec<u64> = (0..10_000).collect();
        let a = map_slice(Exec::Sequential, &items, |x| x * x);
        let b = map_slice(Exec::Parallel, &items, |x| x * x);
        assert_eq!(a, b);
        assert_eq!(map_range(Exec::Parallel, 5, |i| i + 1), vec![1, 2, 3, 4, 5]);

        let mut v = vec![0usize; 1000];
        for_each_chunk_mut(Exec::Parallel, &mut v, 64, |c, start| {
            for (k, x) in c.iter_mut().enumerate() {
                *x = start + k;
            }
        });
        assert!(v.iter().enumerate().all(|(i, &x)| i == x));
    }
}
