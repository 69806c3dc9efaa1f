//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature (default) these run on the rayon pool; without
//! it, or when [`Execution::Sequential`] is requested, they run on the calling
//! thread. Reductions are always performed in a fixed order over fixed-size
//! chunks so results are bit-identical regardless of thread count.

use serde::{Deserialize, Serialize};

/// Chunk length used for order-stable parallel reductions.
pub const REDUCE_CHUNK: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// Whether work will actually be spread over threads.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// `(0..n).map(f).collect()`, possibly in parallel. Output order is index order.
pub fn map_indexed<T, F>(exec: Execution, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..n).map(f).collect()
}

/// Map over a slice, preserving order.
pub fn map_slice<A, T, F>(exec: Execution, items: &[A], f: F) -> Vec<T>
where
    A: Sync,
    T: Send,
    F: Fn(&A) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return items.par_iter().map(f).collect();
    }
    let _ = exec;
    items.iter().map(f).collect()
}

/// Sum `f(x)` over `items` with a deterministic chunked reduction.
pub fn chunked_sum<A, F>(exec: Execution, items: &[A], f: F) -> f64
where
    A: Sync,
    F: Fn(&A) -> f64 + Sync + Send,
{
    let partials = map_chunks(exec, items, |chunk| chunk.iter().map(&f).sum::<f64>());
    partials.into_iter().sum()
}

/// Apply `f` to consecutive [`REDUCE_CHUNK`]-sized chunks; results in chunk order.
pub fn map_chunks<A, T, F>(exec: Execution, items: &[A], f: F) -> Vec<T>
where
    A: Sync,
    T: Send,
    F: Fn(&[A]) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return items.par_chunks(REDUCE_CHUNK).map(f).collect();
    }
    let _ = exec;
    items.chunks(REDUCE_CHUNK).map(f).collect()
}
