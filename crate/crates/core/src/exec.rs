//! Chunked data-parallel execution with a sequential fallback.
//!
//! Work items are cut into fixed-size chunks. Each chunk is processed
//! sequentially and the per-chunk results are combined by a pairwise
//! reduction in chunk order, so floating-point sums are identical for any
//! thread count, and identical between the parallel and sequential paths.

use std::ops::Range;

/// How Monte Carlo loops are executed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

/// Shots per chunk. Fixed so that the reduction tree never depends on the pool size.
pub const CHUNK: u64 = 2048;

/// Applies `work` to consecutive chunks of `0..items` and returns the results in order.
pub fn map_chunks<T, F>(items: u64, exec: Execution, work: F) -> Vec<T>
where
    T: Send,
    F: Fn(Range<u64>) -> T + Sync + Send,
{
    let chunks = items.div_ceil(CHUNK);
    let range = move |c: u64| c * CHUNK..((c + 1) * CHUNK).min(items);
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            (0..chunks).into_par_iter().map(|c| work(range(c))).collect()
        }
        _ => (0..chunks).map(|c| work(range(c))).collect(),
    }
}

/// Combines items pairwise: ((a·b)·(c·d))·... in a fixed tree shape.
pub fn reduce_pairwise<T>(mut items: Vec<T>, merge: impl Fn(T, T) -> T) -> Option<T> {
    while items.len() > 1 {
        let mut next = Vec::with_capacity(items.len().div_ceil(2));
        let mut iter = items.into_iter();
        while let Some(a) = iter.next() {
            match iter.next() {
                Some(b) => next.push(merge(a, b)),
                None => next.push(a),
            }
        }
        items = next;
    }
    items.pop()
}

/// Runs `f` inside a pool of `threads` workers (no-op without the `parallel` feature).
pub fn with_threads<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> R {
    #[cfg(feature = "parallel")]
    {
        match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        f()
    }
}
