//! Execution strategy for the data-parallel loops.
//!
//! Every parallel path splits work into fixed-size chunks whose partial
//! results are combined in index order, so results are bitwise identical
//! whichever strategy runs them and however many threads rayon uses.
//! Without the `parallel` feature every request falls back to sequential.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Elements per chunk for chunked reductions and chunked sampling.
pub const CHUNK: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Execution {
    Sequential,
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

impl Execution {
    /// Whether this strategy actually runs on the rayon pool in this build.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }

    /// `(0..n).map(f)` collected in index order.
    pub fn map_indices<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            return (0..n).into_par_iter().map(f).collect();
        }
        (0..n).map(f).collect()
    }

    /// Maps each item of a slice, preserving order.
    pub fn map_slice<S, T, F>(self, items: &[S], f: F) -> Vec<T>
    where
        S: Sync,
        T: Send,
        F: Fn(&S) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            return items.par_iter().map(f).collect();
        }
        items.iter().map(f).collect()
    }

    /// Applies `f` to consecutive `CHUNK`-sized pieces of `data` and returns
    /// the per-chunk results in order.
    pub fn map_chunks<S, T, F>(self, data: &[S], f: F) -> Vec<T>
    where
        S: Sync,
        T: Send,
        F: Fn(&[S]) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() && data.len() > CHUNK {
            return data.par_chunks(CHUNK).map(f).collect();
        }
        data.chunks(CHUNK).map(f).collect()
    }

    /// Fills `out` chunk by chunk; `f` receives the chunk index and the chunk.
    pub fn fill_chunks<T, F>(self, out: &mut [T], f: F)
    where
        T: Send,
        F: Fn(usize, &mut [T]) + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() && out.len() > CHUNK {
            out.par_chunks_mut(CHUNK)
                .enumerate()
                .for_each(|(i, c)| f(i, c));
            return;
        }
        out.chunks_mut(CHUNK).enumerate().for_each(|(i, c)| f(i, c));
    }
}
