//! Execution policy for data-parallel loops.
//!
//! Reductions split the index range into fixed-size chunks and combine the
//! partial results in chunk order, so a parallel run is bitwise identical to
//! a sequential one. Without the `parallel` feature, [`Exec::Parallel`]
//! silently runs sequentially.

use std::ops::Range;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Chunk length for point-wise reductions.
pub const CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Exec {
    Sequential,
    #[default]
    Parallel,
}

impl Exec {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }

    /// `f` over `0..len`, results in index order.
    pub fn map_indices<R, F>(self, len: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            return (0..len).into_par_iter().map(f).collect();
        }
        (0..len).map(f).collect()
    }

    /// `f` over the items of a slice, results in order.
    pub fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            return items.par_iter().map(f).collect();
        }
        items.iter().map(f).collect()
    }

    /// Chunked reduction over `0..len`. `fold` produces one partial per chunk;
    /// partials are merged left to right with `merge`.
    pub fn reduce_chunks<A, F, M>(self, len: usize, fold: F, merge: M) -> Option<A>
    where
        A: Send,
        F: Fn(Range<usize>) -> A + Sync + Send,
        M: Fn(A, A) -> A,
    {
        let chunks = len.div_ceil(CHUNK);
        let partials = self.map_indices(chunks, |c| {
            let start = c * CHUNK;
            fold(start..(start + CHUNK).min(len))
        });
        partials.into_iter().reduce(merge)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chunked_sum_matches_across_modes() {
        let xs: Vec<f64> = (0..20_000).map(|i| ((i * 7919) % 1000) as f64 * 1e-3 + 0.1).collect();
        let sum = |e: Exec| {
            e.reduce_chunks(xs.len(), |r| xs[r].iter().sum::<f64>(), |a, b| a + b)
                .unwrap()
        };
        assert_eq!(
            sum(Exec::Sequential).to_bits(),
            sum(Exec::Parallel).to_bits()
        );
    }

    #[test]
    fn empty_reduction() {
        let r = Exec::Parallel.reduce_chunks(0, |_| 1usize, |a, b| a + b);
        assert!(r.is_none());
    }

    #[test]
    fn map_preserves_order() {
        let v = Exec::Parallel.map_indices(1000, |i| i * 2);
        assert!(v.iter().enumerate().all(|(i, &x)| x == 2 * i));
    }
}
