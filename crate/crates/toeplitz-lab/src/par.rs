//! Data-parallel kernels with a sequential fallback.
//!
//! Everything here is shaped as "map an index range, reduce in index order",
//! which keeps outputs bit-identical whether the `parallel` feature is on or
//! off: rayon only reorders the map work, never the reduction.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map `0..n` sequentially.
pub fn map_indexed_seq<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}

/// Map `0..n` on the rayon pool; results are collected in index order.
#[cfg(feature = "parallel")]
pub fn map_indexed_par<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

/// Map `0..n` with the configured execution mode.
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        map_indexed_par(n, f)
    }
    #[cfg(not(feature = "parallel"))]
    {
        map_indexed_seq(n, f)
    }
}

/// Fold every index through `f` and combine with an exact, order-independent
/// reduction (min/max style). `combine` must be associative and commutative
/// without rounding for the result to be mode-independent.
pub fn reduce_indexed_seq<T, F, C>(n: usize, identity: T, f: F, combine: C) -> T
where
    T: Clone,
    F: Fn(usize) -> T,
    C: Fn(T, T) -> T,
{
    (0..n).map(f).fold(identity, |a, b| combine(a, b))
}

#[cfg(feature = "parallel")]
pub fn reduce_indexed_par<T, F, C>(n: usize, identity: T, f: F, combine: C) -> T
where
    T: Clone + Send + Sync,
    F: Fn(usize) -> T + Sync + Send,
    C: Fn(T, T) -> T + Sync + Send,
{
    (0..n)
        .into_par_iter()
        .map(f)
        .reduce(|| identity.clone(), |a, b| combine(a, b))
}

pub fn reduce_indexed<T, F, C>(n: usize, identity: T, f: F, combine: C) -> T
where
    T: Clone + Send + Sync,
    F: Fn(usize) -> T + Sync + Send,
    C: Fn(T, T) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        reduce_indexed_par(n, identity, f, combine)
    }
    #[cfg(not(feature = "parallel"))]
    {
        reduce_indexed_seq(n, identity, f, combine)
    }
}

/// Sum `f(i)` over `0..n` in index order. The map fans out, the sum stays
/// sequential, so floating-point results do not depend on the thread count.
pub fn sum_indexed<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    map_indexed(n, f).into_iter().sum()
}

pub fn sum_indexed_seq<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64,
{
    (0..n).map(f).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn par_and_seq_agree() {
        let f = |i: usize| (i as f64).sin() / (i as f64 + 1.0);
        assert_eq!(sum_indexed(1000, f), sum_indexed_seq(1000, f));
        let a = map_indexed(257, |i| i * i);
        let b = map_indexed_seq(257, |i| i * i);
        assert_eq!(a, b);
        let mx = reduce_indexed(999, f64::NEG_INFINITY, |i| f(i), f64::max);
        let mx_seq = reduce_indexed_seq(999, f64::NEG_INFINITY, |i| f(i), f64::max);
        assert_eq!(mx, mx_seq);
    }
}
