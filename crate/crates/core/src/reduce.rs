//! Deterministic reductions.
//!
//! Pair sums are evaluated row by row: each row is summed sequentially in
//! index order, then the row totals are combined by a fixed pairwise tree.
//! With the `parallel` feature rows are computed on the rayon pool, but the
//! arithmetic (and therefore every bit of the result) does not depend on the
//! number of threads.

use alloc::vec::Vec;

/// Evaluates `f(i)` for `i in 0..n`, in parallel when enabled.
pub fn map_rows<T, F>(n: usize, f: F) -> Vec<T>
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

/// Pairwise (cascade) summation with a fixed split point.
pub fn tree_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 8;
    if values.len() <= LEAF {
        let mut s = 0.0;
        for v in values {
            s += v;
        }
        return s;
    }
    let mid = values.len() / 2;
    tree_sum(&values[..mid]) + tree_sum(&values[mid..])
}

/// `sum_i f(i)` with rows evaluated by [`map_rows`] and combined by [`tree_sum`].
pub fn row_sum<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    tree_sum(&map_rows(n, f))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tree_sum_is_exact_on_integers() {
        let v: Vec<f64> = (1..=1000).map(|i| i as f64).collect();
        assert_eq!(tree_sum(&v), 500500.0);
        assert_eq!(tree_sum(&[]), 0.0);
    }

    #[test]
    fn row_sum_matches_tree_of_rows() {
        let f = |i: usize| 1.0 / (1.0 + i as f64);
        let rows: Vec<f64> = (0..1000).map(f).collect();
        assert_eq!(row_sum(1000, f).to_bits(), tree_sum(&rows).to_bits());
    }
}
