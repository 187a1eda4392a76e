//! Order-fixed summation so parallel and serial runs agree bit for bit.

use rayon::prelude::*;

const LEAF: usize = 256;

/// Pairwise (tree) sum. The split points depend only on the length.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= LEAF {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Maps `f` over `0..n` in parallel and reduces with [`pairwise_sum`].
pub fn par_sum(n: usize, f: impl Fn(usize) -> f64 + Sync + Send) -> f64 {
    let parts: Vec<f64> = (0..n).into_par_iter().map(f).collect();
    pairwise_sum(&parts)
}

/// Like [`par_sum`] for a fixed number of simultaneous accumulators.
pub fn par_sum_k<const K: usize>(n: usize, f: impl Fn(usize) -> [f64; K] + Sync + Send) -> [f64; K] {
    let parts: Vec<[f64; K]> = (0..n).into_par_iter().map(f).collect();
    let mut out = [0.0; K];
    let mut col = vec![0.0; n];
    for (k, o) in out.iter_mut().enumerate() {
        for (c, p) in col.iter_mut().zip(&parts) {
            *c = p[k];
        }
        *o = pairwise_sum(&col);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_naive_sum_on_integers() {
        let xs: Vec<f64> = (0..10_000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&xs), 49_995_000.0);
        assert_eq!(par_sum(10_000, |i| i as f64), 49_995_000.0);
    }

    #[test]
    fn k_way_sum() {
        let [a, b] = par_sum_k(1000, |i| [1.0, i as f64]);
        assert_eq!(a, 1000.0);
        assert_eq!(b, 499_500.0);
    }
}
