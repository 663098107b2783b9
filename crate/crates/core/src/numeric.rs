//! Small numerical building blocks.

use rayon::prelude::*;

/// Pairwise (tree) summation. The result depends only on the order of `terms`.
pub fn pairwise_sum(terms: &[f64]) -> f64 {
    const BLOCK: usize = 8;
    if terms.len() <= BLOCK {
        return terms.iter().fold(0.0, |acc, t| acc + t);
    }
    let (a, b) = terms.split_at(terms.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

/// `n` evenly spaced points from `lo` to `hi`, both included.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let step = (hi - lo) / (n - 1) as f64;
            (0..n)
                .map(|i| if i == n - 1 { hi } else { lo + step * i as f64 })
                .collect()
        }
    }
}

/// Maps `f` over `0..n`, optionally on the rayon pool. Output order is the index order.
pub fn indexed_map<T, F>(n: usize, parallel: bool, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    if parallel {
        (0..n).into_par_iter().map(f).collect()
    } else {
        (0..n).map(f).collect()
    }
}

/// Result of Richardson extrapolation of a difference quotient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extrapolation {
    pub value: f64,
    pub uncertainty: f64,
    /// `true` when the successive diagonal deltas never decreased.
    pub diverging: bool,
}

/// Richardson extrapolation for a quotient `q(h)` with a full power series
/// in `h`, evaluated on `h_k = h0 / 2^k`.
pub fn richardson<Q>(q: Q, h0: f64, levels: usize) -> Extrapolation
where
    Q: Fn(f64) -> f64,
{
    let levels = levels.max(2);
    let mut prev: Vec<f64> = vec![q(h0)];
    let mut diag = vec![prev[0]];
    let mut h = h0;
    for k in 1..levels {
        h *= 0.5;
        let mut row = Vec::with_capacity(k + 1);
        row.push(q(h));
        let mut factor = 1.0;
        for j in 1..=k {
            factor *= 2.0;
            let r = row[j - 1] + (row[j - 1] - prev[j - 1]) / (factor - 1.0);
            row.push(r);
        }
        diag.push(row[k]);
        prev = row;
    }

    let deltas: Vec<f64> = diag.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let (best, &best_delta) = deltas
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("at least one delta");
    let value = diag[best + 1];
    let converged = best_delta <= 1e-10 * value.abs().max(1.0);
    let diverging = !converged && deltas.windows(2).all(|w| w[1] >= w[0]);
    Extrapolation {
        value,
        uncertainty: best_delta,
        diverging,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_naive_on_small_input() {
        assert_eq!(pairwise_sum(&[1.0, 2.0, 3.0]), 6.0);
        assert_eq!(pairwise_sum(&[]), 0.0);
        let v: Vec<f64> = (0..100).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&v), 4950.0);
    }

    #[test]
    fn linspace_hits_both_ends() {
        let g = linspace(-1.0, 1.0, 5);
        assert_eq!(g, vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert_eq!(linspace(0.3, 0.7, 1), vec![0.3]);
    }

    #[test]
    fn richardson_forward_difference_of_exp() {
        let x0: f64 = 0.3;
        let e = richardson(|h| ((x0 + h).exp() - x0.exp()) / h, 0.1, 8);
        assert!((e.value - x0.exp()).abs() < 1e-10, "{e:?}");
        assert!(!e.diverging);
    }

    #[test]
    fn richardson_flags_blowup() {
        // sqrt has no finite right derivative at 0.
        let e = richardson(|h: f64| h.sqrt() / h, 0.1, 8);
        assert!(e.diverging, "{e:?}");
    }

    #[test]
    fn indexed_map_is_order_stable() {
        let a = indexed_map(1000, true, |i| (i as f64).sin());
        let b = indexed_map(1000, false, |i| (i as f64).sin());
        assert_eq!(a, b);
    }
}
