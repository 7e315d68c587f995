//! Deterministic inputs shared by the benchmarks.

use fulfillkit_core::models::Design;
use fulfillkit_core::seed;
use rand::Rng as _;

/// `n` points in `[0, 10)^dim` drawn around `k` centers.
pub fn blobs(n: usize, dim: usize, k: usize, s: u64) -> Vec<Vec<f64>> {
    let mut rng = seed::rng(s);
    let centers: Vec<Vec<f64>> = (0..k).map(|_| (0..dim).map(|_| rng.random_range(0.0..10.0)).collect()).collect();
    (0..n)
        .map(|i| centers[i % k].iter().map(|c| c + rng.random_range(-0.5..0.5)).collect())
        .collect()
}

/// Uniform design with a linear response on the first three columns and a
/// label thresholding that response.
pub fn regression_problem(n: usize, p: usize, s: u64) -> (Design, Vec<f64>, Vec<bool>) {
    let mut rng = seed::rng(s);
    let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..p).map(|_| rng.random::<f64>()).collect()).collect();
    let y: Vec<f64> = rows
        .iter()
        .map(|r| 1.0 + 3.0 * r[0] - 2.0 * r[1.min(p - 1)] + r[2.min(p - 1)] + 0.1 * rng.random::<f64>())
        .collect();
    let labels = y.iter().map(|v| *v > 1.5).collect();
    (Design::from_rows(&rows, p).expect("rectangular"), y, labels)
}

/// Paired samples where `a` is shifted up by `shift`.
pub fn paired(n: usize, shift: f64, s: u64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = seed::rng(s);
    let b: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    let a = b.iter().map(|v| v + shift + rng.random_range(-0.5..0.5)).collect();
    (a, b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inputs_are_deterministic_and_shaped() {
        assert_eq!(blobs(30, 2, 3, 1), blobs(30, 2, 3, 1));
        let (x, y, l) = regression_problem(50, 4, 2);
        assert_eq!((x.n_rows(), x.n_cols(), y.len(), l.len()), (50, 4, 50, 50));
        assert!(l.iter().any(|b| *b) && l.iter().any(|b| !*b));
        assert_eq!(paired(10, 1.0, 3).0.len(), 10);
    }
}
