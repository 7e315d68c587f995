use serde::{Deserialize, Serialize};

use super::Design;
use crate::error::{Error, Result};
use crate::evaluation::{kfold_split, train_indices};
use crate::linalg::ols_with_intercept;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnetParams {
    /// Stop once no coefficient moves more than this in a sweep.
    pub tol: f64,
    /// Required stationarity residual, in objective units.
    pub kkt_tol: f64,
    pub max_sweeps: usize,
}

impl Default for EnetParams {
    fn default() -> Self {
        EnetParams {
            tol: 1e-8,
            kkt_tol: 1e-6,
            max_sweeps: 100_000,
        }
    }
}

/// Linear model on standardized inputs:
/// `y ≈ intercept + Σ coef_j (x_j - mean_j) / sd_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
    pub coef: Vec<f64>,
    pub intercept: f64,
    pub lambda1: f64,
    pub lambda2: f64,
}

impl LinearModel {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut y = self.intercept;
        for j in 0..self.coef.len() {
            if self.sds[j] > 0.0 {
                y += self.coef[j] * (row[j] - self.means[j]) / self.sds[j];
            }
        }
        y
    }

    pub fn predict(&self, x: &Design) -> Result<Vec<f64>> {
        if x.n_cols() != self.coef.len() {
            return Err(Error::DimensionMismatch {
                expected: self.coef.len(),
                actual: x.n_cols(),
            });
        }
        if x.has_missing() {
            return Err(Error::InvalidInput("linear model input has missing values; impute first".into()));
        }
        Ok((0..x.n_rows()).map(|i| self.predict_row(&x.row(i))).collect())
    }

    /// Intercept and slopes on the original (unstandardized) scale.
    pub fn raw_coefficients(&self) -> (f64, Vec<f64>) {
        let slopes: Vec<f64> = self
            .coef
            .iter()
            .zip(&self.sds)
            .map(|(c, sd)| if *sd > 0.0 { c / sd } else { 0.0 })
            .collect();
        let shift: f64 = slopes.iter().zip(&self.means).map(|(b, m)| b * m).sum();
        (self.intercept - shift, slopes)
    }

    pub fn l1_norm(&self) -> f64 {
        self.coef.iter().map(|c| c.abs()).sum()
    }
}

/// Column means and population standard deviations.
pub fn standardize(x: &Design) -> (Vec<Vec<f64>>, Vec<f64>, Vec<f64>) {
    let n = x.n_rows() as f64;
    let mut cols = Vec::with_capacity(x.n_cols());
    let (mut means, mut sds) = (Vec::new(), Vec::new());
    for c in x.columns() {
        let m = c.iter().sum::<f64>() / n;
        let sd = (c.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n).sqrt();
        // Numerically constant columns carry no signal.
        let sd = if sd > 1e-12 * m.abs().max(1.0) { sd } else { 0.0 };
        cols.push(c.iter().map(|v| if sd > 0.0 { (v - m) / sd } else { 0.0 }).collect());
        means.push(m);
        sds.push(sd);
    }
    (cols, means, sds)
}

fn soft_threshold(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

/// Largest violation of the optimality conditions of
/// `½‖r‖² + λ1‖θ‖₁ + λ2‖θ‖₂²` at `coef` (standardized columns).
pub fn kkt_residual(cols: &[Vec<f64>], resid: &[f64], coef: &[f64], lambda1: f64, lambda2: f64) -> f64 {
    let mut worst = 0.0_f64;
    for (j, c) in cols.iter().enumerate() {
        let grad: f64 = c.iter().zip(resid).map(|(a, r)| a * r).sum();
        let v = if coef[j] != 0.0 {
            (grad - 2.0 * lambda2 * coef[j] - lambda1 * coef[j].signum()).abs()
        } else {
            (grad.abs() - lambda1).max(0.0)
        };
        worst = worst.max(v);
    }
    worst
}

/// Elastic net by cyclic coordinate descent on standardized `x` and centered
/// `y`, minimizing `½Σr² + λ1‖θ‖₁ + λ2‖θ‖₂²`. Returns an error if the
/// optimality conditions are not met within `max_sweeps`.
pub fn fit_enet(x: &Design, y: &[f64], lambda1: f64, lambda2: f64, params: &EnetParams) -> Result<LinearModel> {
    let n = x.n_rows();
    if y.len() != n {
        return Err(Error::DimensionMismatch { expected: n, actual: y.len() });
    }
    if n == 0 {
        return Err(Error::InvalidInput("elastic net on zero rows".into()));
    }
    if !(lambda1 >= 0.0 && lambda2 >= 0.0) {
        return Err(Error::InvalidInput("penalties must be non-negative".into()));
    }
    if x.has_missing() || y.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("elastic net input has missing or non-finite values".into()));
    }
    let (cols, means, sds) = standardize(x);
    let y_mean = y.iter().sum::<f64>() / n as f64;
    let mut resid: Vec<f64> = y.iter().map(|v| v - y_mean).collect();
    let p = cols.len();
    let mut coef = vec![0.0; p];
    let sq: Vec<f64> = cols.iter().map(|c| c.iter().map(|v| v * v).sum()).collect();
    let mut converged = p == 0;
    for _ in 0..params.max_sweeps {
        if converged {
            break;
        }
        let mut max_step = 0.0_f64;
        for j in 0..p {
            if sq[j] == 0.0 {
                continue;
            }
            let c = &cols[j];
            let rho: f64 = c.iter().zip(&resid).map(|(a, r)| a * r).sum::<f64>() + sq[j] * coef[j];
            let new = soft_threshold(rho, lambda1) / (sq[j] + 2.0 * lambda2);
            let d = new - coef[j];
            if d != 0.0 {
                for (r, a) in resid.iter_mut().zip(c) {
                    *r -= d * a;
                }
                coef[j] = new;
                max_step = max_step.max(d.abs());
            }
        }
        if max_step < params.tol && kkt_residual(&cols, &resid, &coef, lambda1, lambda2) < params.kkt_tol {
            converged = true;
        }
    }
    if !converged {
        return Err(Error::Numeric(format!(
            "elastic net did not converge in {} sweeps (lambda1 = {lambda1}, lambda2 = {lambda2})",
            params.max_sweeps
        )));
    }
    Ok(LinearModel {
        means,
        sds,
        coef,
        intercept: y_mean,
        lambda1,
        lambda2,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnetCvParams {
    pub lambda1_grid: Vec<f64>,
    pub lambda2_grid: Vec<f64>,
    pub folds: usize,
    pub enet: EnetParams,
}

impl Default for EnetCvParams {
    fn default() -> Self {
        let grid = vec![0.0, 1e-3, 1e-2, 1e-1, 1.0];
        EnetCvParams {
            lambda1_grid: grid.clone(),
            lambda2_grid: grid,
            folds: 5,
            enet: EnetParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnetCvResult {
    pub lambda1: f64,
    pub lambda2: f64,
    /// `(lambda1, lambda2, mean validation MSE)` per grid point.
    pub scores: Vec<(f64, f64, f64)>,
}

/// Grid search over `(λ1, λ2)` by k-fold validation MSE; ties keep the
/// earlier grid point.
pub fn enet_cv(x: &Design, y: &[f64], params: &EnetCvParams, seed: u64) -> Result<EnetCvResult> {
    if params.lambda1_grid.is_empty() || params.lambda2_grid.is_empty() {
        return Err(Error::Config("elastic net grids must not be empty".into()));
    }
    let n = x.n_rows();
    let k = params.folds.clamp(2, n.max(2));
    let folds = kfold_split(n, k, None, seed)?;
    let mut scores = Vec::new();
    for &l1 in &params.lambda1_grid {
        for &l2 in &params.lambda2_grid {
            let mut sse = 0.0;
            for f in 0..folds.len() {
                let tr = train_indices(&folds, f);
                let m = fit_enet(&x.select_rows(&tr), &tr.iter().map(|&i| y[i]).collect::<Vec<_>>(), l1, l2, &params.enet)?;
                let va = &folds[f];
                let pred = m.predict(&x.select_rows(va))?;
                sse += pred.iter().zip(va).map(|(p, &i)| (p - y[i]) * (p - y[i])).sum::<f64>();
            }
            scores.push((l1, l2, sse / n as f64));
        }
    }
    let best = scores
        .iter()
        .fold(None::<&(f64, f64, f64)>, |b, s| match b {
            Some(b) if b.2 <= s.2 => Some(b),
            _ => Some(s),
        })
        .expect("non-empty grid");
    Ok(EnetCvResult {
        lambda1: best.0,
        lambda2: best.1,
        scores,
    })
}

/// Plain least squares (minimum-norm when rank deficient), expressed as a
/// [`LinearModel`] with unit scaling.
pub fn fit_ols(x: &Design, y: &[f64]) -> Result<LinearModel> {
    let ls = ols_with_intercept(&x.to_nalgebra(), y)?;
    let p = x.n_cols();
    Ok(LinearModel {
        means: vec![0.0; p],
        sds: vec![1.0; p],
        coef: ls.coef,
        intercept: ls.intercept,
        lambda1: 0.0,
        lambda2: 0.0,
    })
}

#[cfg(test)]
mod tests {
    use nalgebra::{DMatrix, DVector};
    use proptest::prelude::*;
    use rand::Rng as _;
    use rand_distr::StandardNormal;

    use super::*;
    use crate::seed;

    fn system(n: usize, p: usize, s: u64) -> (Design, Vec<f64>) {
        let mut rng = seed::rng(s);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..p).map(|_| rng.sample::<f64, _>(StandardNormal) * 2.0 + 1.0).collect()).collect();
        let y = rows
            .iter()
            .map(|r| 3.0 + r.iter().enumerate().map(|(j, v)| (j as f64 - 1.0) * v).sum::<f64>() + rng.sample::<f64, _>(StandardNormal))
            .collect();
        (Design::from_rows(&rows, p).unwrap(), y)
    }

    // Closed-form ridge on the same standardization: (ZᵀZ + 2λ2 I)⁻¹ Zᵀ(y - ȳ).
    fn ridge_oracle(x: &Design, y: &[f64], l2: f64) -> Vec<f64> {
        let (cols, _, _) = standardize(x);
        let n = x.n_rows();
        let z = DMatrix::from_fn(n, cols.len(), |i, j| cols[j][i]);
        let m = y.iter().sum::<f64>() / n as f64;
        let yc = DVector::from_iterator(n, y.iter().map(|v| v - m));
        let a = z.tr_mul(&z) + DMatrix::identity(cols.len(), cols.len()) * (2.0 * l2);
        a.lu().solve(&z.tr_mul(&yc)).unwrap().iter().copied().collect()
    }

    #[test]
    fn two_point_line_is_exact() {
        let x = Design::from_rows(&[vec![1.0], vec![2.0]], 1).unwrap();
        let (b0, b) = fit_enet(&x, &[1.0, 2.0], 0.0, 0.0, &EnetParams::default()).unwrap().raw_coefficients();
        assert!(b0.abs() < 1e-12 && (b[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unpenalized_fit_matches_least_squares() {
        for s in 0..5 {
            let (x, y) = system(80, 4, s);
            let e = fit_enet(&x, &y, 0.0, 0.0, &EnetParams::default()).unwrap();
            let o = fit_ols(&x, &y).unwrap();
            for i in 0..x.n_rows() {
                let r = x.row(i);
                assert!((e.predict_row(&r) - o.predict_row(&r)).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn ridge_matches_closed_form() {
        let (x, y) = system(60, 5, 11);
        for l2 in [0.1, 1.0, 25.0] {
            let e = fit_enet(&x, &y, 0.0, l2, &EnetParams::default()).unwrap();
            for (a, b) in e.coef.iter().zip(ridge_oracle(&x, &y, l2)) {
                assert!((a - b).abs() < 1e-6, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn large_l1_zeroes_every_coefficient() {
        let (x, y) = system(50, 3, 2);
        let e = fit_enet(&x, &y, 1e9, 0.0, &EnetParams::default()).unwrap();
        assert!(e.coef.iter().all(|&c| c == 0.0));
        assert!((e.intercept - y.iter().sum::<f64>() / 50.0).abs() < 1e-12);
    }

    #[test]
    fn constant_column_gets_zero_weight() {
        let (x, y) = system(40, 2, 3);
        let mut cols = x.columns().to_vec();
        cols.push(vec![7.0; 40]);
        let x = Design::from_columns(cols).unwrap();
        let e = fit_enet(&x, &y, 0.1, 0.1, &EnetParams::default()).unwrap();
        assert_eq!(e.coef[2], 0.0);
        assert!(e.predict_row(&x.row(0)).is_finite());
    }

    #[test]
    fn cv_picks_a_grid_point_and_is_deterministic() {
        let (x, y) = system(60, 3, 4);
        let p = EnetCvParams::default();
        let a = enet_cv(&x, &y, &p, 9).unwrap();
        assert_eq!(a, enet_cv(&x, &y, &p, 9).unwrap());
        assert_eq!(a.scores.len(), 25);
        let best = a.scores.iter().map(|s| s.2).fold(f64::INFINITY, f64::min);
        assert!(a.scores.iter().any(|s| s.0 == a.lambda1 && s.1 == a.lambda2 && s.2 == best));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn kkt_holds_and_l1_path_shrinks(s in 0u64..1000, l2 in 0.0f64..5.0) {
            let (x, y) = system(40, 4, s);
            let mut prev = f64::INFINITY;
            for l1 in [0.0, 0.5, 2.0, 10.0, 50.0, 200.0] {
                let e = fit_enet(&x, &y, l1, l2, &EnetParams::default()).unwrap();
                let (cols, _, _) = standardize(&x);
                let m = y.iter().sum::<f64>() / 40.0;
                let resid: Vec<f64> = (0..40).map(|i| y[i] - m - (0..4).map(|j| cols[j][i] * e.coef[j]).sum::<f64>()).collect();
                prop_assert!(kkt_residual(&cols, &resid, &e.coef, l1, l2) < 1e-6);
                prop_assert!(e.l1_norm() <= prev + 1e-9);
                prev = e.l1_norm();
            }
        }
    }
}
