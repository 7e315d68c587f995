//! Least-squares helpers on top of nalgebra.
//!
//! Every regression in the pipeline carries an unpenalized intercept, which is
//! handled here by centering the design and the response rather than by an
//! explicit column of ones.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative singular-value cutoff used to decide numerical rank.
pub const RANK_RTOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct LeastSquares {
    pub intercept: f64,
    pub coef: Vec<f64>,
    pub sse: f64,
    pub rank: usize,
}

/// Builds an `n × p` matrix from column vectors.
pub fn from_columns(columns: &[Vec<f64>], n_rows: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n_rows, columns.len(), |i, j| columns[j][i])
}

pub fn column_means(x: &DMatrix<f64>) -> Vec<f64> {
    let n = x.nrows().max(1) as f64;
    (0..x.ncols()).map(|j| x.column(j).sum() / n).collect()
}

pub fn center_columns(x: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>) {
    let means = column_means(x);
    let mut c = x.clone();
    for (j, m) in means.iter().enumerate() {
        c.column_mut(j).add_scalar_mut(-m);
    }
    (c, means)
}

fn check_finite(x: &DMatrix<f64>, y: &[f64]) -> Result<()> {
    if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite value in least-squares input".into()));
    }
    Ok(())
}

/// Ordinary least squares of `y` on the columns of `x` plus an intercept.
///
/// Rank-deficient designs get the minimum-norm solution; the residual sum of
/// squares is still exact in that case.
pub fn ols_with_intercept(x: &DMatrix<f64>, y: &[f64]) -> Result<LeastSquares> {
    let n = x.nrows();
    if y.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: y.len(),
        });
    }
    if n == 0 {
        return Err(Error::InvalidInput("least squares on zero rows".into()));
    }
    check_finite(x, y)?;
    let y_mean = y.iter().sum::<f64>() / n as f64;
    let yc = DVector::from_iterator(n, y.iter().map(|v| v - y_mean));
    if x.ncols() == 0 {
        return Ok(LeastSquares {
            intercept: y_mean,
            coef: Vec::new(),
            sse: yc.norm_squared(),
            rank: 0,
        });
    }
    let (xc, means) = center_columns(x);
    let svd = xc.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let tol = smax * RANK_RTOL * (n.max(x.ncols()) as f64);
    let rank = svd.singular_values.iter().filter(|s| **s > tol).count();
    let coef = if rank == 0 {
        DVector::zeros(x.ncols())
    } else {
        svd.solve(&yc, tol)
            .map_err(|e| Error::Numeric(format!("svd solve failed: {e}")))?
    };
    let resid = &yc - &xc * &coef;
    let intercept = y_mean - means.iter().zip(coef.iter()).map(|(m, b)| m * b).sum::<f64>();
    Ok(LeastSquares {
        intercept,
        coef: coef.iter().copied().collect(),
        sse: resid.norm_squared(),
        rank,
    })
}

/// Orthogonal projector onto the centered column space of a fixed design.
///
/// Lets many responses be regressed on the same design for the cost of one
/// decomposition.
#[derive(Debug, Clone)]
pub struct Projector {
    basis: DMatrix<f64>,
}

impl Projector {
    pub fn new(x: &DMatrix<f64>) -> Result<Self> {
        check_finite(x, &[])?;
        let n = x.nrows();
        if x.ncols() == 0 || n == 0 {
            return Ok(Projector {
                basis: DMatrix::zeros(n, 0),
            });
        }
        let (xc, _) = center_columns(x);
        let svd = xc.svd(true, false);
        let u = svd.u.expect("requested U");
        let smax = svd.singular_values.max();
        let tol = smax * RANK_RTOL * (n.max(x.ncols()) as f64);
        let keep: Vec<usize> = (0..svd.singular_values.len())
            .filter(|&i| svd.singular_values[i] > tol)
            .collect();
        let basis = DMatrix::from_fn(n, keep.len(), |i, j| u[(i, keep[j])]);
        Ok(Projector { basis })
    }

    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }

    /// Residual sum of squares of `y` after removing its mean and its
    /// projection onto the design.
    pub fn residual_ss(&self, y: &[f64]) -> f64 {
        let n = y.len();
        let mean = y.iter().sum::<f64>() / n as f64;
        let yc = DVector::from_iterator(n, y.iter().map(|v| v - mean));
        if self.basis.ncols() == 0 {
            return yc.norm_squared();
        }
        let coords = self.basis.tr_mul(&yc);
        (&yc - &self.basis * coords).norm_squared()
    }
}

/// Cross-product statistics of a centered design, for fast subset regressions.
#[derive(Debug, Clone)]
pub struct CenteredGram {
    pub n: usize,
    pub xtx: DMatrix<f64>,
    pub xty: DVector<f64>,
    pub yty: f64,
}

impl CenteredGram {
    pub fn new(x: &DMatrix<f64>, y: &[f64]) -> Result<Self> {
        check_finite(x, y)?;
        let n = x.nrows();
        let (xc, _) = center_columns(x);
        let mean = y.iter().sum::<f64>() / n.max(1) as f64;
        let yc = DVector::from_iterator(n, y.iter().map(|v| v - mean));
        Ok(CenteredGram {
            n,
            xtx: xc.tr_mul(&xc),
            xty: xc.tr_mul(&yc),
            yty: yc.norm_squared(),
        })
    }

    /// Residual sum of squares of the regression on `subset` (plus intercept),
    /// or `None` when the subset design is numerically singular.
    pub fn subset_sse(&self, subset: &[usize]) -> Option<f64> {
        if subset.is_empty() {
            return Some(self.yty);
        }
        let k = subset.len();
        let g = DMatrix::from_fn(k, k, |a, b| self.xtx[(subset[a], subset[b])]);
        let r = DVector::from_fn(k, |a, _| self.xty[subset[a]]);
        let diag_max = (0..k).map(|a| g[(a, a)]).fold(0.0_f64, f64::max);
        if diag_max <= 0.0 {
            return None;
        }
        let chol = g.clone().cholesky()?;
        // Reject near-singular subsets: a tiny pivot means one column is
        // (numerically) a combination of the others.
        let l = chol.l();
        for a in 0..k {
            let pivot = l[(a, a)] * l[(a, a)];
            if pivot <= g[(a, a)] * 1e-10 || pivot <= diag_max * 1e-14 {
                return None;
            }
        }
        let beta = chol.solve(&r);
        let sse = self.yty - r.dot(&beta);
        Some(sse.max(0.0))
    }
}

/// Solves a dense square system, falling back to least squares when singular.
pub fn solve_square(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    if let Some(x) = a.clone().lu().solve(b) {
        if x.iter().all(|v| v.is_finite()) {
            return Ok(x);
        }
    }
    let svd = a.clone().svd(true, true);
    let tol = svd.singular_values.max() * RANK_RTOL;
    svd.solve(b, tol)
        .map_err(|e| Error::Numeric(format!("singular system: {e}")))
}
