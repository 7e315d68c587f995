use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::center_columns;
use crate::models::Design;

/// Reported VIF when a column is (numerically) a combination of the others.
pub const VIF_CAP: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VifScore {
    pub vif: f64,
    /// `None` for a degenerate (constant) column.
    pub r_squared: Option<f64>,
    /// `R² ≥ 1 - 1e-12`: VIF reported as [`VIF_CAP`].
    pub capped: bool,
    /// Constant column; R² is undefined and VIF is reported as the cap.
    pub degenerate: bool,
}

impl VifScore {
    fn from_r2(r2: f64) -> Self {
        if r2 >= 1.0 - 1e-12 {
            VifScore {
                vif: VIF_CAP,
                r_squared: Some(r2),
                capped: true,
                degenerate: false,
            }
        } else {
            VifScore {
                vif: 1.0 / (1.0 - r2),
                r_squared: Some(r2),
                capped: false,
                degenerate: false,
            }
        }
    }
}

/// `1 / (1 - R²_j)` with `R²_j` from regressing column `j` on all other
/// columns plus an intercept.
pub fn vif_scores(x: &Design) -> Result<Vec<VifScore>> {
    let (n, p) = (x.n_rows(), x.n_cols());
    if p < 2 {
        return Err(Error::InvalidInput("VIF needs at least two features".into()));
    }
    if n < p + 1 {
        return Err(Error::InvalidInput(format!("VIF needs at least {} rows, got {n}", p + 1)));
    }
    if x.has_missing() {
        return Err(Error::InvalidInput("VIF input has missing values; impute first".into()));
    }
    let (xc, _) = center_columns(&x.to_nalgebra());
    let sst: Vec<f64> = (0..p).map(|j| xc.column(j).norm_squared()).collect();
    let live: Vec<usize> = (0..p)
        .filter(|&j| {
            let scale = x.col(j).iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            sst[j] > 1e-24 * (scale * scale * n as f64).max(f64::MIN_POSITIVE)
        })
        .collect();
    let mut out = vec![
        VifScore {
            vif: VIF_CAP,
            r_squared: None,
            capped: false,
            degenerate: true,
        };
        p
    ];
    if live.len() == 1 {
        out[live[0]] = VifScore::from_r2(0.0);
        return Ok(out);
    }
    let xl = DMatrix::from_fn(n, live.len(), |i, a| xc[(i, live[a])]);
    let g = xl.tr_mul(&xl);
    let inv = g.clone().cholesky().map(|c| c.inverse());
    let well_posed = inv.as_ref().is_some_and(|inv| {
        (0..live.len()).all(|a| {
            let v = g[(a, a)] * inv[(a, a)];
            v.is_finite() && v >= 1.0 && v < 1e10
        })
    });
    if well_posed {
        let inv = inv.as_ref().unwrap();
        for (a, &j) in live.iter().enumerate() {
            out[j] = VifScore::from_r2(1.0 - 1.0 / (g[(a, a)] * inv[(a, a)]));
        }
        return Ok(out);
    }
    // Singular Gram: work on the correlation matrix. A column with weight in
    // the null space is an exact combination of the others; for any other
    // column, SST / RSS equals the diagonal of the pseudo-inverse.
    let m = live.len();
    let d: Vec<f64> = (0..m).map(|a| g[(a, a)].sqrt()).collect();
    let c = DMatrix::from_fn(m, m, |a, b| g[(a, b)] / (d[a] * d[b]));
    let eig = c.symmetric_eigen();
    let lmax = eig.eigenvalues.iter().fold(0.0_f64, |acc, v| acc.max(*v));
    let tol = lmax * 1e-12 * m as f64;
    for (a, &j) in live.iter().enumerate() {
        let mut null_weight = 0.0;
        let mut pinv_diag = 0.0;
        for k in 0..m {
            let v2 = eig.eigenvectors[(a, k)].powi(2);
            if eig.eigenvalues[k] > tol {
                pinv_diag += v2 / eig.eigenvalues[k];
            } else {
                null_weight += v2;
            }
        }
        out[j] = if null_weight > 1e-8 {
            VifScore::from_r2(1.0)
        } else {
            VifScore::from_r2((1.0 - 1.0 / pinv_diag).max(0.0))
        };
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VifStep {
    pub feature: usize,
    pub score: VifScore,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VifReport {
    pub threshold: f64,
    /// Retained column indices, ascending.
    pub retained: Vec<usize>,
    /// Removed columns in removal order, with the score that removed them.
    pub removed: Vec<VifStep>,
    /// Final scores of the retained columns, aligned with `retained`.
    pub final_scores: Vec<VifScore>,
}

impl VifReport {
    /// `feature,vif,status` rows: retained columns first, then removals in
    /// order (`removed_<step>`).
    pub fn to_csv(&self, names: &[String]) -> String {
        let mut out = String::from("feature,vif,status\n");
        for (j, s) in self.retained.iter().zip(&self.final_scores) {
            out.push_str(&format!("{},{},retained\n", names[*j], s.vif));
        }
        for (k, step) in self.removed.iter().enumerate() {
            out.push_str(&format!("{},{},removed_{}\n", names[step.feature], step.score.vif, k + 1));
        }
        out
    }
}

/// Drops the column with the largest VIF (lowest index on ties) until every
/// VIF is below `threshold`.
pub fn vif_eliminate(x: &Design, threshold: f64) -> Result<VifReport> {
    if !(threshold > 1.0) {
        return Err(Error::Config(format!("VIF threshold must exceed 1, got {threshold}")));
    }
    let mut retained: Vec<usize> = (0..x.n_cols()).collect();
    let mut removed = Vec::new();
    loop {
        if retained.len() < 2 {
            let final_scores = retained.iter().map(|_| VifScore::from_r2(0.0)).collect();
            return Ok(VifReport { threshold, retained, removed, final_scores });
        }
        let scores = vif_scores(&x.select_columns(&retained))?;
        let (worst, s) = scores
            .iter()
            .enumerate()
            .fold((0, scores[0]), |(bi, b), (i, s)| if s.vif > b.vif { (i, *s) } else { (bi, b) });
        if s.vif < threshold {
            return Ok(VifReport {
                threshold,
                retained,
                removed,
                final_scores: scores,
            });
        }
        removed.push(VifStep {
            feature: retained[worst],
            score: s,
        });
        retained.remove(worst);
    }
}
