use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Share of positions where `pred` equals `truth`.
pub fn accuracy<T: PartialEq>(pred: &[T], truth: &[T]) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            actual: pred.len(),
        });
    }
    if truth.is_empty() {
        return Err(Error::InvalidInput("accuracy of an empty sample".into()));
    }
    let hits = pred.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / truth.len() as f64)
}

/// RMSE plus its two normalized forms. A normalized value is `None` when the
/// ground-truth range (`nrmse_range`) or mean (`nrmse_mean`) is zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionMetrics {
    pub rmse: f64,
    pub nrmse_range: Option<f64>,
    pub nrmse_mean: Option<f64>,
}

pub fn regression_metrics(pred: &[f64], truth: &[f64]) -> Result<RegressionMetrics> {
    if pred.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            actual: pred.len(),
        });
    }
    if truth.is_empty() {
        return Err(Error::InvalidInput("regression metrics of an empty sample".into()));
    }
    let n = truth.len() as f64;
    let mse = pred.iter().zip(truth).map(|(p, t)| (p - t) * (p - t)).sum::<f64>() / n;
    if !mse.is_finite() {
        return Err(Error::Numeric("non-finite squared error".into()));
    }
    let rmse = mse.sqrt();
    let (lo, hi) = truth
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &t| (lo.min(t), hi.max(t)));
    let mean = truth.iter().sum::<f64>() / n;
    Ok(RegressionMetrics {
        rmse,
        nrmse_range: (hi > lo).then(|| rmse / (hi - lo)),
        nrmse_mean: (mean != 0.0).then(|| rmse / mean),
    })
}
