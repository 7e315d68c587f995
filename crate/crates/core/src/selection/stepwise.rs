use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CenteredGram;
use crate::models::Design;

const SSE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepwiseResult {
    /// Retained column indices, ascending.
    pub selected: Vec<usize>,
    /// AIC of the starting model and after each accepted move.
    pub aic_trace: Vec<f64>,
    /// The full model was singular, so the search started from the
    /// intercept and only added features.
    pub forward_only: bool,
}

/// `n·ln(SSE/n) + 2(k+1)` for `k` features plus intercept.
pub fn aic(n: usize, sse: f64, k: usize) -> f64 {
    n as f64 * (sse.max(SSE_FLOOR) / n as f64).ln() + 2.0 * (k as f64 + 1.0)
}

/// Bidirectional stepwise least squares from the full model: apply the
/// single add or drop with the lowest AIC while it strictly improves.
/// Ties go to the lowest feature index.
pub fn stepwise_aic(x: &Design, y: &[f64]) -> Result<StepwiseResult> {
    let (n, p) = (x.n_rows(), x.n_cols());
    if y.len() != n {
        return Err(Error::DimensionMismatch { expected: n, actual: y.len() });
    }
    if n < 2 {
        return Err(Error::InvalidInput("stepwise AIC needs at least two rows".into()));
    }
    if x.has_missing() {
        return Err(Error::InvalidInput("stepwise AIC input has missing values; impute first".into()));
    }
    let gram = CenteredGram::new(&x.to_nalgebra(), y)?;
    let full: Vec<usize> = (0..p).collect();
    let (mut current, forward_only) = match gram.subset_sse(&full) {
        Some(_) if n > p + 1 => (full, false),
        _ => (Vec::new(), true),
    };
    let mut best_aic = aic(n, gram.subset_sse(&current).expect("start model is regular"), current.len());
    let mut trace = vec![best_aic];
    loop {
        let mut best: Option<(f64, Vec<usize>)> = None;
        for j in 0..p {
            let cand: Vec<usize> = if let Some(pos) = current.iter().position(|&c| c == j) {
                if forward_only {
                    continue;
                }
                let mut c = current.clone();
                c.remove(pos);
                c
            } else {
                if current.len() + 2 > n {
                    continue;
                }
                let mut c = current.clone();
                c.push(j);
                c.sort_unstable();
                c
            };
            let Some(sse) = gram.subset_sse(&cand) else { continue };
            let a = aic(n, sse, cand.len());
            if best.as_ref().is_none_or(|b| a < b.0) {
                best = Some((a, cand));
            }
        }
        match best {
            Some((a, cand)) if a < best_aic => {
                best_aic = a;
                current = cand;
                trace.push(a);
            }
            _ => break,
        }
    }
    Ok(StepwiseResult {
        selected: current,
        aic_trace: trace,
        forward_only,
    })
}
