use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::{binomial_tails, mean, median};
use crate::models::{fit_forest, Design, ForestParams};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BorutaParams {
    pub n_runs: usize,
    pub alpha: f64,
    pub forest: ForestParams,
}

impl Default for BorutaParams {
    fn default() -> Self {
        BorutaParams {
            n_runs: 100,
            alpha: 0.05,
            forest: ForestParams::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BorutaStatus {
    Confirmed,
    Tentative,
    Rejected,
}

impl BorutaStatus {
    pub fn name(self) -> &'static str {
        match self {
            BorutaStatus::Confirmed => "confirmed",
            BorutaStatus::Tentative => "tentative",
            BorutaStatus::Rejected => "rejected",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BorutaFeature {
    pub hits: usize,
    pub z_mean: f64,
    pub z_median: f64,
    pub z_min: f64,
    pub z_max: f64,
    /// Two-sided binomial p-value of `hits` against `Binomial(n_runs, 0.5)`.
    pub p_value: f64,
    pub status: BorutaStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BorutaResult {
    pub n_runs: usize,
    pub alpha: f64,
    pub features: Vec<BorutaFeature>,
}

impl BorutaResult {
    pub fn confirmed(&self) -> Vec<usize> {
        self.with_status(BorutaStatus::Confirmed)
    }

    pub fn with_status(&self, status: BorutaStatus) -> Vec<usize> {
        (0..self.features.len()).filter(|&j| self.features[j].status == status).collect()
    }

    /// Feature indices by mean z-score, highest first (ties by index).
    pub fn ranked(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.features.len()).collect();
        idx.sort_by(|&a, &b| self.features[b].z_mean.total_cmp(&self.features[a].z_mean).then(a.cmp(&b)));
        idx
    }

    /// One row per feature, ranked by mean z-score.
    pub fn to_csv(&self, names: &[String]) -> String {
        let mut out = String::from("feature,hits,z_mean,z_median,z_min,z_max,p_value,status\n");
        for j in self.ranked() {
            let f = &self.features[j];
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                names[j],
                f.hits,
                f.z_mean,
                f.z_median,
                f.z_min,
                f.z_max,
                f.p_value,
                f.status.name()
            ));
        }
        out
    }
}

/// Boruta: each run appends an independently shuffled copy of every column,
/// fits a random forest on the doubled design, and counts a hit for each
/// real feature whose importance z-score beats the best shadow. Hit counts
/// are then tested against a fair coin.
pub fn boruta_select(x: &Design, y: &[bool], params: &BorutaParams, seed: u64) -> Result<BorutaResult> {
    if params.n_runs < 20 {
        return Err(Error::Config(format!("boruta needs n_runs >= 20, got {}", params.n_runs)));
    }
    if !(params.alpha > 0.0 && params.alpha < 1.0) {
        return Err(Error::Config(format!("boruta alpha must be in (0, 1), got {}", params.alpha)));
    }
    let (n, p) = (x.n_rows(), x.n_cols());
    if y.len() != n {
        return Err(Error::DimensionMismatch { expected: n, actual: y.len() });
    }
    let pos = y.iter().filter(|&&t| t).count();
    if pos == 0 || pos == n {
        return Err(Error::SingleClass);
    }
    if p == 0 {
        return Ok(BorutaResult {
            n_runs: params.n_runs,
            alpha: params.alpha,
            features: Vec::new(),
        });
    }
    let runs: Vec<Vec<f64>> = (0..params.n_runs)
        .into_par_iter()
        .map(|r| {
            let run_seed = seed::derive(seed, seed::STREAM_BORUTA, r as u64);
            let mut rng = seed::rng(run_seed);
            let shadows: Vec<Vec<f64>> = x
                .columns()
                .iter()
                .map(|c| {
                    let mut s = c.clone();
                    s.shuffle(&mut rng);
                    s
                })
                .collect();
            let full = x.hstack(&Design::from_columns(shadows)?)?;
            let forest = fit_forest(&full, y, &params.forest, run_seed)?;
            Ok(forest.importance_z())
        })
        .collect::<Result<_>>()?;
    let mut hits = vec![0usize; p];
    for z in &runs {
        let shadow_max = z[p..].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for j in 0..p {
            if z[j] > shadow_max {
                hits[j] += 1;
            }
        }
    }
    let features = (0..p)
        .map(|j| {
            let zs: Vec<f64> = runs.iter().map(|z| z[j]).collect();
            let (upper, lower) = binomial_tails(params.n_runs as u64, hits[j] as u64, 0.5);
            let p_value = (2.0 * upper.min(lower)).min(1.0);
            let half = params.n_runs as f64 / 2.0;
            let status = if p_value <= params.alpha && hits[j] as f64 > half {
                BorutaStatus::Confirmed
            } else if p_value <= params.alpha && (hits[j] as f64) < half {
                BorutaStatus::Rejected
            } else {
                BorutaStatus::Tentative
            };
            BorutaFeature {
                hits: hits[j],
                z_mean: mean(&zs),
                z_median: median(&zs).unwrap_or(f64::NAN),
                z_min: zs.iter().copied().fold(f64::INFINITY, f64::min),
                z_max: zs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                p_value,
                status,
            }
        })
        .collect();
    Ok(BorutaResult {
        n_runs: params.n_runs,
        alpha: params.alpha,
        features,
    })
}
