use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

/// Fitted k-means centers; points belong to their nearest center.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub k: usize,
    pub dim: usize,
    /// Row-major `k × dim`.
    pub centers: Vec<f64>,
}

pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

impl ClusterModel {
    pub fn center(&self, c: usize) -> &[f64] {
        &self.centers[c * self.dim..(c + 1) * self.dim]
    }

    /// Nearest center; ties go to the lowest index.
    pub fn assign(&self, point: &[f64]) -> usize {
        let mut best = (0, f64::INFINITY);
        for c in 0..self.k {
            let d = sq_dist(point, self.center(c));
            if d < best.1 {
                best = (c, d);
            }
        }
        best.0
    }

    pub fn assign_all(&self, points: &[Vec<f64>]) -> Vec<usize> {
        points.iter().map(|p| self.assign(p)).collect()
    }

    /// Sum of squared distances to the nearest center.
    pub fn distortion(&self, points: &[Vec<f64>]) -> f64 {
        points.iter().map(|p| sq_dist(p, self.center(self.assign(p)))).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KMeansParams {
    pub max_iter: usize,
    /// Stop once no center moves farther than this.
    pub tol: f64,
}

impl Default for KMeansParams {
    fn default() -> Self {
        KMeansParams {
            max_iter: 300,
            tol: 0.0,
        }
    }
}

fn check_points(points: &[Vec<f64>]) -> Result<usize> {
    let dim = points.first().map(Vec::len).unwrap_or(0);
    for p in points {
        if p.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: p.len(),
            });
        }
        if p.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numeric("non-finite coordinate in clustering input".into()));
        }
    }
    Ok(dim)
}

fn plus_plus_init(points: &[Vec<f64>], k: usize, rng: &mut seed::Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut centers = vec![points[rng.random_range(0..n)].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut x = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, w) in d2.iter().enumerate() {
                if x < *w {
                    chosen = i;
                    break;
                }
                x -= w;
            }
            // Guard against landing on a zero-weight tail through rounding.
            if d2[chosen] == 0.0 {
                chosen = d2.iter().rposition(|w| *w > 0.0).unwrap_or(chosen);
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        let c = points[pick].clone();
        for (i, p) in points.iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(p, &c));
        }
        centers.push(c);
    }
    centers
}

/// k-means++ seeding followed by Lloyd iterations. Also returns the Lloyd
/// objective after each assignment step.
pub fn kmeans_fit_traced(
    points: &[Vec<f64>],
    k: usize,
    seed: u64,
    params: &KMeansParams,
) -> Result<(ClusterModel, Vec<f64>)> {
    let n = points.len();
    if k == 0 || k > n {
        return Err(Error::InvalidInput(format!("k = {k} is outside 1..={n}")));
    }
    let dim = check_points(points)?;
    let mut rng = seed::rng(seed);
    let mut centers = plus_plus_init(points, k, &mut rng);
    let model_of = |centers: &[Vec<f64>]| ClusterModel {
        k,
        dim,
        centers: centers.concat(),
    };
    let mut assignment: Vec<usize> = vec![usize::MAX; n];
    let mut trace = Vec::new();
    for _ in 0..params.max_iter.max(1) {
        let model = model_of(&centers);
        let next = model.assign_all(points);
        let changed = next != assignment;
        assignment = next;
        trace.push(
            points
                .iter()
                .zip(&assignment)
                .map(|(p, &c)| sq_dist(p, &centers[c]))
                .sum(),
        );
        if !changed {
            break;
        }
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &c) in points.iter().zip(&assignment) {
            counts[c] += 1;
            for (s, x) in sums[c].iter_mut().zip(p) {
                *s += x;
            }
        }
        let mut shift: f64 = 0.0;
        let mut taken: Vec<usize> = Vec::new();
        for c in 0..k {
            let new = if counts[c] > 0 {
                sums[c].iter().map(|s| s / counts[c] as f64).collect()
            } else {
                // Repair an empty cluster with the point farthest from its center.
                let far = (0..n)
                    .filter(|i| !taken.contains(i))
                    .max_by(|&a, &b| {
                        let da = sq_dist(&points[a], &centers[assignment[a]]);
                        let db = sq_dist(&points[b], &centers[assignment[b]]);
                        da.total_cmp(&db).then(b.cmp(&a))
                    })
                    .unwrap_or(0);
                taken.push(far);
                points[far].clone()
            };
            shift = shift.max(sq_dist(&new, &centers[c]).sqrt());
            centers[c] = new;
        }
        if shift <= params.tol && params.tol > 0.0 {
            break;
        }
    }
    Ok((model_of(&centers), trace))
}

pub fn kmeans_fit(points: &[Vec<f64>], k: usize, seed: u64, params: &KMeansParams) -> Result<ClusterModel> {
    kmeans_fit_traced(points, k, seed, params).map(|(m, _)| m)
}

/// `Σ_i ‖v_i − c(v_i)‖ + ln(n)·m·K` with unsquared Euclidean distances.
/// `n` defaults to the number of points.
pub fn bic_score(model: &ClusterModel, points: &[Vec<f64>], n_override: Option<usize>) -> Result<f64> {
    for p in points {
        if p.len() != model.dim {
            return Err(Error::DimensionMismatch {
                expected: model.dim,
                actual: p.len(),
            });
        }
    }
    let dist: f64 = points
        .iter()
        .map(|p| sq_dist(p, model.center(model.assign(p))).sqrt())
        .sum();
    let n = n_override.unwrap_or(points.len()) as f64;
    Ok(dist + n.ln() * model.dim as f64 * model.k as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectKParams {
    pub kmeans: KMeansParams,
    /// Restarts per k; the lowest Lloyd objective is kept.
    pub n_init: usize,
    pub n_override: Option<usize>,
}

impl Default for SelectKParams {
    fn default() -> Self {
        SelectKParams {
            kmeans: KMeansParams::default(),
            n_init: 3,
            n_override: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KSelection {
    pub k: usize,
    pub model: ClusterModel,
    /// `(k, BIC)` for every k tried.
    pub scores: Vec<(usize, f64)>,
}

/// Fits every k in `k_min..=k_max` and returns the BIC minimizer; ties go to
/// the smaller k. Each k uses seeds derived from `(seed, k, restart)`.
pub fn select_k(
    points: &[Vec<f64>],
    k_min: usize,
    k_max: usize,
    seed: u64,
    params: &SelectKParams,
) -> Result<KSelection> {
    if k_min == 0 || k_min > k_max || k_max > points.len() {
        return Err(Error::InvalidInput(format!(
            "k range {k_min}..={k_max} is invalid for {} points",
            points.len()
        )));
    }
    check_points(points)?;
    let fits: Vec<Result<(usize, ClusterModel, f64)>> = (k_min..=k_max)
        .into_par_iter()
        .map(|k| {
            let mut best: Option<(ClusterModel, f64)> = None;
            for r in 0..params.n_init.max(1) {
                let s = seed::derive(seed, seed::STREAM_KMEANS, (k as u64) << 16 | r as u64);
                let m = kmeans_fit(points, k, s, &params.kmeans)?;
                let d = m.distortion(points);
                if best.as_ref().is_none_or(|(_, bd)| d < *bd) {
                    best = Some((m, d));
                }
            }
            let (m, _) = best.expect("at least one restart");
            let bic = bic_score(&m, points, params.n_override)?;
            Ok((k, m, bic))
        })
        .collect();
    let mut scores = Vec::new();
    let mut best: Option<(usize, ClusterModel, f64)> = None;
    for f in fits {
        let (k, m, bic) = f?;
        scores.push((k, bic));
        if best.as_ref().is_none_or(|(_, _, b)| bic < *b) {
            best = Some((k, m, bic));
        }
    }
    let (k, model, _) = best.expect("non-empty range");
    Ok(KSelection { k, model, scores })
}
