use serde::{Deserialize, Serialize};

use super::linear::{enet_cv, fit_enet, EnetCvParams, LinearModel};
use super::Design;
use crate::error::{Error, Result};
use crate::linalg::Projector;

/// Smallest duration an inverted prediction may take, in days.
pub const MIN_DURATION_DAYS: f64 = 1.0;

/// Geometric-mean normalized Box-Cox transform:
/// `(y^λ - 1) / (λ·GM^(λ-1))`, or `GM·ln y` at `λ = 0`.
/// With `GM = 1` and `λ = 0` this is the plain log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxCoxTransform {
    pub lambda: f64,
    pub geometric_mean: f64,
}

fn check_positive(y: f64) -> Result<()> {
    if y > 0.0 && y.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("box-cox needs a positive finite value, got {y}")))
    }
}

pub fn geometric_mean(y: &[f64]) -> Result<f64> {
    if y.is_empty() {
        return Err(Error::InvalidInput("geometric mean of nothing".into()));
    }
    for &v in y {
        check_positive(v)?;
    }
    Ok((y.iter().map(|v| v.ln()).sum::<f64>() / y.len() as f64).exp())
}

impl BoxCoxTransform {
    pub fn plain_log() -> Self {
        BoxCoxTransform {
            lambda: 0.0,
            geometric_mean: 1.0,
        }
    }

    pub fn apply(&self, y: f64) -> Result<f64> {
        check_positive(y)?;
        let (l, gm) = (self.lambda, self.geometric_mean);
        Ok(if l == 0.0 {
            gm * y.ln()
        } else {
            // expm1 keeps the small-λ limit accurate.
            let a = l * y.ln();
            let num = if a.abs() < 0.5 { a.exp_m1() } else { y.powf(l) - 1.0 };
            num / (l * gm.powf(l - 1.0))
        })
    }

    /// Exact inverse of [`Self::apply`], or NaN outside its range.
    pub fn invert_raw(&self, z: f64) -> f64 {
        let (l, gm) = (self.lambda, self.geometric_mean);
        if l == 0.0 {
            (z / gm).exp()
        } else {
            let base = l * z * gm.powf(l - 1.0);
            if base.abs() < 0.5 {
                (base.ln_1p() / l).exp()
            } else if base > -1.0 {
                (1.0 + base).powf(1.0 / l)
            } else {
                f64::NAN
            }
        }
    }

    /// Inverse floored at [`MIN_DURATION_DAYS`]; the flag reports a clamp
    /// (including out-of-range input).
    pub fn invert(&self, z: f64) -> (f64, bool) {
        let y = self.invert_raw(z);
        if y.is_finite() && y >= MIN_DURATION_DAYS {
            (y, false)
        } else {
            (MIN_DURATION_DAYS, true)
        }
    }
}

/// λ grid over `[-1, 1]` with the given step (0.01 by default).
pub fn lambda_grid(step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && step <= 2.0) {
        return Err(Error::Config(format!("λ grid step must be in (0, 2], got {step}")));
    }
    let k = (1.0 / step).round() as i64;
    if ((k as f64) * step - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!("λ grid step {step} must divide 1")));
    }
    Ok((-k..=k).map(|i| i as f64 / k as f64).collect())
}

pub fn default_lambda_grid() -> Vec<f64> {
    lambda_grid(0.01).expect("valid step")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaFit {
    pub transform: BoxCoxTransform,
    /// `(λ, profile log-likelihood)` over the grid.
    pub profile: Vec<(f64, f64)>,
    /// Set when the design fits the sample exactly and λ was profiled
    /// against an intercept-only model instead.
    pub intercept_only: bool,
}

/// Maximizes `-n/2 · ln(SSE(λ)/n)` over `grid`, where SSE is the residual
/// sum of squares of the normalized transform regressed on `x` by least
/// squares. Ties go to the λ closest to 0.
pub fn fit_lambda(x: &Design, y: &[f64], grid: &[f64]) -> Result<LambdaFit> {
    let n = y.len();
    if x.n_rows() != n {
        return Err(Error::DimensionMismatch { expected: x.n_rows(), actual: n });
    }
    if grid.is_empty() || n < 2 {
        return Err(Error::InvalidInput("λ profile needs a grid and at least two rows".into()));
    }
    let gm = geometric_mean(y)?;
    let mut proj = Projector::new(&x.to_nalgebra())?;
    let mut intercept_only = false;
    if proj.rank() + 1 >= n {
        proj = Projector::new(&nalgebra::DMatrix::zeros(n, 0))?;
        intercept_only = true;
    }
    let mut profile = Vec::with_capacity(grid.len());
    for &l in grid {
        let t = BoxCoxTransform { lambda: l, geometric_mean: gm };
        let z: Vec<f64> = y.iter().map(|&v| t.apply(v)).collect::<Result<_>>()?;
        let sse = proj.residual_ss(&z).max(1e-300);
        profile.push((l, -0.5 * n as f64 * (sse / n as f64).ln()));
    }
    let mut order: Vec<usize> = (0..grid.len()).collect();
    order.sort_by(|&a, &b| grid[a].abs().total_cmp(&grid[b].abs()).then(grid[a].total_cmp(&grid[b])));
    let mut best = order[0];
    for &k in &order[1..] {
        if profile[k].1 > profile[best].1 {
            best = k;
        }
    }
    Ok(LambdaFit {
        transform: BoxCoxTransform {
            lambda: grid[best],
            geometric_mean: gm,
        },
        profile,
        intercept_only,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoxCoxEnetParams {
    /// Use the unnormalized `ln y` instead of profiling λ.
    pub plain_log: bool,
    pub lambda_step: f64,
    pub cv: EnetCvParams,
}

impl Default for BoxCoxEnetParams {
    fn default() -> Self {
        BoxCoxEnetParams {
            plain_log: false,
            lambda_step: 0.01,
            cv: EnetCvParams::default(),
        }
    }
}

/// Elastic net on the Box-Cox transformed duration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxCoxEnetModel {
    pub transform: BoxCoxTransform,
    pub intercept_only_profile: bool,
    pub linear: LinearModel,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DurationPrediction {
    pub days: f64,
    pub clamped: bool,
}

pub fn fit_boxcox_enet(x: &Design, y: &[f64], params: &BoxCoxEnetParams, seed: u64) -> Result<BoxCoxEnetModel> {
    let (transform, intercept_only) = choose_transform(x, y, params)?;
    let mut m = fit_transformed_enet(x, y, transform, &params.cv, seed)?;
    m.intercept_only_profile = intercept_only;
    Ok(m)
}

/// The profiled Box-Cox transform for `y` given `x` (or plain `ln y`), and
/// whether the profile fell back to an intercept-only fit.
pub fn choose_transform(x: &Design, y: &[f64], params: &BoxCoxEnetParams) -> Result<(BoxCoxTransform, bool)> {
    if params.plain_log {
        return Ok((BoxCoxTransform::plain_log(), false));
    }
    let f = fit_lambda(x, y, &lambda_grid(params.lambda_step)?)?;
    Ok((f.transform, f.intercept_only))
}

/// Cross-validated elastic net on `transform(y)`.
pub fn fit_transformed_enet(
    x: &Design,
    y: &[f64],
    transform: BoxCoxTransform,
    cv: &EnetCvParams,
    seed: u64,
) -> Result<BoxCoxEnetModel> {
    let z: Vec<f64> = y.iter().map(|&v| transform.apply(v)).collect::<Result<_>>()?;
    let best = enet_cv(x, &z, cv, seed)?;
    let linear = fit_enet(x, &z, best.lambda1, best.lambda2, &cv.enet)?;
    Ok(BoxCoxEnetModel {
        transform,
        intercept_only_profile: false,
        linear,
    })
}

impl BoxCoxEnetModel {
    pub fn predict(&self, x: &Design) -> Result<Vec<DurationPrediction>> {
        Ok(self
            .linear
            .predict(x)?
            .into_iter()
            .map(|z| {
                let (days, clamped) = self.transform.invert(z);
                DurationPrediction { days, clamped }
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use rand::Rng as _;
    use rand_distr::StandardNormal;

    use super::*;
    use crate::seed;

    fn t(lambda: f64, gm: f64) -> BoxCoxTransform {
        BoxCoxTransform { lambda, geometric_mean: gm }
    }

    #[test]
    fn hand_values() {
        assert_eq!(t(1.0, 37.0).apply(5.0).unwrap(), 4.0);
        assert_eq!(t(0.0, 1.0).apply(std::f64::consts::E).unwrap(), 1.0);
        assert!((t(0.5, 1.0).apply(4.0).unwrap() - 2.0).abs() < 1e-15);
        assert!(t(0.5, 1.0).apply(0.0).is_err());
        assert_eq!(t(1.0, 3.0).invert(4.0), (5.0, false));
    }

    #[test]
    fn small_lambda_approaches_the_log_branch() {
        for y in [0.5, 2.0, 100.0] {
            let a = t(1e-8, 2.0).apply(y).unwrap();
            let b = t(0.0, 2.0).apply(y).unwrap();
            assert!((a - b).abs() < 1e-6, "{y}: {a} vs {b}");
        }
    }

    #[test]
    fn round_trip_at_a_typical_setting() {
        let tr = t(0.11, 180.0);
        let (y, c) = tr.invert(tr.apply(365.0).unwrap());
        assert!(!c && (y - 365.0).abs() < 1e-6);
    }

    #[test]
    fn inverse_clamps_below_one_day() {
        assert_eq!(t(0.0, 1.0).invert(-5.0), (1.0, true));
        assert_eq!(t(0.5, 1.0).invert(-3.0), (1.0, true));
    }

    #[test]
    fn grid_has_201_points_by_default() {
        let g = default_lambda_grid();
        assert_eq!((g.len(), g[0], g[100], g[200]), (201, -1.0, 0.0, 1.0));
        assert!(lambda_grid(0.03).is_err());
    }

    #[test]
    fn profile_recovers_the_generating_lambda() {
        let mut rng = seed::rng(7);
        let n = 500;
        let xs: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        for target in [-0.5, 0.0, 0.5, 1.0] {
            let raw = t(target, 1.0);
            // Linear predictor spanning y in [1.5, 30].
            let (lo, hi) = (raw.apply(1.5).unwrap(), raw.apply(30.0).unwrap());
            let y: Vec<f64> = xs
                .iter()
                .map(|&x| raw.invert_raw(lo + (hi - lo) * x + 0.01 * rng.sample::<f64, _>(StandardNormal)))
                .collect();
            let d = Design::from_columns(vec![xs.clone()]).unwrap();
            let f = fit_lambda(&d, &y, &default_lambda_grid()).unwrap();
            assert!((f.transform.lambda - target).abs() <= 0.05, "{target} -> {}", f.transform.lambda);
            assert!(!f.intercept_only);
        }
    }

    #[test]
    fn exact_fit_design_falls_back_to_intercept_only() {
        let d = Design::from_columns(vec![vec![1.0, 2.0, 3.0], vec![0.0, 1.0, 0.0]]).unwrap();
        let f = fit_lambda(&d, &[1.0, 2.0, 5.0], &default_lambda_grid()).unwrap();
        assert!(f.intercept_only);
    }

    #[test]
    fn flat_profile_ties_go_to_zero() {
        // Constant response: every λ leaves zero residual.
        let d = Design::from_columns(vec![vec![0.0, 1.0, 2.0, 3.0]]).unwrap();
        let f = fit_lambda(&d, &[2.0; 4], &default_lambda_grid()).unwrap();
        assert_eq!(f.transform.lambda, 0.0);
    }

    #[test]
    fn constant_model_predicts_its_target() {
        let tr = t(0.3, 50.0);
        let m = BoxCoxEnetModel {
            transform: tr,
            intercept_only_profile: false,
            linear: LinearModel {
                means: vec![0.0],
                sds: vec![1.0],
                coef: vec![0.0],
                intercept: tr.apply(100.0).unwrap(),
                lambda1: 0.0,
                lambda2: 0.0,
            },
        };
        let p = m.predict(&Design::from_columns(vec![vec![-1e6, 3.0]]).unwrap()).unwrap();
        assert!(p.iter().all(|d| (d.days - 100.0).abs() < 1e-9 && !d.clamped));
    }

    proptest! {
        #[test]
        fn invert_undoes_apply(y in 1.0f64..1e4, l in -1.0f64..1.0, gm in 1.0f64..500.0) {
            let tr = t(l, gm);
            let (back, clamped) = tr.invert(tr.apply(y).unwrap());
            prop_assert!(!clamped);
            prop_assert!((back - y).abs() <= 1e-9 * y);
        }
    }
}
