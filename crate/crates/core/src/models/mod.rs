//! Classifiers, duration regressors, and their serialized form.

mod boxcox;
mod design;
mod forest;
mod gbt;
mod linear;

pub use boxcox::{
    choose_transform, default_lambda_grid, fit_boxcox_enet, fit_transformed_enet, fit_lambda, geometric_mean, lambda_grid, BoxCoxEnetModel, BoxCoxEnetParams,
    BoxCoxTransform, DurationPrediction, LambdaFit, MIN_DURATION_DAYS,
};
pub use design::Design;
pub use forest::{fit_forest, ClassTree, ForestParams, RandomForest};
pub use gbt::{fit_gbt, GNode, GTree, GbtFit, GbtModel, GbtParams};
pub use linear::{
    enet_cv, fit_enet, fit_ols, kkt_residual, standardize, EnetCvParams, EnetCvResult, EnetParams, LinearModel,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::TimePoint;

/// Predicts the more frequent class; on a tie, late (`false`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MajorityClassifier {
    pub on_time: bool,
}

impl MajorityClassifier {
    pub fn fit(y: &[bool]) -> Result<Self> {
        if y.is_empty() {
            return Err(Error::InvalidInput("majority classifier on zero rows".into()));
        }
        let pos = y.iter().filter(|&&t| t).count();
        Ok(MajorityClassifier { on_time: 2 * pos > y.len() })
    }
}

/// Recommended promise: `ceil(predicted + buffer)` days.
pub fn recommend_duration(predicted_days: f64, buffer_days: f64) -> f64 {
    (predicted_days + buffer_days).ceil()
}

pub const MODEL_FORMAT: &str = "fulfillkit.model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelBody {
    Gbt(GbtModel),
    BoxcoxEnet(BoxCoxEnetModel),
    Linear(LinearModel),
    Majority(MajorityClassifier),
}

/// A trained model with everything needed to score new feature rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    pub time_point: TimePoint,
    /// Input columns, in order, by feature name.
    pub features: Vec<String>,
    /// Inputs go through `log(1 + x)` on flagged columns before scoring.
    pub log_transform: bool,
    /// Training-set medians used to fill missing inputs (empty: no filling).
    pub fill: Vec<f64>,
    /// Safety margin added to duration predictions, in days.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub buffer_days: Option<f64>,
    pub body: ModelBody,
}

impl ModelFile {
    pub fn new(time_point: TimePoint, features: Vec<String>, body: ModelBody) -> Self {
        ModelFile {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            time_point,
            features,
            log_transform: false,
            fill: Vec::new(),
            buffer_days: None,
            body,
        }
    }

    /// JSON with shortest round-trip floats, so re-reading is bit-exact.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// Parses [`Self::to_json`] output; `#` comment lines are ignored.
    pub fn from_json(text: &str) -> Result<Self> {
        let body: String = text.lines().filter(|l| !l.starts_with('#')).collect::<Vec<_>>().join("\n");
        let de = &mut serde_json::Deserializer::from_str(&body);
        let m: ModelFile = serde_path_to_error::deserialize(de)
            .map_err(|e| Error::SchemaMismatch(format!("model file at `{}`: {}", e.path(), e.inner())))?;
        if m.format != MODEL_FORMAT {
            return Err(Error::SchemaMismatch(format!("not a model file (format `{}`)", m.format)));
        }
        if m.version != MODEL_VERSION {
            return Err(Error::SchemaMismatch(format!(
                "unsupported model version {} (expected {MODEL_VERSION})",
                m.version
            )));
        }
        if !m.fill.is_empty() && m.fill.len() != m.features.len() {
            return Err(Error::SchemaMismatch("fill values do not match the feature list".into()));
        }
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn majority_ties_go_to_late() {
        assert!(!MajorityClassifier::fit(&[true, false]).unwrap().on_time);
        assert!(MajorityClassifier::fit(&[true, true, false]).unwrap().on_time);
    }

    #[test]
    fn recommendation_rounds_up() {
        assert_eq!(recommend_duration(30.2, 4.5), 35.0);
        assert_eq!(recommend_duration(30.0, 0.0), 30.0);
    }

    #[test]
    fn model_file_round_trip_and_version_check() {
        let mut m = ModelFile::new(
            TimePoint::TP2,
            vec!["a".into()],
            ModelBody::Linear(LinearModel {
                means: vec![0.1 + 0.2],
                sds: vec![1.0 / 3.0],
                coef: vec![-2.5e-17],
                intercept: 4.0,
                lambda1: 0.0,
                lambda2: 1e-3,
            }),
        );
        m.fill = vec![0.7];
        let text = format!("# header\n{}", m.to_json().unwrap());
        assert_eq!(ModelFile::from_json(&text).unwrap(), m);
        let bumped = m.to_json().unwrap().replace("\"version\": 1", "\"version\": 9");
        let e = ModelFile::from_json(&bumped).unwrap_err().to_string();
        assert!(e.contains("version 9"), "{e}");
    }
}
