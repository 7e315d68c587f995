use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{mean, RegressionMetrics};
use crate::error::Result;
use crate::features::TimePoint;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationRow {
    pub tp: TimePoint,
    pub model: String,
    pub mean_accuracy: f64,
    pub folds: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionRow {
    pub tp: TimePoint,
    pub model: String,
    pub mean_rmse: f64,
    /// Mean over folds; `None` if any fold had a degenerate normalizer.
    pub mean_nrmse_range: Option<f64>,
    pub mean_nrmse_mean: Option<f64>,
    pub folds: Vec<RegressionMetrics>,
}

fn mean_opt(xs: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Option<Vec<f64>> = xs.collect();
    v.filter(|v| !v.is_empty()).map(|v| mean(&v))
}

impl RegressionRow {
    pub fn from_folds(tp: TimePoint, model: &str, folds: Vec<RegressionMetrics>) -> Self {
        let rmse: Vec<f64> = folds.iter().map(|m| m.rmse).collect();
        RegressionRow {
            tp,
            model: model.to_string(),
            mean_rmse: mean(&rmse),
            mean_nrmse_range: mean_opt(folds.iter().map(|m| m.nrmse_range)),
            mean_nrmse_mean: mean_opt(folds.iter().map(|m| m.nrmse_mean)),
            folds,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignificanceRow {
    pub task: String,
    pub tp: TimePoint,
    pub comparison: String,
    pub pairing: String,
    pub n: usize,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    /// Feature group left out, or `none` for the full model.
    pub excluded: String,
    pub mean_accuracy: f64,
    /// Accuracy minus the full model's accuracy.
    pub delta: f64,
    pub folds: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub classification: Vec<ClassificationRow>,
    pub regression: Vec<RegressionRow>,
    pub significance: Vec<SignificanceRow>,
    pub ablation_tp: Option<TimePoint>,
    pub ablation: Vec<AblationRow>,
    /// Duration buffer per time point (mean cross-validated RMSE, days).
    pub buffers: BTreeMap<TimePoint, f64>,
}

fn opt(x: Option<f64>) -> String {
    x.map_or(String::new(), |v| v.to_string())
}

fn fold_label(f: Option<usize>) -> String {
    f.map_or("mean".to_string(), |f| f.to_string())
}

impl EvalReport {
    pub fn classification_for(&self, tp: TimePoint, model: &str) -> Option<&ClassificationRow> {
        self.classification.iter().find(|r| r.tp == tp && r.model == model)
    }

    pub fn regression_for(&self, tp: TimePoint, model: &str) -> Option<&RegressionRow> {
        self.regression.iter().find(|r| r.tp == tp && r.model == model)
    }

    pub fn significance_for(&self, task: &str, tp: TimePoint) -> Option<&SignificanceRow> {
        self.significance.iter().find(|r| r.task == task && r.tp == tp)
    }

    /// Long-format table: `section,tp,model,metric,fold,value`. Fold is
    /// `mean` for aggregate rows.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["section", "tp", "model", "metric", "fold", "value"])?;
        let mut put = |section: &str, tp: &str, model: &str, metric: &str, fold: Option<usize>, value: String| {
            w.write_record([section, tp, model, metric, &fold_label(fold), &value])
        };
        for r in &self.classification {
            let tp = r.tp.to_string();
            for (f, a) in r.folds.iter().enumerate() {
                put("classification", &tp, &r.model, "accuracy", Some(f), a.to_string())?;
            }
            put("classification", &tp, &r.model, "accuracy", None, r.mean_accuracy.to_string())?;
        }
        for r in &self.regression {
            let tp = r.tp.to_string();
            for (f, m) in r.folds.iter().enumerate() {
                put("regression", &tp, &r.model, "rmse", Some(f), m.rmse.to_string())?;
                put("regression", &tp, &r.model, "nrmse_range", Some(f), opt(m.nrmse_range))?;
                put("regression", &tp, &r.model, "nrmse_mean", Some(f), opt(m.nrmse_mean))?;
            }
            put("regression", &tp, &r.model, "rmse", None, r.mean_rmse.to_string())?;
            put("regression", &tp, &r.model, "nrmse_range", None, opt(r.mean_nrmse_range))?;
            put("regression", &tp, &r.model, "nrmse_mean", None, opt(r.mean_nrmse_mean))?;
        }
        for s in &self.significance {
            let metric = format!("p_value[{}]", s.pairing);
            put("significance", &s.tp.to_string(), &s.comparison, &metric, None, s.p_value.to_string())?;
        }
        if let Some(tp) = self.ablation_tp {
            let tp = tp.to_string();
            for a in &self.ablation {
                let model = format!("without_{}", a.excluded);
                for (f, v) in a.folds.iter().enumerate() {
                    put("ablation", &tp, &model, "accuracy", Some(f), v.to_string())?;
                }
                put("ablation", &tp, &model, "accuracy", None, a.mean_accuracy.to_string())?;
                put("ablation", &tp, &model, "delta", None, a.delta.to_string())?;
            }
        }
        for (tp, b) in &self.buffers {
            put("buffer", &tp.to_string(), "boxcox_enet", "buffer_days", None, b.to_string())?;
        }
        let bytes = w.into_inner().map_err(|e| crate::Error::InvalidInput(format!("csv: {e}")))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn to_markdown(&self) -> String {
        let mut s = String::new();
        if !self.classification.is_empty() {
            s.push_str("## Delivery classification (accuracy)\n\n| TP | model | mean | folds |\n|---|---|---|---|\n");
            for r in &self.classification {
                let folds: Vec<String> = r.folds.iter().map(|a| format!("{a:.3}")).collect();
                let _ = writeln!(s, "| {} | {} | {:.4} | {} |", r.tp, r.model, r.mean_accuracy, folds.join(" "));
            }
            s.push('\n');
        }
        if !self.regression.is_empty() {
            s.push_str("## Delivery duration (days)\n\n| TP | model | RMSE | NRMSE@A | NRMSE@B |\n|---|---|---|---|---|\n");
            let f = |x: Option<f64>| x.map_or("n/a".to_string(), |v| format!("{v:.4}"));
            for r in &self.regression {
                let _ = writeln!(
                    s,
                    "| {} | {} | {:.3} | {} | {} |",
                    r.tp,
                    r.model,
                    r.mean_rmse,
                    f(r.mean_nrmse_range),
                    f(r.mean_nrmse_mean)
                );
            }
            s.push('\n');
        }
        if !self.significance.is_empty() {
            s.push_str("## Wilcoxon signed-rank (one-sided)\n\n| task | TP | comparison | pairing | n | p |\n|---|---|---|---|---|---|\n");
            for r in &self.significance {
                let _ = writeln!(s, "| {} | {} | {} | {} | {} | {:.4e} |", r.task, r.tp, r.comparison, r.pairing, r.n, r.p_value);
            }
            s.push('\n');
        }
        if let Some(tp) = self.ablation_tp {
            let _ = writeln!(s, "## Ablation at {tp}\n\n| excluded | accuracy | delta |\n|---|---|---|");
            for a in &self.ablation {
                let _ = writeln!(s, "| {} | {:.4} | {:+.4} |", a.excluded, a.mean_accuracy, a.delta);
            }
            s.push('\n');
        }
        if !self.buffers.is_empty() {
            s.push_str("## Recommended buffers\n\n| TP | days |\n|---|---|\n");
            for (tp, b) in &self.buffers {
                let _ = writeln!(s, "| {tp} | {b:.2} |");
            }
        }
        s
    }
}

/// One out-of-fold prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub task: String,
    pub tp: TimePoint,
    pub model: String,
    pub fold: usize,
    pub project_id: String,
    pub truth: f64,
    pub prediction: f64,
}

pub fn predictions_csv(rows: &[PredictionRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["task", "tp", "model", "fold", "project_id", "truth", "prediction"])?;
    for r in rows {
        w.write_record([
            r.task.as_str(),
            &r.tp.to_string(),
            &r.model,
            &r.fold.to_string(),
            &r.project_id,
            &r.truth.to_string(),
            &r.prediction.to_string(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| crate::Error::InvalidInput(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
