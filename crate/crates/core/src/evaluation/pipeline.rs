//! Cross-validated training and scoring of the delivery classifier and the
//! duration regressor, with both baselines and the group ablation.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::report::{AblationRow, ClassificationRow, EvalReport, PredictionRow, RegressionRow, SignificanceRow};
use super::{accuracy, kfold_split, mean, regression_metrics, train_indices, wilcoxon_test, Alternative};
use crate::corpus::{Corpus, DeliveryStatus, ProjectRecord};
use crate::error::{Error, Result};
use crate::features::{
    baseline8_matrix, extract_rows, liwc_scores, log1p_matrix, select_liwc_from_scores, FeatureContext,
    FeatureGroup, FeatureMatrix, FeatureSchema, LiwcSelection, TimePoint,
};
use crate::models::{
    choose_transform, fit_gbt, fit_ols, fit_transformed_enet, BoxCoxEnetParams, BoxCoxTransform, Design, GbtParams,
    MajorityClassifier, ModelBody, ModelFile,
};
use crate::seed;
use crate::selection::{boruta_select, stepwise_aic, vif_eliminate, BorutaParams, BorutaResult, StepwiseResult, VifReport};

/// How the baseline comparison pairs observations for the signed-rank test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pairing {
    PerFold,
    PerProject,
}

impl Pairing {
    pub fn name(self) -> &'static str {
        match self {
            Pairing::PerFold => "per_fold",
            Pairing::PerProject => "per_project",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierParams {
    /// Significance level for linguistic categories; `None` is Bonferroni 0.05.
    pub liwc_alpha: Option<f64>,
    pub vif: bool,
    pub vif_threshold: f64,
    /// Run Boruta after VIF elimination (otherwise keep all VIF survivors).
    pub boruta: bool,
    pub boruta_params: BorutaParams,
    pub gbt: GbtParams,
}

impl Default for ClassifierParams {
    fn default() -> Self {
        ClassifierParams {
            liwc_alpha: None,
            vif: true,
            vif_threshold: 10.0,
            boruta: true,
            boruta_params: BorutaParams::default(),
            gbt: GbtParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegressorParams {
    pub vif: bool,
    pub vif_threshold: f64,
    /// Run stepwise AIC on the transformed target before the elastic net.
    pub stepwise: bool,
    pub boxcox: BoxCoxEnetParams,
}

impl Default for RegressorParams {
    fn default() -> Self {
        RegressorParams {
            vif: true,
            vif_threshold: 10.0,
            stepwise: true,
            boxcox: BoxCoxEnetParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalParams {
    pub folds: usize,
    pub pairing: Pairing,
    pub classifier: ClassifierParams,
    pub regressor: RegressorParams,
}

impl Default for EvalParams {
    fn default() -> Self {
        EvalParams {
            folds: 10,
            pairing: Pairing::PerFold,
            classifier: ClassifierParams::default(),
            regressor: RegressorParams::default(),
        }
    }
}

/// Which parts of the evaluation to run.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalPlan {
    pub classification: Vec<TimePoint>,
    pub regression: Vec<TimePoint>,
    pub baselines: bool,
}

impl Default for EvalPlan {
    fn default() -> Self {
        EvalPlan {
            classification: TimePoint::ALL.to_vec(),
            regression: TimePoint::ALL.to_vec(),
            baselines: true,
        }
    }
}

/// Labeled projects with their label-free features precomputed once.
pub struct Prepared<'a> {
    pub corpus: &'a Corpus,
    pub ctx: FeatureContext,
    pub projects: Vec<&'a ProjectRecord>,
    pub on_time: Vec<bool>,
    pub durations: Vec<Option<f64>>,
    base: BTreeMap<TimePoint, FeatureMatrix>,
    liwc: Vec<(Vec<f64>, Vec<f64>)>,
}

impl<'a> Prepared<'a> {
    /// `ctx.liwc` is ignored: linguistic categories are selected per
    /// training set.
    pub fn new(corpus: &'a Corpus, ctx: &FeatureContext, tps: &[TimePoint]) -> Result<Self> {
        let mut ctx = ctx.clone();
        ctx.liwc = LiwcSelection::default();
        let projects = corpus.labeled_projects();
        if projects.is_empty() {
            return Err(Error::InvalidInput("corpus has no labeled projects".into()));
        }
        let labels: Vec<_> = projects.iter().map(|p| corpus.label_for(&p.id).expect("labeled")).collect();
        let on_time = labels.iter().map(|l| l.status == DeliveryStatus::OnTime).collect();
        let durations = labels.iter().map(|l| l.actual_duration_days).collect();
        let mut base = BTreeMap::new();
        for &tp in tps {
            base.insert(tp, extract_rows(&projects, corpus, &ctx, tp)?);
        }
        let liwc = if tps.contains(&TimePoint::TP4) {
            projects.par_iter().map(|p| liwc_scores(p, corpus.events_for(&p.id), &ctx)).collect()
        } else {
            Vec::new()
        };
        Ok(Prepared {
            corpus,
            ctx,
            projects,
            on_time,
            durations,
            base,
            liwc,
        })
    }

    pub fn len(&self) -> usize {
        self.projects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.projects.is_empty()
    }

    /// Linguistic categories chosen from the rows in `train`.
    pub fn select_liwc(&self, train: &[usize], alpha: Option<f64>) -> Result<LiwcSelection> {
        if self.liwc.is_empty() {
            return Ok(LiwcSelection::default());
        }
        let scores: Vec<(Vec<f64>, Vec<f64>)> = train.iter().map(|&i| self.liwc[i].clone()).collect();
        let y: Vec<bool> = train.iter().map(|&i| self.on_time[i]).collect();
        select_liwc_from_scores(&scores, &y, alpha)
    }

    /// Full matrix at `tp` for every labeled project, with the given
    /// linguistic columns appended at TP4.
    pub fn matrix(&self, tp: TimePoint, liwc: &LiwcSelection) -> Result<FeatureMatrix> {
        let base = self
            .base
            .get(&tp)
            .ok_or_else(|| Error::InvalidInput(format!("{tp} was not prepared")))?;
        if tp != TimePoint::TP4 || (liwc.update_categories.is_empty() && liwc.comment_categories.is_empty()) {
            return Ok(base.clone());
        }
        let mut ctx = self.ctx.clone();
        ctx.liwc = liwc.clone();
        let schema = ctx.schema(tp);
        let mut values = Vec::with_capacity(schema.len() * self.len());
        for i in 0..self.len() {
            values.extend_from_slice(base.row(i));
            let (u, c) = &self.liwc[i];
            values.extend(liwc.update_categories.iter().map(|&k| u[k]));
            values.extend(liwc.comment_categories.iter().map(|&k| c[k]));
        }
        FeatureMatrix::new(base.ids.clone(), schema, values)
    }

    pub fn baseline(&self, tp: TimePoint, one_hot: bool) -> Result<FeatureMatrix> {
        baseline8_matrix(&self.projects, tp, one_hot)
    }
}

fn names(schema: &FeatureSchema) -> Vec<String> {
    schema.features.iter().map(|f| f.name.clone()).collect()
}

/// Median-filled, log-transformed copy for the linear-algebra based steps.
fn filled_logged(train: &FeatureMatrix) -> Result<(FeatureMatrix, Vec<f64>)> {
    let fill = train.column_medians();
    let mut m = train.clone();
    m.fill_missing(&fill);
    Ok((log1p_matrix(&m)?, fill))
}

fn vif_step(design: &Design, enabled: bool, threshold: f64) -> Result<(Option<VifReport>, Vec<usize>)> {
    let all: Vec<usize> = (0..design.n_cols()).collect();
    if !enabled || design.n_cols() < 2 {
        return Ok((None, all));
    }
    let r = vif_eliminate(design, threshold)?;
    let keep = r.retained.clone();
    Ok((Some(r), keep))
}

/// Outcome of classifier feature selection on one training set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierSelection {
    /// Columns offered to selection, in matrix order.
    pub candidates: Vec<String>,
    pub vif: Option<VifReport>,
    pub boruta: Option<BorutaResult>,
    pub selected: Vec<String>,
}

/// VIF elimination on the median-filled, log-transformed columns, then
/// Boruta on the survivors. When Boruta confirms nothing, all survivors are
/// kept.
pub fn select_classifier_features(train: &FeatureMatrix, y: &[bool], params: &ClassifierParams, seed: u64) -> Result<ClassifierSelection> {
    let candidates = names(&train.schema);
    let (prepped, _) = filled_logged(train)?;
    let design = Design::from_matrix(&prepped);
    let (vif, mut keep) = vif_step(&design, params.vif, params.vif_threshold)?;
    let mut boruta = None;
    if params.boruta && !keep.is_empty() {
        let b = boruta_select(&design.select_columns(&keep), y, &params.boruta_params, seed)?;
        let confirmed: Vec<usize> = b.confirmed().iter().map(|&k| keep[k]).collect();
        if !confirmed.is_empty() {
            keep = confirmed;
        }
        boruta = Some(b);
    }
    Ok(ClassifierSelection {
        selected: keep.iter().map(|&j| candidates[j].clone()).collect(),
        candidates,
        vif,
        boruta,
    })
}

/// Boosted trees on the named raw columns; missing values stay missing.
pub fn fit_classifier(train: &FeatureMatrix, y: &[bool], tp: TimePoint, selected: &[String], params: &GbtParams) -> Result<ModelFile> {
    let chosen = train.select_named(selected)?;
    let fit = fit_gbt(&Design::from_matrix(&chosen), y, params)?;
    Ok(ModelFile::new(tp, selected.to_vec(), ModelBody::Gbt(fit.model)))
}

/// Outcome of regressor feature selection on one training set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressorSelection {
    pub candidates: Vec<String>,
    pub vif: Option<VifReport>,
    /// Target transform profiled on the VIF survivors.
    pub transform: BoxCoxTransform,
    pub intercept_only_profile: bool,
    pub stepwise: Option<StepwiseResult>,
    pub selected: Vec<String>,
}

/// Median fill and log1p, VIF elimination, λ profile on the survivors, then
/// optional stepwise AIC against the transformed target.
pub fn select_regressor_features(train: &FeatureMatrix, days: &[f64], params: &RegressorParams) -> Result<RegressorSelection> {
    let candidates = names(&train.schema);
    let (prepped, _) = filled_logged(train)?;
    let design = Design::from_matrix(&prepped);
    let (vif, mut keep) = vif_step(&design, params.vif, params.vif_threshold)?;
    let survivors = design.select_columns(&keep);
    let (transform, intercept_only_profile) = choose_transform(&survivors, days, &params.boxcox)?;
    let mut stepwise = None;
    if params.stepwise && !keep.is_empty() {
        let z: Vec<f64> = days.iter().map(|&d| transform.apply(d)).collect::<Result<_>>()?;
        let s = stepwise_aic(&survivors, &z)?;
        keep = s.selected.iter().map(|&k| keep[k]).collect();
        stepwise = Some(s);
    }
    Ok(RegressorSelection {
        selected: keep.iter().map(|&j| candidates[j].clone()).collect(),
        candidates,
        vif,
        transform,
        intercept_only_profile,
        stepwise,
    })
}

/// Cross-validated elastic net on the selected columns and transformed
/// target. The model file records the training medians used for filling.
pub fn fit_regressor(
    train: &FeatureMatrix,
    days: &[f64],
    tp: TimePoint,
    selection: &RegressorSelection,
    params: &RegressorParams,
    seed: u64,
) -> Result<ModelFile> {
    let chosen = train.select_named(&selection.selected)?;
    let (prepped, fill) = filled_logged(&chosen)?;
    let mut body = fit_transformed_enet(&Design::from_matrix(&prepped), days, selection.transform, &params.boxcox.cv, seed)?;
    body.intercept_only_profile = selection.intercept_only_profile;
    let mut model = ModelFile::new(tp, selection.selected.clone(), ModelBody::BoxcoxEnet(body));
    model.log_transform = true;
    model.fill = fill;
    Ok(model)
}

/// Scores rows of `m` (untransformed, possibly with missing values) with a
/// model file. Classifiers return the on-time probability, regressors days.
pub fn score_matrix(model: &ModelFile, m: &FeatureMatrix) -> Result<Vec<f64>> {
    let mut x = m.select_named(&model.features)?;
    if !model.fill.is_empty() {
        x.fill_missing(&model.fill);
    }
    if model.log_transform {
        x = log1p_matrix(&x)?;
    }
    let d = Design::from_matrix(&x);
    match &model.body {
        ModelBody::Gbt(g) => g.predict_proba(&d),
        ModelBody::BoxcoxEnet(b) => Ok(b.predict(&d)?.into_iter().map(|p| p.days).collect()),
        ModelBody::Linear(l) => l.predict(&d),
        ModelBody::Majority(c) => Ok(vec![if c.on_time { 1.0 } else { 0.0 }; m.n_rows()]),
    }
}

fn fold_seed(master: u64, salt: u64, fold: usize) -> u64 {
    seed::derive(master, seed::STREAM_FOLD_WORK, (salt << 16) | fold as u64)
}

fn tp_salt(task: u64, tp: TimePoint) -> u64 {
    task * 8 + tp.index() as u64
}

struct FoldOutcome {
    gbt: Vec<bool>,
    baseline: Vec<bool>,
    majority: Vec<bool>,
}

/// Class predictions for one fold: main model, 8-feature baseline, majority.
fn classify_fold(
    prep: &Prepared,
    tp: TimePoint,
    test: &[usize],
    train: &[usize],
    params: &EvalParams,
    exclude: Option<FeatureGroup>,
    baselines: bool,
    seed: u64,
) -> Result<FoldOutcome> {
    let liwc = prep.select_liwc(train, params.classifier.liwc_alpha)?;
    let mut m = prep.matrix(tp, &liwc)?;
    if let Some(g) = exclude {
        m = m.without_group(g);
    }
    let y: Vec<bool> = train.iter().map(|&i| prep.on_time[i]).collect();
    let tm = m.select_rows(train);
    let sel = select_classifier_features(&tm, &y, &params.classifier, seed)?;
    let model = fit_classifier(&tm, &y, tp, &sel.selected, &params.classifier.gbt)?;
    let gbt = score_matrix(&model, &m.select_rows(test))?.iter().map(|&p| p > 0.5).collect();
    let (mut baseline, mut majority) = (Vec::new(), Vec::new());
    if baselines {
        let b = prep.baseline(tp, false)?;
        let fit = fit_gbt(&Design::from_matrix(&b.select_rows(train)), &y, &params.classifier.gbt)?;
        baseline = fit.model.predict_proba(&Design::from_matrix(&b.select_rows(test)))?.iter().map(|&p| p > 0.5).collect();
        let maj = MajorityClassifier::fit(&y)?;
        majority = vec![maj.on_time; test.len()];
    }
    Ok(FoldOutcome { gbt, baseline, majority })
}

struct RegressionFold {
    main: Vec<f64>,
    baseline: Vec<f64>,
}

fn regress_fold(
    prep: &Prepared,
    rows: &[usize],
    tp: TimePoint,
    test: &[usize],
    train: &[usize],
    params: &EvalParams,
    baselines: bool,
    seed: u64,
) -> Result<RegressionFold> {
    let tr: Vec<usize> = train.iter().map(|&k| rows[k]).collect();
    let te: Vec<usize> = test.iter().map(|&k| rows[k]).collect();
    let liwc = prep.select_liwc(&tr, params.classifier.liwc_alpha)?;
    let m = prep.matrix(tp, &liwc)?;
    let y: Vec<f64> = tr.iter().map(|&i| prep.durations[i].expect("duration rows")).collect();
    let tm = m.select_rows(&tr);
    let sel = select_regressor_features(&tm, &y, &params.regressor)?;
    let model = fit_regressor(&tm, &y, tp, &sel, &params.regressor, seed)?;
    let main = score_matrix(&model, &m.select_rows(&te))?;
    let mut baseline = Vec::new();
    if baselines {
        let b = prep.baseline(tp, true)?;
        let ols = fit_ols(&Design::from_matrix(&b.select_rows(&tr)), &y)?;
        baseline = ols.predict(&Design::from_matrix(&b.select_rows(&te)))?;
    }
    Ok(RegressionFold { main, baseline })
}

fn check_folds(n: usize, k: usize, what: &str) -> Result<()> {
    if k < 2 || k > n {
        return Err(Error::Config(format!("{what}: need 2 <= folds <= {n}, got {k}")));
    }
    Ok(())
}

/// Stratified k-fold evaluation at each requested time point. Every step
/// that looks at labels or value distributions is fit on the training folds
/// only. Same `seed` gives the same folds and the same report.
pub fn evaluate(prep: &Prepared, plan: &EvalPlan, params: &EvalParams, seed: u64) -> Result<(EvalReport, Vec<PredictionRow>)> {
    let n = prep.len();
    let mut report = EvalReport::default();
    let mut predictions = Vec::new();
    if !plan.classification.is_empty() {
        check_folds(n, params.folds, "classification")?;
        let strat: Vec<u8> = prep.on_time.iter().map(|&b| u8::from(b)).collect();
        let folds = kfold_split(n, params.folds, Some(&strat), seed)?;
        for &tp in &plan.classification {
            let outcomes: Vec<FoldOutcome> = (0..folds.len())
                .into_par_iter()
                .map(|f| {
                    let train = train_indices(&folds, f);
                    classify_fold(prep, tp, &folds[f], &train, params, None, plan.baselines, fold_seed(seed, tp_salt(1, tp), f))
                })
                .collect::<Result<_>>()?;
            let mut per_model: Vec<(&str, Vec<f64>)> = vec![("gbt", Vec::new())];
            if plan.baselines {
                per_model.push(("baseline8", Vec::new()));
                per_model.push(("majority", Vec::new()));
            }
            let mut correct: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
            for (f, o) in outcomes.iter().enumerate() {
                let truth: Vec<bool> = folds[f].iter().map(|&i| prep.on_time[i]).collect();
                let preds: Vec<(&str, &Vec<bool>)> = if plan.baselines {
                    vec![("gbt", &o.gbt), ("baseline8", &o.baseline), ("majority", &o.majority)]
                } else {
                    vec![("gbt", &o.gbt)]
                };
                for (k, (name, pred)) in preds.iter().enumerate() {
                    per_model[k].1.push(accuracy(pred, &truth)?);
                    correct
                        .entry(name)
                        .or_default()
                        .extend(pred.iter().zip(&truth).map(|(p, t)| f64::from(u8::from(p == t))));
                    for (&i, &p) in folds[f].iter().zip(pred.iter()) {
                        predictions.push(PredictionRow {
                            task: "classification".into(),
                            tp,
                            model: name.to_string(),
                            fold: f,
                            project_id: prep.projects[i].id.clone(),
                            truth: f64::from(u8::from(prep.on_time[i])),
                            prediction: f64::from(u8::from(p)),
                        });
                    }
                }
            }
            for (name, accs) in &per_model {
                report.classification.push(ClassificationRow {
                    tp,
                    model: name.to_string(),
                    mean_accuracy: mean(accs),
                    folds: accs.clone(),
                });
            }
            if plan.baselines {
                let (a, b) = match params.pairing {
                    Pairing::PerFold => (per_model[0].1.clone(), per_model[1].1.clone()),
                    Pairing::PerProject => (correct["gbt"].clone(), correct["baseline8"].clone()),
                };
                let w = wilcoxon_test(&a, &b, Alternative::Greater)?;
                report.significance.push(SignificanceRow {
                    task: "classification".into(),
                    tp,
                    comparison: "gbt > baseline8 (accuracy)".into(),
                    pairing: params.pairing.name().into(),
                    n: w.n,
                    p_value: w.p_value,
                });
            }
        }
    }
    if !plan.regression.is_empty() {
        let rows: Vec<usize> = (0..n).filter(|&i| prep.durations[i].is_some()).collect();
        check_folds(rows.len(), params.folds, "regression")?;
        let folds = kfold_split(rows.len(), params.folds, None, seed)?;
        for &tp in &plan.regression {
            let outs: Vec<RegressionFold> = (0..folds.len())
                .into_par_iter()
                .map(|f| {
                    let train = train_indices(&folds, f);
                    regress_fold(prep, &rows, tp, &folds[f], &train, params, plan.baselines, fold_seed(seed, tp_salt(2, tp), f))
                })
                .collect::<Result<_>>()?;
            let mut models = vec![("boxcox_enet", Vec::new())];
            if plan.baselines {
                models.push(("baseline8_ols", Vec::new()));
            }
            for (f, o) in outs.iter().enumerate() {
                let truth: Vec<f64> = folds[f].iter().map(|&k| prep.durations[rows[k]].unwrap()).collect();
                let preds: Vec<&Vec<f64>> = if plan.baselines { vec![&o.main, &o.baseline] } else { vec![&o.main] };
                for (k, pred) in preds.into_iter().enumerate() {
                    models[k].1.push(regression_metrics(pred, &truth)?);
                    for (&r, &p) in folds[f].iter().zip(pred) {
                        let i = rows[r];
                        predictions.push(PredictionRow {
                            task: "regression".into(),
                            tp,
                            model: models[k].0.to_string(),
                            fold: f,
                            project_id: prep.projects[i].id.clone(),
                            truth: prep.durations[i].unwrap(),
                            prediction: p,
                        });
                    }
                }
            }
            for (name, metrics) in &models {
                report.regression.push(RegressionRow::from_folds(tp, name, metrics.clone()));
            }
            report.buffers.insert(tp, report.regression.iter().find(|r| r.tp == tp).unwrap().mean_rmse);
            if plan.baselines {
                let a: Vec<f64> = models[0].1.iter().map(|m| m.rmse).collect();
                let b: Vec<f64> = models[1].1.iter().map(|m| m.rmse).collect();
                let w = wilcoxon_test(&a, &b, Alternative::Less)?;
                report.significance.push(SignificanceRow {
                    task: "regression".into(),
                    tp,
                    comparison: "boxcox_enet < baseline8_ols (rmse)".into(),
                    pairing: Pairing::PerFold.name().into(),
                    n: w.n,
                    p_value: w.p_value,
                });
            }
        }
    }
    Ok((report, predictions))
}

/// Accuracy with each feature group removed in turn (plus the full model),
/// on the same folds and per-fold seeds.
pub fn ablate(prep: &Prepared, tp: TimePoint, groups: &[FeatureGroup], params: &EvalParams, seed: u64) -> Result<Vec<AblationRow>> {
    let n = prep.len();
    check_folds(n, params.folds, "ablation")?;
    let strat: Vec<u8> = prep.on_time.iter().map(|&b| u8::from(b)).collect();
    let folds = kfold_split(n, params.folds, Some(&strat), seed)?;
    let mut variants: Vec<Option<FeatureGroup>> = vec![None];
    variants.extend(groups.iter().copied().map(Some));
    let mut rows = Vec::new();
    let mut full = 0.0;
    for v in variants {
        let accs: Vec<f64> = (0..folds.len())
            .into_par_iter()
            .map(|f| {
                let train = train_indices(&folds, f);
                let o = classify_fold(prep, tp, &folds[f], &train, params, v, false, fold_seed(seed, tp_salt(3, tp), f))?;
                let truth: Vec<bool> = folds[f].iter().map(|&i| prep.on_time[i]).collect();
                accuracy(&o.gbt, &truth)
            })
            .collect::<Result<_>>()?;
        let acc = mean(&accs);
        if v.is_none() {
            full = acc;
        }
        rows.push(AblationRow {
            excluded: v.map_or("none".to_string(), |g| g.name().to_string()),
            mean_accuracy: acc,
            delta: acc - full,
            folds: accs,
        });
    }
    Ok(rows)
}

/// Per-fold RMSE of the full regression procedure (selection included) on
/// a fixed matrix. Used to size the recommendation buffer.
pub fn cv_regression_rmse(m: &FeatureMatrix, days: &[f64], tp: TimePoint, params: &EvalParams, seed: u64) -> Result<Vec<f64>> {
    check_folds(days.len(), params.folds, "regression")?;
    let folds = kfold_split(days.len(), params.folds, None, seed)?;
    (0..folds.len())
        .into_par_iter()
        .map(|f| {
            let train = train_indices(&folds, f);
            let y: Vec<f64> = train.iter().map(|&i| days[i]).collect();
            let truth: Vec<f64> = folds[f].iter().map(|&i| days[i]).collect();
            let tm = m.select_rows(&train);
            let sel = select_regressor_features(&tm, &y, &params.regressor)?;
            let model = fit_regressor(&tm, &y, tp, &sel, &params.regressor, fold_seed(seed, tp_salt(2, tp), f))?;
            let pred = score_matrix(&model, &m.select_rows(&folds[f]))?;
            Ok(regression_metrics(&pred, &truth)?.rmse)
        })
        .collect()
}

/// Selects features and fits the classifier on every labeled project.
pub fn train_classifier(prep: &Prepared, tp: TimePoint, params: &ClassifierParams, seed: u64) -> Result<(ClassifierSelection, ModelFile)> {
    let all: Vec<usize> = (0..prep.len()).collect();
    let liwc = prep.select_liwc(&all, params.liwc_alpha)?;
    let m = prep.matrix(tp, &liwc)?;
    let s = fold_seed(seed, tp_salt(4, tp), 0);
    let sel = select_classifier_features(&m, &prep.on_time, params, s)?;
    let model = fit_classifier(&m, &prep.on_time, tp, &sel.selected, &params.gbt)?;
    Ok((sel, model))
}

/// Selects features and fits the regressor on every project with a known
/// duration.
pub fn train_regressor(prep: &Prepared, tp: TimePoint, params: &EvalParams, seed: u64) -> Result<(RegressorSelection, ModelFile)> {
    let rows: Vec<usize> = (0..prep.len()).filter(|&i| prep.durations[i].is_some()).collect();
    if rows.len() < 3 {
        return Err(Error::InvalidInput("too few projects with a known delivery duration".into()));
    }
    let liwc = prep.select_liwc(&rows, params.classifier.liwc_alpha)?;
    let m = prep.matrix(tp, &liwc)?.select_rows(&rows);
    let y: Vec<f64> = rows.iter().map(|&i| prep.durations[i].unwrap()).collect();
    let sel = select_regressor_features(&m, &y, &params.regressor)?;
    let model = fit_regressor(&m, &y, tp, &sel, &params.regressor, fold_seed(seed, tp_salt(5, tp), 0))?;
    Ok((sel, model))
}
