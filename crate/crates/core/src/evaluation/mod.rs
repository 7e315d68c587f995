//! Cross-validation, metrics, significance tests and the evaluation pipeline.

mod cv;
mod metrics;
mod pipeline;
mod report;
mod stats;

pub use cv::{kfold_split, train_indices};
pub use metrics::{accuracy, regression_metrics, RegressionMetrics};
pub use stats::{
    binomial_tails, mean, median, midranks, normal_cdf, signed_rank_null_pmf, std_dev, variance,
    welch_t_test, wilcoxon_test, wilcoxon_test_with, Alternative, TTestResult, WilcoxonMethod,
    WilcoxonResult, WILCOXON_EXACT_MAX_N,
};
pub use pipeline::{
    ablate, cv_regression_rmse, evaluate, fit_classifier, fit_regressor, score_matrix, select_classifier_features,
    select_regressor_features, train_classifier, train_regressor, ClassifierParams, ClassifierSelection, EvalParams,
    EvalPlan, Pairing, Prepared, RegressorParams, RegressorSelection,
};
pub use report::{
    predictions_csv, AblationRow, ClassificationRow, EvalReport, PredictionRow, RegressionRow,
    SignificanceRow,
};
