//! One function per subcommand. Each reads only the artifacts listed in its
//! doc comment and writes through [`write_if_changed`].

use std::path::{Path, PathBuf};

use fulfillkit_core::clustering::{build_semantic_model, cluster_difficulty, SemanticModel};
use fulfillkit_core::corpus::{
    filter_successful, generate_synthetic, load_corpus, ActivityEvent, Corpus, CorpusPaths, DeliveryStatus, ProjectRecord,
    EVENTS_FILE, LABELS_FILE, PROJECTS_FILE,
};
use fulfillkit_core::embeddings::{embed_rewards, EmbeddingTable};
use fulfillkit_core::evaluation::{
    ablate, cv_regression_rmse, evaluate, fit_classifier, fit_regressor, mean, predictions_csv, score_matrix,
    select_classifier_features, select_regressor_features, ClassifierSelection, EvalPlan, EvalReport, Prepared,
    RegressorSelection,
};
use fulfillkit_core::features::{
    extract_features, extract_matrix, select_liwc_categories, FeatureContext, FeatureGroup, FeatureMatrix, TimePoint,
};
use fulfillkit_core::models::{recommend_duration, ModelFile};
use fulfillkit_core::seed;
use fulfillkit_core::text::{CategoryDictionary, StopWords, Tokenizer};
use fulfillkit_core::{Error, Result};
use serde::{Deserialize, Serialize};

use crate::artifacts::{read_artifact, strip_header, write_if_changed, Layout, Provenance, WriteOutcome};
use crate::config::RunConfig;
use crate::{CliError, Command, PredictArgs};

struct Env<'a> {
    cfg: &'a RunConfig,
    layout: Layout,
    prov: Provenance,
    name: &'static str,
}

impl Env<'_> {
    fn write(&self, path: &Path, body: &str) -> Result<()> {
        let outcome = write_if_changed(path, &self.prov.stamp(path, body))?;
        let verb = match outcome {
            WriteOutcome::Written => "wrote",
            WriteOutcome::Unchanged => "unchanged",
        };
        eprintln!("{}: {verb} {}", self.name, path.display());
        Ok(())
    }

    fn seed(&self) -> u64 {
        self.cfg.master_seed()
    }

    /// Seed for a per-time-point stage, distinct from the evaluation folds.
    fn stage_seed(&self, stage: u64, tp: TimePoint) -> u64 {
        seed::derive(self.seed(), seed::STREAM_FOLD_WORK, (1 << 32) | (stage << 8) | tp.index() as u64)
    }

    fn tokenizer(&self) -> Result<Tokenizer> {
        let sw = match &self.cfg.paths.stopwords {
            Some(p) => StopWords::load(p)?,
            None => StopWords::english(),
        };
        Ok(Tokenizer::new(sw))
    }

    fn dictionary(&self) -> Result<CategoryDictionary> {
        match &self.cfg.paths.dictionary {
            Some(p) => CategoryDictionary::load(p),
            None => Ok(CategoryDictionary::bundled()),
        }
    }

    fn corpus(&self) -> Result<Corpus> {
        let paths = match &self.cfg.paths.corpus {
            Some(p) => CorpusPaths {
                projects: p.clone(),
                events: self.cfg.paths.events.clone(),
                labels: self.cfg.paths.labels.clone(),
            },
            None => {
                let dir = self.layout.corpus_dir();
                let paths = CorpusPaths::in_dir(&dir);
                read_artifact(&paths.projects, "synth")?;
                paths
            }
        };
        Ok(filter_successful(&load_corpus(&paths)?, self.cfg.corpus.min_goal))
    }

    fn embeddings(&self) -> Result<EmbeddingTable> {
        let path = self.cfg.paths.embeddings.clone().unwrap_or_else(|| self.layout.embeddings());
        EmbeddingTable::parse(&read_artifact(&path, "embed")?)
    }

    fn semantic(&self) -> Result<SemanticModel> {
        SemanticModel::from_json(strip_header(&read_artifact(&self.layout.semantic_model(), "cluster")?))
    }

    fn context(&self) -> Result<FeatureContext> {
        let mut ctx = FeatureContext::new(self.tokenizer()?, self.dictionary()?, Some(self.semantic()?));
        ctx.n_slots = self.cfg.features.n_slots;
        Ok(ctx)
    }

    fn features(&self, tp: TimePoint) -> Result<FeatureMatrix> {
        let csv = read_artifact(&self.layout.features(tp), "featurize")?;
        let schema = read_artifact(&self.layout.feature_schema(tp), "featurize")?;
        FeatureMatrix::from_csv(&csv, &schema)
    }

    fn selection(&self, tp: TimePoint) -> Result<SelectionFile> {
        let text = read_artifact(&self.layout.selection(tp), "select")?;
        Ok(serde_json::from_str(strip_header(&text))?)
    }

    fn model(&self, path: &Path, producer: &str) -> Result<ModelFile> {
        ModelFile::from_json(&read_artifact(path, producer)?)
    }
}

pub fn dispatch(command: &Command, cfg: &RunConfig) -> std::result::Result<(), CliError> {
    let name = match command {
        Command::Synth => "synth",
        Command::Embed => "embed",
        Command::Cluster => "cluster",
        Command::Featurize => "featurize",
        Command::Select => "select",
        Command::TrainClassifier => "train-classifier",
        Command::TrainRegressor => "train-regressor",
        Command::Evaluate { .. } => "evaluate",
        Command::Predict(_) => "predict",
        Command::Ablate => "ablate",
        Command::CheckConfig | Command::DefaultConfig => return Ok(()),
    };
    let env = Env {
        cfg,
        layout: Layout::new(&cfg.run.out_dir),
        prov: Provenance {
            config_hash: cfg.hash(),
            master_seed: cfg.master_seed(),
        },
        name,
    };
    match command {
        Command::Synth => synth(&env),
        Command::Embed => embed(&env),
        Command::Cluster => cluster(&env),
        Command::Featurize => featurize(&env),
        Command::Select => select(&env),
        Command::TrainClassifier => train_classifier(&env),
        Command::TrainRegressor => train_regressor(&env),
        Command::Evaluate { .. } => evaluate_cmd(&env),
        Command::Predict(args) => predict(&env, args),
        Command::Ablate => ablate_cmd(&env),
        Command::CheckConfig | Command::DefaultConfig => Ok(()),
    }
    .map_err(CliError::Core)
}

/// Writes `corpus/{corpus,events,labels}.jsonl`.
fn synth(env: &Env) -> Result<()> {
    let corpus = generate_synthetic(&env.cfg.synth, env.seed())?;
    let dir = env.layout.corpus_dir();
    env.write(&dir.join(PROJECTS_FILE), &corpus.projects_jsonl())?;
    env.write(&dir.join(EVENTS_FILE), &corpus.events_jsonl())?;
    env.write(&dir.join(LABELS_FILE), &corpus.labels_jsonl())
}

/// Reads the corpus; writes `embeddings.txt`.
fn embed(env: &Env) -> Result<()> {
    let corpus = env.corpus()?;
    let fit = embed_rewards(&corpus, &env.tokenizer()?, &env.cfg.embed, env.seed())?;
    env.write(&env.layout.embeddings(), &fit.table.to_text())
}

/// Reads the corpus and embeddings; writes `semantic_model.json` and, when
/// labels exist, `difficulty.csv`.
fn cluster(env: &Env) -> Result<()> {
    let corpus = env.corpus()?;
    let table = env.embeddings()?;
    let tok = env.tokenizer()?;
    let model = build_semantic_model(&corpus, &table, &tok, &env.cfg.cluster, env.seed())?;
    env.write(&env.layout.semantic_model(), &format!("{}\n", model.to_json()))?;
    let labeled: Vec<_> = corpus
        .labeled_projects()
        .into_iter()
        .map(|p| (p, corpus.label_for(&p.id).unwrap().status))
        .collect();
    if labeled.is_empty() {
        eprintln!("cluster: no labels; skipping difficulty.csv");
        return Ok(());
    }
    let report = cluster_difficulty(&labeled, &model, &tok)?;
    env.write(&env.layout.difficulty(), &report.to_csv())
}

/// Reads the corpus and semantic model; writes `features/<TP>.csv` and its
/// schema for every project. Linguistic categories are chosen on all
/// labeled projects.
fn featurize(env: &Env) -> Result<()> {
    let corpus = env.corpus()?;
    let mut ctx = env.context()?;
    let labeled: Vec<(&ProjectRecord, &[ActivityEvent], bool)> = corpus
        .labeled_projects()
        .into_iter()
        .map(|p| (p, corpus.events_for(&p.id), corpus.label_for(&p.id).unwrap().status == DeliveryStatus::OnTime))
        .collect();
    ctx.liwc = select_liwc_categories(&labeled, &ctx, env.cfg.features.liwc_alpha)?;
    for &tp in &env.cfg.run.time_points {
        let m = extract_matrix(&corpus, &ctx, tp)?;
        env.write(&env.layout.features(tp), &m.to_csv()?)?;
        env.write(&env.layout.feature_schema(tp), &format!("{}\n", m.schema_json()?))?;
    }
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct SelectionFile {
    time_point: TimePoint,
    classifier: ClassifierSelection,
    regressor: Option<RegressorSelection>,
}

/// Labeled rows of a feature matrix, with targets.
struct Labeled {
    matrix: FeatureMatrix,
    on_time: Vec<bool>,
    duration_rows: Vec<usize>,
    durations: Vec<f64>,
}

fn labeled_rows(m: &FeatureMatrix, corpus: &Corpus) -> Result<Labeled> {
    let rows: Vec<usize> = (0..m.n_rows()).filter(|&i| corpus.label_for(&m.ids[i]).is_some()).collect();
    if rows.is_empty() {
        return Err(Error::InvalidInput("no labeled projects in the feature matrix".into()));
    }
    let matrix = m.select_rows(&rows);
    let labels: Vec<_> = matrix.ids.iter().map(|id| corpus.label_for(id).unwrap()).collect();
    let on_time = labels.iter().map(|l| l.status == DeliveryStatus::OnTime).collect();
    let duration_rows: Vec<usize> = (0..labels.len()).filter(|&i| labels[i].actual_duration_days.is_some()).collect();
    let durations = duration_rows.iter().map(|&i| labels[i].actual_duration_days.unwrap()).collect();
    Ok(Labeled {
        matrix,
        on_time,
        duration_rows,
        durations,
    })
}

fn names_of(all: &[String], idx: &[usize]) -> Vec<String> {
    idx.iter().map(|&j| all[j].clone()).collect()
}

/// Reads features and labels; writes `selection/<TP>.json` plus VIF,
/// Boruta and stepwise tables.
fn select(env: &Env) -> Result<()> {
    let corpus = env.corpus()?;
    let params = env.cfg.eval_params();
    for &tp in &env.cfg.run.time_points {
        let l = labeled_rows(&env.features(tp)?, &corpus)?;
        let cls = select_classifier_features(&l.matrix, &l.on_time, &params.classifier, env.stage_seed(1, tp))?;
        if let Some(v) = &cls.vif {
            env.write(&env.layout.selection_table(tp, "classifier_vif"), &v.to_csv(&cls.candidates))?;
        }
        if let Some(b) = &cls.boruta {
            let offered = cls.vif.as_ref().map_or(cls.candidates.clone(), |v| names_of(&cls.candidates, &v.retained));
            env.write(&env.layout.selection_table(tp, "boruta"), &b.to_csv(&offered))?;
        }
        let reg = if l.durations.len() >= 3 {
            let m = l.matrix.select_rows(&l.duration_rows);
            let r = select_regressor_features(&m, &l.durations, &params.regressor)?;
            if let Some(v) = &r.vif {
                env.write(&env.layout.selection_table(tp, "regressor_vif"), &v.to_csv(&r.candidates))?;
            }
            if r.stepwise.is_some() {
                let mut t = String::from("feature,selected\n");
                let offered = r.vif.as_ref().map_or(r.candidates.clone(), |v| names_of(&r.candidates, &v.retained));
                for f in &offered {
                    t.push_str(&format!("{f},{}\n", r.selected.contains(f)));
                }
                env.write(&env.layout.selection_table(tp, "stepwise"), &t)?;
            }
            Some(r)
        } else {
            eprintln!("select: fewer than 3 known durations at {tp}; no regressor selection");
            None
        };
        let file = SelectionFile {
            time_point: tp,
            classifier: cls,
            regressor: reg,
        };
        env.write(&env.layout.selection(tp), &format!("{}\n", serde_json::to_string_pretty(&file)?))?;
    }
    Ok(())
}

/// Reads features, labels and the selection; writes
/// `models/classifier_<TP>.json`.
fn train_classifier(env: &Env) -> Result<()> {
    let corpus = env.corpus()?;
    for &tp in &env.cfg.run.time_points {
        let l = labeled_rows(&env.features(tp)?, &corpus)?;
        let sel = env.selection(tp)?;
        let model = fit_classifier(&l.matrix, &l.on_time, tp, &sel.classifier.selected, &env.cfg.classifier)?;
        env.write(&env.layout.classifier(tp), &model.to_json()?)?;
    }
    Ok(())
}

/// Reads features, labels and the selection; writes
/// `models/regressor_<TP>.json` with the cross-validated RMSE as buffer.
fn train_regressor(env: &Env) -> Result<()> {
    let corpus = env.corpus()?;
    let params = env.cfg.eval_params();
    for &tp in &env.cfg.run.time_points {
        let l = labeled_rows(&env.features(tp)?, &corpus)?;
        let sel = env.selection(tp)?;
        let Some(rsel) = sel.regressor else {
            return Err(Error::InvalidInput(format!("selection for {tp} has no regressor part (too few known durations)")));
        };
        let m = l.matrix.select_rows(&l.duration_rows);
        let mut model = fit_regressor(&m, &l.durations, tp, &rsel, &params.regressor, env.stage_seed(2, tp))?;
        let rmse = cv_regression_rmse(&m, &l.durations, tp, &params, env.stage_seed(3, tp))?;
        model.buffer_days = Some(mean(&rmse));
        env.write(&env.layout.regressor(tp), &model.to_json()?)?;
    }
    Ok(())
}

/// Reads the corpus and semantic model; writes `report/report.{csv,md}` and
/// `report/predictions.csv`.
fn evaluate_cmd(env: &Env) -> Result<()> {
    let corpus = env.corpus()?;
    let ctx = env.context()?;
    let e = &env.cfg.evaluate;
    let mut tps = env.cfg.run.time_points.clone();
    if e.ablation && !tps.contains(&e.ablation_tp) {
        tps.push(e.ablation_tp);
    }
    let prep = Prepared::new(&corpus, &ctx, &tps)?;
    let plan = EvalPlan {
        classification: env.cfg.run.time_points.clone(),
        regression: env.cfg.run.time_points.clone(),
        baselines: e.baselines,
    };
    let params = env.cfg.eval_params();
    let (mut report, preds) = evaluate(&prep, &plan, &params, env.seed())?;
    if e.ablation {
        report.ablation_tp = Some(e.ablation_tp);
        report.ablation = ablate(&prep, e.ablation_tp, &FeatureGroup::ABLATION, &params, env.seed())?;
    }
    env.write(&env.layout.report("csv"), &report.to_csv()?)?;
    env.write(&env.layout.report("md"), &report.to_markdown())?;
    env.write(&env.layout.predictions(), &predictions_csv(&preds)?)
}

/// Reads the corpus and semantic model; writes `report/ablation.{csv,md}`.
/// Uses the first `--tp` (default `evaluate.ablation_tp`).
fn ablate_cmd(env: &Env) -> Result<()> {
    let corpus = env.corpus()?;
    let ctx = env.context()?;
    let tp = if env.cfg.run.time_points.len() == TimePoint::ALL.len() {
        env.cfg.evaluate.ablation_tp
    } else {
        env.cfg.run.time_points[0]
    };
    let prep = Prepared::new(&corpus, &ctx, &[tp])?;
    let rows = ablate(&prep, tp, &FeatureGroup::ABLATION, &env.cfg.eval_params(), env.seed())?;
    let report = EvalReport {
        ablation_tp: Some(tp),
        ablation: rows,
        ..Default::default()
    };
    env.write(&env.layout.ablation("csv"), &report.to_csv()?)?;
    env.write(&env.layout.ablation("md"), &report.to_markdown())
}

#[derive(Debug, Serialize)]
struct TpPrediction {
    tp: TimePoint,
    cutoff_ts: i64,
    available: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    reason: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    on_time_probability: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    predicted_status: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    estimated_days: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    buffer_days: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    recommended_days: Option<f64>,
    /// Inputs the models saw; missing values are null.
    #[serde(skip_serializing_if = "Option::is_none")]
    features: Option<serde_json::Map<String, serde_json::Value>>,
}

#[derive(Debug, Serialize)]
struct PredictionFile {
    project_id: String,
    as_of: i64,
    predictions: Vec<TpPrediction>,
}

fn read_input_project(args: &PredictArgs, env: &Env) -> Result<(ProjectRecord, Vec<ActivityEvent>)> {
    if let Some(id) = &args.project_id {
        let corpus = env.corpus()?;
        let p = corpus
            .project(id)
            .ok_or_else(|| Error::InvalidInput(format!("project `{id}` is not in the corpus")))?
            .clone();
        let events = corpus.events_for(id).to_vec();
        return Ok((p, events));
    }
    let path: &PathBuf = args
        .project
        .as_ref()
        .ok_or_else(|| Error::Config("predict needs --project FILE or --project-id ID".into()))?;
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let record: ProjectRecord = serde_json::from_str(strip_header(&text))?;
    let line = serde_json::to_string(&record)?;
    let name = path.display().to_string();
    let events_text = match &args.events {
        Some(p) => Some((p.display().to_string(), std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?)),
        None => None,
    };
    let corpus = Corpus::from_jsonl(
        (&name, &line),
        events_text.as_ref().map(|(n, t)| (n.as_str(), t.as_str())),
        None,
    )?;
    let events = corpus.events_for(&record.id).to_vec();
    Ok((corpus.projects[0].clone(), events))
}

fn json_number(x: f64) -> serde_json::Value {
    serde_json::Number::from_f64(x).map_or(serde_json::Value::Null, serde_json::Value::Number)
}

/// Reads the trained models and the semantic model; writes
/// `predict/<project>.json` and prints it.
fn predict(env: &Env, args: &PredictArgs) -> Result<()> {
    let (project, events) = read_input_project(args, env)?;
    let ctx = env.context()?.with_all_liwc();
    let as_of = args
        .as_of
        .unwrap_or_else(|| events.iter().map(|e| e.ts).max().unwrap_or(project.launch_ts));
    let mut out = Vec::new();
    for &tp in &env.cfg.run.time_points {
        let cutoff = tp.cutoff(&project);
        if cutoff > as_of {
            out.push(TpPrediction {
                tp,
                cutoff_ts: cutoff,
                available: false,
                reason: Some(format!("{tp} cutoff {cutoff} is after the observation time {as_of}")),
                on_time_probability: None,
                predicted_status: None,
                estimated_days: None,
                buffer_days: None,
                recommended_days: None,
                features: None,
            });
            continue;
        }
        let cls = env.model(&env.layout.classifier(tp), "train-classifier")?;
        let reg = env.model(&env.layout.regressor(tp), "train-regressor")?;
        let schema = ctx.schema(tp);
        let row = extract_features(&project, &events, &ctx, tp)?;
        let m = FeatureMatrix::new(vec![project.id.clone()], schema.clone(), row.clone())?;
        let p = score_matrix(&cls, &m)?[0];
        let days = score_matrix(&reg, &m)?[0];
        let buffer = reg.buffer_days.unwrap_or(0.0);
        let used: std::collections::BTreeSet<&String> = cls.features.iter().chain(&reg.features).collect();
        let features = schema
            .features
            .iter()
            .zip(&row)
            .filter(|(f, _)| used.contains(&f.name))
            .map(|(f, v)| (f.name.clone(), json_number(*v)))
            .collect();
        out.push(TpPrediction {
            tp,
            cutoff_ts: cutoff,
            available: true,
            reason: None,
            on_time_probability: Some(p),
            predicted_status: Some(if p > 0.5 { "on_time" } else { "late" }),
            estimated_days: Some(days),
            buffer_days: Some(buffer),
            recommended_days: Some(recommend_duration(days, buffer)),
            features: Some(features),
        });
    }
    let file = PredictionFile {
        project_id: project.id.clone(),
        as_of,
        predictions: out,
    };
    let body = format!("{}\n", serde_json::to_string_pretty(&file)?);
    env.write(&env.layout.prediction_for(&project.id), &body)?;
    print!("{body}");
    Ok(())
}
