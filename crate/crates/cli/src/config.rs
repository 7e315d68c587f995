//! Run configuration: TOML file, `FULFILLKIT_<SECTION>_<KEY>` environment
//! overrides, and whole-document validation.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use fulfillkit_core::clustering::SemanticParams;
use fulfillkit_core::corpus::SynthConfig;
use fulfillkit_core::embeddings::{EmbedParams, GloveParams};
use fulfillkit_core::evaluation::{ClassifierParams, EvalParams, Pairing, RegressorParams};
use fulfillkit_core::features::TimePoint;
use fulfillkit_core::models::{lambda_grid, BoxCoxEnetParams, ForestParams, GbtParams};
use fulfillkit_core::selection::BorutaParams;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const ENV_PREFIX: &str = "FULFILLKIT_";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub master_seed: Option<u64>,
    pub time_points: Vec<TimePoint>,
    pub out_dir: PathBuf,
    pub jobs: Option<usize>,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            master_seed: None,
            time_points: TimePoint::ALL.to_vec(),
            out_dir: PathBuf::from("out"),
            jobs: None,
        }
    }
}

/// Input files. Unset corpus paths fall back to the `synth` output in the
/// output directory; unset embeddings fall back to the `embed` output.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsSection {
    pub corpus: Option<PathBuf>,
    pub events: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub stopwords: Option<PathBuf>,
    pub dictionary: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusSection {
    /// Loaded corpora keep only successful projects with at least this goal.
    pub min_goal: f64,
}

impl Default for CorpusSection {
    fn default() -> Self {
        CorpusSection { min_goal: 100.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeaturesSection {
    pub n_slots: usize,
    /// Significance level for linguistic categories; unset means 0.05
    /// Bonferroni-corrected over the dictionary.
    pub liwc_alpha: Option<f64>,
}

impl Default for FeaturesSection {
    fn default() -> Self {
        FeaturesSection {
            n_slots: 20,
            liwc_alpha: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectionSection {
    /// Steps before the classifier, from `vif`, `boruta`.
    pub classifier: Vec<String>,
    /// Steps before the regressor, from `vif`, `stepwise`.
    pub regressor: Vec<String>,
    pub vif_threshold: f64,
    pub boruta: BorutaParams,
}

impl Default for SelectionSection {
    fn default() -> Self {
        SelectionSection {
            classifier: vec!["vif".into(), "boruta".into()],
            regressor: vec!["vif".into(), "stepwise".into()],
            vif_threshold: 10.0,
            boruta: BorutaParams {
                n_runs: 20,
                forest: ForestParams {
                    n_trees: 50,
                    ..Default::default()
                },
                ..Default::default()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluateSection {
    pub folds: usize,
    pub pairing: Pairing,
    pub baselines: bool,
    /// Include the feature-group ablation in the `evaluate` report.
    pub ablation: bool,
    pub ablation_tp: TimePoint,
}

impl Default for EvaluateSection {
    fn default() -> Self {
        EvaluateSection {
            folds: 10,
            pairing: Pairing::PerFold,
            baselines: true,
            ablation: false,
            ablation_tp: TimePoint::TP4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub run: RunSection,
    pub paths: PathsSection,
    pub corpus: CorpusSection,
    pub synth: SynthConfig,
    pub embed: EmbedParams,
    pub cluster: SemanticParams,
    pub features: FeaturesSection,
    pub selection: SelectionSection,
    pub classifier: GbtParams,
    pub regressor: BoxCoxEnetParams,
    pub evaluate: EvaluateSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            run: RunSection::default(),
            paths: PathsSection::default(),
            corpus: CorpusSection::default(),
            synth: SynthConfig::default(),
            embed: EmbedParams {
                glove: GloveParams {
                    dim: 5,
                    ..Default::default()
                },
                ..Default::default()
            },
            cluster: SemanticParams {
                k1_max: 12,
                k2_max: 20,
                ..Default::default()
            },
            features: FeaturesSection::default(),
            selection: SelectionSection::default(),
            classifier: GbtParams::default(),
            regressor: BoxCoxEnetParams::default(),
            evaluate: EvaluateSection::default(),
        }
    }
}

/// Keys that are absent from the serialized defaults because they default
/// to unset, but may still be set from the environment.
const OPTIONAL_KEYS: &[&str] = &[
    "run.master_seed",
    "run.jobs",
    "paths.corpus",
    "paths.events",
    "paths.labels",
    "paths.stopwords",
    "paths.dictionary",
    "paths.embeddings",
    "features.liwc_alpha",
    "selection.boruta.forest.mtry",
    "selection.boruta.forest.max_depth",
];

fn leaf_paths(prefix: &str, v: &toml::Value, out: &mut Vec<String>) {
    match v {
        toml::Value::Table(t) => {
            for (k, child) in t {
                let p = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                leaf_paths(&p, child, out);
            }
        }
        _ => out.push(prefix.to_string()),
    }
}

/// Every settable key as a dotted path.
pub fn known_keys() -> Vec<String> {
    let v = toml::Value::try_from(RunConfig::default()).expect("default config serializes");
    let mut out = Vec::new();
    leaf_paths("", &v, &mut out);
    out.extend(OPTIONAL_KEYS.iter().map(|s| s.to_string()));
    out.sort();
    out.dedup();
    out
}

/// `run.master_seed` → `FULFILLKIT_RUN_MASTER_SEED`.
pub fn env_name(key: &str) -> String {
    format!("{ENV_PREFIX}{}", key.replace('.', "_").to_uppercase())
}

fn parse_env_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

fn set_path(root: &mut toml::Table, key: &str, value: toml::Value) -> Result<(), String> {
    let parts: Vec<&str> = key.split('.').collect();
    let mut t = root;
    for part in &parts[..parts.len() - 1] {
        let entry = t
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        t = entry
            .as_table_mut()
            .ok_or_else(|| format!("`{key}`: `{part}` is not a table"))?;
    }
    t.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigErrors(pub Vec<String>);

impl std::fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "config: {e}")?;
        }
        Ok(())
    }
}

/// Parses the document, applies environment overrides, and deserializes.
/// Parsing or type errors are returned before anything is applied.
pub fn load_config(text: &str, env: &BTreeMap<String, String>) -> Result<RunConfig, ConfigErrors> {
    let mut doc: toml::Table = toml::from_str(text).map_err(|e| ConfigErrors(vec![format!("parse error: {e}")]))?;
    let keys = known_keys();
    let by_env: BTreeMap<String, &String> = keys.iter().map(|k| (env_name(k), k)).collect();
    let mut errors = Vec::new();
    for (name, raw) in env.iter().filter(|(k, _)| k.starts_with(ENV_PREFIX)) {
        match by_env.get(name) {
            Some(key) => {
                if let Err(e) = set_path(&mut doc, key, parse_env_value(raw)) {
                    errors.push(format!("{name}: {e}"));
                }
            }
            None => errors.push(format!("{name}: unknown configuration key")),
        }
    }
    if !errors.is_empty() {
        return Err(ConfigErrors(errors));
    }
    let de = toml::Value::Table(doc);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        ConfigErrors(vec![format!("`{path}`: {}", e.into_inner())])
    })
}

fn check_range(errors: &mut Vec<String>, section: &str, lo_key: &str, lo: usize, hi_key: &str, hi: usize) {
    if lo == 0 {
        errors.push(format!("{section}.{lo_key} must be at least 1"));
    }
    if lo > hi {
        errors.push(format!("{section}.{lo_key} ({lo}) must not exceed {section}.{hi_key} ({hi})"));
    }
}

fn check_steps(errors: &mut Vec<String>, key: &str, steps: &[String], allowed: &[&str]) {
    let mut last = None;
    for s in steps {
        match allowed.iter().position(|a| a == s) {
            None => errors.push(format!("{key}: unknown step `{s}` (expected one of {})", allowed.join(", "))),
            Some(i) => {
                if last.is_some_and(|l| l >= i) {
                    errors.push(format!("{key}: steps must be unique and in the order {}", allowed.join(", ")));
                }
                last = Some(i);
            }
        }
    }
}

fn check_path(errors: &mut Vec<String>, key: &str, p: &Option<PathBuf>) {
    if let Some(p) = p {
        if !p.exists() {
            errors.push(format!("{key}: {} does not exist", p.display()));
        }
    }
}

impl RunConfig {
    /// Every problem in the configuration; empty when it is usable.
    pub fn validate(&self) -> Vec<String> {
        let mut e = Vec::new();
        if self.run.master_seed.is_none() {
            e.push("run.master_seed is required (set it in the file, with --seed, or FULFILLKIT_RUN_MASTER_SEED)".into());
        }
        if self.run.time_points.is_empty() {
            e.push("run.time_points must not be empty".into());
        }
        let mut tps = self.run.time_points.clone();
        tps.sort();
        tps.dedup();
        if tps.len() != self.run.time_points.len() {
            e.push("run.time_points has duplicates".into());
        }
        if self.run.jobs == Some(0) {
            e.push("run.jobs must be at least 1".into());
        }
        let p = &self.paths;
        check_path(&mut e, "paths.corpus", &p.corpus);
        check_path(&mut e, "paths.events", &p.events);
        check_path(&mut e, "paths.labels", &p.labels);
        check_path(&mut e, "paths.stopwords", &p.stopwords);
        check_path(&mut e, "paths.dictionary", &p.dictionary);
        check_path(&mut e, "paths.embeddings", &p.embeddings);
        if p.corpus.is_none() && (p.events.is_some() || p.labels.is_some()) {
            e.push("paths.events / paths.labels need paths.corpus".into());
        }
        if !(self.corpus.min_goal.is_finite() && self.corpus.min_goal >= 0.0) {
            e.push(format!("corpus.min_goal must be a non-negative number, got {}", self.corpus.min_goal));
        }
        if let Err(err) = self.synth.validate() {
            e.push(format!("synth: {err}"));
        }
        if self.embed.window == 0 {
            e.push("embed.window must be at least 1".into());
        }
        if self.embed.min_count == 0 {
            e.push("embed.min_count must be at least 1".into());
        }
        let g = &self.embed.glove;
        if g.dim == 0 || g.iters == 0 {
            e.push("embed.glove.dim and embed.glove.iters must be at least 1".into());
        }
        if !(g.x_max > 0.0) || !(g.learning_rate > 0.0) || !(g.alpha > 0.0) {
            e.push("embed.glove.x_max, alpha and learning_rate must be positive".into());
        }
        let c = &self.cluster;
        check_range(&mut e, "cluster", "k1_min", c.k1_min, "k1_max", c.k1_max);
        check_range(&mut e, "cluster", "k2_min", c.k2_min, "k2_max", c.k2_max);
        if self.features.n_slots == 0 {
            e.push("features.n_slots must be at least 1".into());
        }
        if let Some(a) = self.features.liwc_alpha {
            if !(a > 0.0 && a < 1.0) {
                e.push(format!("features.liwc_alpha must be in (0, 1), got {a}"));
            }
        }
        let s = &self.selection;
        check_steps(&mut e, "selection.classifier", &s.classifier, &["vif", "boruta"]);
        check_steps(&mut e, "selection.regressor", &s.regressor, &["vif", "stepwise"]);
        if !(s.vif_threshold > 1.0) {
            e.push(format!("selection.vif_threshold must exceed 1, got {}", s.vif_threshold));
        }
        if s.boruta.n_runs < 20 {
            e.push(format!("selection.boruta.n_runs must be at least 20, got {}", s.boruta.n_runs));
        }
        if !(s.boruta.alpha > 0.0 && s.boruta.alpha < 1.0) {
            e.push(format!("selection.boruta.alpha must be in (0, 1), got {}", s.boruta.alpha));
        }
        if s.boruta.forest.n_trees == 0 || s.boruta.forest.min_samples_leaf == 0 {
            e.push("selection.boruta.forest.n_trees and min_samples_leaf must be at least 1".into());
        }
        if let Err(err) = self.classifier.validate() {
            e.push(format!("classifier: {err}"));
        }
        if let Err(err) = lambda_grid(self.regressor.lambda_step) {
            e.push(format!("regressor.lambda_step: {err}"));
        }
        let cv = &self.regressor.cv;
        if cv.folds < 2 {
            e.push(format!("regressor.cv.folds must be at least 2, got {}", cv.folds));
        }
        if cv.lambda1_grid.iter().chain(&cv.lambda2_grid).any(|l| !(*l >= 0.0)) {
            e.push("regressor.cv lambda grids must be non-negative".into());
        }
        if cv.lambda2_grid.is_empty() {
            e.push("regressor.cv.lambda2_grid must not be empty".into());
        }
        if self.evaluate.folds < 2 {
            e.push(format!("evaluate.folds must be at least 2, got {}", self.evaluate.folds));
        }
        e
    }

    pub fn master_seed(&self) -> u64 {
        self.run.master_seed.expect("validated config has a master seed")
    }

    /// SHA-256 of the settings that affect results (paths, output directory
    /// and thread count excluded), as hex.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.paths = PathsSection::default();
        c.run.out_dir = PathBuf::new();
        c.run.jobs = None;
        let text = toml::to_string(&c).expect("config serializes");
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn eval_params(&self) -> EvalParams {
        let s = &self.selection;
        EvalParams {
            folds: self.evaluate.folds,
            pairing: self.evaluate.pairing,
            classifier: ClassifierParams {
                liwc_alpha: self.features.liwc_alpha,
                vif: s.classifier.iter().any(|x| x == "vif"),
                vif_threshold: s.vif_threshold,
                boruta: s.classifier.iter().any(|x| x == "boruta"),
                boruta_params: s.boruta.clone(),
                gbt: self.classifier.clone(),
            },
            regressor: RegressorParams {
                vif: s.regressor.iter().any(|x| x == "vif"),
                vif_threshold: s.vif_threshold,
                stepwise: s.regressor.iter().any(|x| x == "stepwise"),
                boxcox: self.regressor.clone(),
            },
        }
    }

    /// Reads and validates a config file (or the defaults when `path` is
    /// `None`), applying environment overrides and then the seed flag.
    pub fn resolve(path: Option<&Path>, env: &BTreeMap<String, String>, seed: Option<u64>) -> Result<RunConfig, ConfigErrors> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p).map_err(|e| ConfigErrors(vec![format!("{}: {e}", p.display())]))?,
            None => String::new(),
        };
        let mut c = load_config(&text, env)?;
        if seed.is_some() {
            c.run.master_seed = seed;
        }
        let errors = c.validate();
        if errors.is_empty() {
            Ok(c)
        } else {
            Err(ConfigErrors(errors))
        }
    }
}

/// The default configuration as a commented TOML document.
pub fn default_config_toml() -> String {
    let mut c = RunConfig::default();
    c.run.master_seed = Some(42);
    format!(
        "# fulfillkit run configuration. Every key may be overridden by an\n# environment variable FULFILLKIT_<SECTION>_<KEY>.\n{}",
        toml::to_string(&c).expect("config serializes")
    )
}
