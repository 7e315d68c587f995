//! Time-point-aware feature extraction into a named feature matrix.

mod activity;
mod matrix;

pub use activity::{average_update_interval_days, response_latency, temporal_slots};
pub use matrix::{log1p_matrix, FeatureMatrix, FeatureSchema};

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clustering::{project_semantic_features, SemanticMode, SemanticModel};
use crate::corpus::{ActivityEvent, Category, Corpus, EventKind, ProjectRecord, Role};
use crate::error::{Error, Result};
use crate::text::{
    category_scores, select_significant_categories, smog_score, split_sentences, CategoryDictionary,
    TokenStream, Tokenizer,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TimePoint {
    TP1,
    TP2,
    TP3,
    TP4,
}

impl TimePoint {
    pub const ALL: [TimePoint; 4] = [TimePoint::TP1, TimePoint::TP2, TimePoint::TP3, TimePoint::TP4];

    /// Launch, fundraising midpoint, deadline, and deadline plus 5% of the
    /// promised delivery window.
    pub fn cutoff(self, p: &ProjectRecord) -> i64 {
        match self {
            TimePoint::TP1 => p.launch_ts,
            TimePoint::TP2 => p.launch_ts + (p.deadline_ts - p.launch_ts) / 2,
            TimePoint::TP3 => p.deadline_ts,
            TimePoint::TP4 => p.deadline_ts + ((p.ledd_ts() - p.deadline_ts) as f64 * 0.05).floor() as i64,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for TimePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TP{}", self.index() + 1)
    }
}

impl FromStr for TimePoint {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "TP1" => Ok(TimePoint::TP1),
            "TP2" => Ok(TimePoint::TP2),
            "TP3" => Ok(TimePoint::TP3),
            "TP4" => Ok(TimePoint::TP4),
            _ => Err(Error::InvalidInput(format!("unknown time point `{s}` (expected TP1..TP4)"))),
        }
    }
}

/// Feature families; the last four are the ablation groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureGroup {
    Project,
    Temporal,
    CreatorActiveness,
    BackerActiveness,
    Linguistic,
    Semantic,
}

impl FeatureGroup {
    pub const ABLATION: [FeatureGroup; 4] = [
        FeatureGroup::CreatorActiveness,
        FeatureGroup::BackerActiveness,
        FeatureGroup::Linguistic,
        FeatureGroup::Semantic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FeatureGroup::Project => "project",
            FeatureGroup::Temporal => "temporal",
            FeatureGroup::CreatorActiveness => "creator_activeness",
            FeatureGroup::BackerActiveness => "backer_activeness",
            FeatureGroup::Linguistic => "linguistic",
            FeatureGroup::Semantic => "semantic",
        }
    }
}

impl FromStr for FeatureGroup {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            FeatureGroup::Project,
            FeatureGroup::Temporal,
            FeatureGroup::CreatorActiveness,
            FeatureGroup::BackerActiveness,
            FeatureGroup::Linguistic,
            FeatureGroup::Semantic,
        ]
        .into_iter()
        .find(|g| g.name() == s)
        .ok_or_else(|| Error::InvalidInput(format!("unknown feature group `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub name: String,
    pub availability: TimePoint,
    pub group: FeatureGroup,
    /// Takes `log(1 + x)` before linear modelling.
    pub log_transform: bool,
    /// Counts events up to a cutoff (nondecreasing in the time point).
    pub event_count: bool,
}

impl FeatureSpec {
    fn new(name: impl Into<String>, availability: TimePoint, group: FeatureGroup) -> Self {
        FeatureSpec {
            name: name.into(),
            availability,
            group,
            log_transform: true,
            event_count: false,
        }
    }

    fn untransformed(mut self) -> Self {
        self.log_transform = false;
        self
    }

    fn counting(mut self) -> Self {
        self.event_count = true;
        self
    }
}

/// Dictionary categories kept for update and comment text.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LiwcSelection {
    pub update_categories: Vec<usize>,
    pub comment_categories: Vec<usize>,
}

/// Models and settings shared by all extractions.
#[derive(Debug, Clone)]
pub struct FeatureContext {
    pub tokenizer: Tokenizer,
    pub dictionary: CategoryDictionary,
    pub semantic: Option<SemanticModel>,
    pub liwc: LiwcSelection,
    pub n_slots: usize,
    /// Semantic feature weighting at TP1/TP2 and at TP3/TP4.
    pub semantic_mode_early: SemanticMode,
    pub semantic_mode_late: SemanticMode,
}

impl FeatureContext {
    pub fn new(tokenizer: Tokenizer, dictionary: CategoryDictionary, semantic: Option<SemanticModel>) -> Self {
        FeatureContext {
            tokenizer,
            dictionary,
            semantic,
            liwc: LiwcSelection::default(),
            n_slots: 20,
            semantic_mode_early: SemanticMode::RewardCount,
            semantic_mode_late: SemanticMode::Backers,
        }
    }

    /// Selects every dictionary category for both texts, so any trained
    /// linguistic column can be looked up by name.
    pub fn with_all_liwc(mut self) -> Self {
        let all: Vec<usize> = (0..self.dictionary.len()).collect();
        self.liwc = LiwcSelection {
            update_categories: all.clone(),
            comment_categories: all,
        };
        self
    }

    pub fn semantic_mode(&self, tp: TimePoint) -> SemanticMode {
        if tp <= TimePoint::TP2 {
            self.semantic_mode_early
        } else {
            self.semantic_mode_late
        }
    }

    /// Full ordered schema; features with availability > `tp` are omitted.
    pub fn schema(&self, tp: TimePoint) -> FeatureSchema {
        use FeatureGroup::*;
        use TimePoint::*;
        let mut s = vec![
            FeatureSpec::new("images", TP1, Project),
            FeatureSpec::new("faqs", TP1, Project),
            FeatureSpec::new("goal", TP1, Project),
        ];
        for c in Category::ALL {
            s.push(FeatureSpec::new(format!("category_{}", c.name()), TP1, Project).untransformed());
        }
        for n in ["rewards", "reward_sentences", "bio_sentences", "fundraising_days", "ledd_days"] {
            s.push(FeatureSpec::new(n, TP1, Project));
        }
        for n in ["smog_project", "smog_reward", "smog_bio"] {
            s.push(FeatureSpec::new(n, TP1, Project).untransformed());
        }
        if let Some(m) = &self.semantic {
            for i in 0..m.k2() {
                s.push(FeatureSpec::new(format!("semantic_{i}"), TP1, Semantic));
            }
        }
        s.push(FeatureSpec::new("backers", TP2, BackerActiveness).counting());
        s.push(FeatureSpec::new("comments", TP2, BackerActiveness).counting());
        s.push(FeatureSpec::new("updates", TP2, CreatorActiveness).counting());
        s.push(FeatureSpec::new("creator_comments", TP2, CreatorActiveness).counting());
        s.push(FeatureSpec::new("creator_updates", TP2, CreatorActiveness).counting());
        for i in 0..self.n_slots {
            s.push(FeatureSpec::new(format!("slot_{i}"), TP2, Temporal).counting());
        }
        s.push(FeatureSpec::new("creator_comments_tp4", TP4, CreatorActiveness).counting());
        s.push(FeatureSpec::new("creator_updates_tp4", TP4, CreatorActiveness).counting());
        s.push(FeatureSpec::new("avg_update_interval_days", TP4, CreatorActiveness));
        s.push(FeatureSpec::new("avg_response_latency_secs", TP4, CreatorActiveness));
        s.push(FeatureSpec::new("backer_comments", TP4, BackerActiveness).counting());
        s.push(FeatureSpec::new("distinct_commenting_backers", TP4, BackerActiveness).counting());
        s.push(FeatureSpec::new("backer_questions", TP4, BackerActiveness).counting());
        let names = self.dictionary.names();
        for &c in &self.liwc.update_categories {
            s.push(FeatureSpec::new(format!("liwc_update_{}", names[c]), TP4, Linguistic));
        }
        for &c in &self.liwc.comment_categories {
            s.push(FeatureSpec::new(format!("liwc_comment_{}", names[c]), TP4, Linguistic));
        }
        FeatureSchema {
            features: s.into_iter().filter(|f| f.availability <= tp).collect(),
        }
    }
}

fn is_question(e: &ActivityEvent) -> bool {
    e.author_role == Role::Backer && e.kind == EventKind::Comment && e.text.contains('?')
}

fn check_sorted(events: &[ActivityEvent]) -> Result<()> {
    if events.windows(2).any(|w| w[1].ts < w[0].ts) {
        return Err(Error::InvalidInput("events must be sorted by timestamp".into()));
    }
    Ok(())
}

/// Text of the given role/kind within `[.., cutoff]`, tokenized as one stream.
fn stream_of(events: &[ActivityEvent], role: Role, kind: EventKind, cutoff: i64, tk: &Tokenizer) -> TokenStream {
    let mut tokens = Vec::new();
    for e in events.iter().filter(|e| e.ts <= cutoff && e.author_role == role && e.kind == kind) {
        tokens.extend(tk.tokenize(&e.text).tokens);
    }
    TokenStream { tokens }
}

/// Category scores of creator updates and backer comments up to TP4.
pub fn liwc_scores(project: &ProjectRecord, events: &[ActivityEvent], ctx: &FeatureContext) -> (Vec<f64>, Vec<f64>) {
    let cutoff = TimePoint::TP4.cutoff(project);
    let upd = stream_of(events, Role::Creator, EventKind::Update, cutoff, &ctx.tokenizer);
    let com = stream_of(events, Role::Backer, EventKind::Comment, cutoff, &ctx.tokenizer);
    (category_scores(&upd, &ctx.dictionary), category_scores(&com, &ctx.dictionary))
}

/// Picks dictionary categories whose scores differ between on-time and late
/// projects (Welch t-test at the Bonferroni level unless `alpha` is given).
/// Needs at least two projects per class; otherwise nothing is selected.
pub fn select_liwc_categories(
    projects: &[(&ProjectRecord, &[ActivityEvent], bool)],
    ctx: &FeatureContext,
    alpha: Option<f64>,
) -> Result<LiwcSelection> {
    let scores: Vec<(Vec<f64>, Vec<f64>)> = projects.iter().map(|(p, e, _)| liwc_scores(p, e, ctx)).collect();
    let on_time: Vec<bool> = projects.iter().map(|t| t.2).collect();
    select_liwc_from_scores(&scores, &on_time, alpha)
}

/// [`select_liwc_categories`] on precomputed `(update, comment)` scores.
pub fn select_liwc_from_scores(
    scores: &[(Vec<f64>, Vec<f64>)],
    on_time: &[bool],
    alpha: Option<f64>,
) -> Result<LiwcSelection> {
    let mut groups: [[Vec<Vec<f64>>; 2]; 2] = Default::default();
    for ((u, c), &ok) in scores.iter().zip(on_time) {
        let g = usize::from(ok);
        groups[0][g].push(u.clone());
        groups[1][g].push(c.clone());
    }
    if groups[0][0].len() < 2 || groups[0][1].len() < 2 {
        return Ok(LiwcSelection::default());
    }
    let upd = select_significant_categories(&groups[0][1], &groups[0][0], alpha)?;
    let com = select_significant_categories(&groups[1][1], &groups[1][0], alpha)?;
    Ok(LiwcSelection {
        update_categories: upd.selected,
        comment_categories: com.selected,
    })
}

fn count(events: &[ActivityEvent], cutoff: i64, pred: impl Fn(&ActivityEvent) -> bool) -> f64 {
    events.iter().filter(|e| e.ts <= cutoff && pred(e)).count() as f64
}

fn distinct_backers(events: &[ActivityEvent], cutoff: i64) -> f64 {
    let mut ids: Vec<&str> = events
        .iter()
        .filter(|e| e.ts <= cutoff && e.author_role == Role::Backer)
        .filter_map(|e| e.author_id.as_deref())
        .collect();
    ids.sort_unstable();
    ids.dedup();
    ids.len() as f64
}

/// One project's feature values at `tp`, in [`FeatureContext::schema`]
/// order. Missing values are NaN.
pub fn extract_features(
    project: &ProjectRecord,
    events: &[ActivityEvent],
    ctx: &FeatureContext,
    tp: TimePoint,
) -> Result<Vec<f64>> {
    check_sorted(events)?;
    let mut v = Vec::with_capacity(128);
    v.push(project.images_count as f64);
    v.push(project.faqs_count as f64);
    v.push(project.goal);
    for c in Category::ALL {
        v.push(if project.category == c { 1.0 } else { 0.0 });
    }
    let reward_text: Vec<&str> = project.rewards.iter().map(|r| r.description.as_str()).collect();
    let reward_sentences: usize = reward_text.iter().map(|t| split_sentences(t).len()).sum();
    v.push(project.rewards.len() as f64);
    v.push(reward_sentences as f64);
    v.push(split_sentences(&project.bio_description).len() as f64);
    v.push(project.fundraising_days());
    v.push(project.longest_delivery_days());
    v.push(smog_score(&project.project_description).unwrap_or(f64::NAN));
    v.push(smog_score(&reward_text.join(". ")).unwrap_or(f64::NAN));
    v.push(smog_score(&project.bio_description).unwrap_or(f64::NAN));
    if let Some(m) = &ctx.semantic {
        v.extend(project_semantic_features(project, m, &ctx.tokenizer, ctx.semantic_mode(tp)));
    }
    if tp >= TimePoint::TP2 {
        // Fundraising counts stop at the deadline, so TP4 repeats TP3.
        let cut = tp.min(TimePoint::TP3).cutoff(project);
        v.push(distinct_backers(events, cut));
        v.push(count(events, cut, |e| e.kind == EventKind::Comment));
        v.push(count(events, cut, |e| e.kind == EventKind::Update));
        v.push(count(events, cut, |e| e.kind == EventKind::Comment && e.author_role == Role::Creator));
        v.push(count(events, cut, |e| e.kind == EventKind::Update && e.author_role == Role::Creator));
        v.extend(temporal_slots(events, project.launch_ts, project.deadline_ts, cut, ctx.n_slots)?);
    }
    if tp == TimePoint::TP4 {
        let tp3 = project.deadline_ts;
        let cut = tp.cutoff(project);
        let after = |e: &ActivityEvent| e.ts > tp3 && e.author_role == Role::Creator;
        v.push(count(events, cut, |e| after(e) && e.kind == EventKind::Comment));
        v.push(count(events, cut, |e| after(e) && e.kind == EventKind::Update));
        let upto: Vec<ActivityEvent> = events.iter().filter(|e| e.ts <= cut).cloned().collect();
        v.push(average_update_interval_days(&upto).unwrap_or(f64::NAN));
        v.push(response_latency(&upto).unwrap_or(f64::NAN));
        v.push(count(events, cut, |e| e.author_role == Role::Backer && e.kind == EventKind::Comment));
        v.push(distinct_backers(
            &upto.iter().filter(|e| e.kind == EventKind::Comment).cloned().collect::<Vec<_>>(),
            cut,
        ));
        v.push(count(events, cut, is_question));
        if !ctx.liwc.update_categories.is_empty() || !ctx.liwc.comment_categories.is_empty() {
            let (u, c) = liwc_scores(project, events, ctx);
            v.extend(ctx.liwc.update_categories.iter().map(|&i| u[i]));
            v.extend(ctx.liwc.comment_categories.iter().map(|&i| c[i]));
        }
    }
    Ok(v)
}

/// Extracts every project of `corpus` (in corpus order) at `tp`.
pub fn extract_matrix(corpus: &Corpus, ctx: &FeatureContext, tp: TimePoint) -> Result<FeatureMatrix> {
    let projects: Vec<&ProjectRecord> = corpus.projects.iter().collect();
    extract_rows(&projects, corpus, ctx, tp)
}

pub fn extract_rows(
    projects: &[&ProjectRecord],
    corpus: &Corpus,
    ctx: &FeatureContext,
    tp: TimePoint,
) -> Result<FeatureMatrix> {
    let schema = ctx.schema(tp);
    let rows: Vec<Vec<f64>> = projects
        .par_iter()
        .map(|p| extract_features(p, corpus.events_for(&p.id), ctx, tp))
        .collect::<Result<_>>()?;
    let mut values = Vec::with_capacity(rows.len() * schema.len());
    for r in &rows {
        if r.len() != schema.len() {
            return Err(Error::DimensionMismatch {
                expected: schema.len(),
                actual: r.len(),
            });
        }
        values.extend_from_slice(r);
    }
    FeatureMatrix::new(projects.iter().map(|p| p.id.clone()).collect(), schema, values)
}

/// Names of the eight reference features, with the two fundraising outcomes
/// present only from TP3 on.
pub fn baseline8_names(tp: TimePoint) -> Vec<&'static str> {
    let mut n = vec!["rewards", "goal", "fundraising_days"];
    if tp >= TimePoint::TP3 {
        n.extend(["total_backers", "percent_raised"]);
    }
    n.extend(["creator_backed", "creator_created", "category"]);
    n
}

/// The eight-feature reference matrix. `category` is ordinal (category
/// index) when `one_hot` is false, otherwise expanded to 15 indicators.
pub fn baseline8_matrix(projects: &[&ProjectRecord], tp: TimePoint, one_hot: bool) -> Result<FeatureMatrix> {
    use FeatureGroup::Project;
    let mut specs = Vec::new();
    for n in baseline8_names(tp) {
        let avail = if matches!(n, "total_backers" | "percent_raised") { TimePoint::TP3 } else { TimePoint::TP1 };
        if n == "category" {
            if one_hot {
                for c in Category::ALL {
                    specs.push(FeatureSpec::new(format!("category_{}", c.name()), avail, Project).untransformed());
                }
            } else {
                specs.push(FeatureSpec::new("category", avail, Project).untransformed());
            }
        } else {
            specs.push(FeatureSpec::new(n, avail, Project));
        }
    }
    let mut values = Vec::new();
    for p in projects {
        for n in baseline8_names(tp) {
            match n {
                "rewards" => values.push(p.rewards.len() as f64),
                "goal" => values.push(p.goal),
                "fundraising_days" => values.push(p.fundraising_days()),
                "total_backers" => values.push(p.total_backers() as f64),
                "percent_raised" => values.push(p.percent_raised()),
                "creator_backed" => values.push(p.creator_backed_count as f64),
                "creator_created" => values.push(p.creator_created_count as f64),
                _ if one_hot => values.extend(Category::ALL.iter().map(|c| f64::from(u8::from(*c == p.category)))),
                _ => values.push(p.category.index() as f64),
            }
        }
    }
    FeatureMatrix::new(
        projects.iter().map(|p| p.id.clone()).collect(),
        FeatureSchema { features: specs },
        values,
    )
}

#[cfg(test)]
mod tests;
