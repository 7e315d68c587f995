//! Corpus schema, validation, and line-delimited JSON persistence.
//!
//! A corpus is three files: `corpus.jsonl` (one project per line with its
//! rewards embedded), `events.jsonl` (updates and comments), and
//! `labels.jsonl` (delivery ground truth). Blank lines and lines starting with
//! `#` are ignored, which is where provenance headers live.

mod synth;

pub use synth::{generate_synthetic, label_counts, PoolMix, SynthConfig, WordPools};

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SECONDS_PER_DAY: f64 = 86_400.0;

pub const PROJECTS_FILE: &str = "corpus.jsonl";
pub const EVENTS_FILE: &str = "events.jsonl";
pub const LABELS_FILE: &str = "labels.jsonl";

/// Kickstarter's fifteen top-level project categories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Art,
    Comics,
    Crafts,
    Dance,
    Design,
    Fashion,
    FilmVideo,
    Food,
    Games,
    Journalism,
    Music,
    Photography,
    Publishing,
    Technology,
    Theater,
}

impl Category {
    pub const ALL: [Category; 15] = [
        Category::Art,
        Category::Comics,
        Category::Crafts,
        Category::Dance,
        Category::Design,
        Category::Fashion,
        Category::FilmVideo,
        Category::Food,
        Category::Games,
        Category::Journalism,
        Category::Music,
        Category::Photography,
        Category::Publishing,
        Category::Technology,
        Category::Theater,
    ];

    pub fn index(self) -> usize {
        Category::ALL.iter().position(|c| *c == self).unwrap()
    }

    pub fn name(self) -> &'static str {
        match self {
            Category::Art => "art",
            Category::Comics => "comics",
            Category::Crafts => "crafts",
            Category::Dance => "dance",
            Category::Design => "design",
            Category::Fashion => "fashion",
            Category::FilmVideo => "film_video",
            Category::Food => "food",
            Category::Games => "games",
            Category::Journalism => "journalism",
            Category::Music => "music",
            Category::Photography => "photography",
            Category::Publishing => "publishing",
            Category::Technology => "technology",
            Category::Theater => "theater",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RewardRecord {
    pub id: String,
    pub description: String,
    pub pledge_amount: f64,
    pub estimated_delivery_ts: i64,
    pub backer_count: u32,
}

impl RewardRecord {
    pub fn has_empty_description(&self) -> bool {
        self.description.trim().is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectRecord {
    pub id: String,
    pub category: Category,
    pub goal: f64,
    /// Amount pledged by the end of fundraising (feeds "percent raised").
    pub pledged: f64,
    pub successful: bool,
    pub launch_ts: i64,
    pub deadline_ts: i64,
    pub images_count: u32,
    pub faqs_count: u32,
    pub project_description: String,
    pub bio_description: String,
    pub rewards: Vec<RewardRecord>,
    pub creator_backed_count: u32,
    pub creator_created_count: u32,
}

impl ProjectRecord {
    /// Longest estimated delivery date over all rewards.
    pub fn ledd_ts(&self) -> i64 {
        self.rewards
            .iter()
            .map(|r| r.estimated_delivery_ts)
            .max()
            .unwrap_or(self.deadline_ts)
    }

    pub fn fundraising_days(&self) -> f64 {
        (self.deadline_ts - self.launch_ts) as f64 / SECONDS_PER_DAY
    }

    /// Promised delivery window after the campaign closes, in days.
    pub fn longest_delivery_days(&self) -> f64 {
        (self.ledd_ts() - self.deadline_ts) as f64 / SECONDS_PER_DAY
    }

    pub fn total_backers(&self) -> u64 {
        self.rewards.iter().map(|r| r.backer_count as u64).sum()
    }

    pub fn percent_raised(&self) -> f64 {
        100.0 * self.pledged / self.goal
    }

    fn validate(&self) -> std::result::Result<(), String> {
        if self.id.is_empty() {
            return Err("empty id".into());
        }
        if !(self.goal.is_finite() && self.goal > 0.0) {
            return Err(format!("goal must be positive, got {}", self.goal));
        }
        if !(self.pledged.is_finite() && self.pledged >= 0.0) {
            return Err(format!("pledged must be non-negative, got {}", self.pledged));
        }
        if self.deadline_ts <= self.launch_ts {
            return Err(format!(
                "deadline_ts ({}) must be after launch_ts ({})",
                self.deadline_ts, self.launch_ts
            ));
        }
        if self.rewards.is_empty() {
            return Err("project has no rewards".into());
        }
        let mut seen = HashSet::new();
        for r in &self.rewards {
            if !seen.insert(r.id.as_str()) {
                return Err(format!("duplicate reward id `{}`", r.id));
            }
            if !(r.pledge_amount.is_finite() && r.pledge_amount >= 0.0) {
                return Err(format!("reward `{}` has invalid pledge_amount", r.id));
            }
            if r.estimated_delivery_ts < self.deadline_ts {
                return Err(format!(
                    "reward `{}` estimated delivery precedes the deadline",
                    r.id
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Creator,
    Backer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Update,
    Comment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActivityEvent {
    pub project_id: String,
    pub author_role: Role,
    /// Stable author handle; needed to count distinct commenting backers.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub author_id: Option<String>,
    pub kind: EventKind,
    pub ts: i64,
    pub text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeliveryStatus {
    OnTime,
    Late,
}

impl DeliveryStatus {
    /// Binary encoding used by the classifiers: on-time = 1.
    pub fn as_target(self) -> f64 {
        match self {
            DeliveryStatus::OnTime => 1.0,
            DeliveryStatus::Late => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeliveryLabel {
    pub project_id: String,
    pub status: DeliveryStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub actual_duration_days: Option<f64>,
}

/// A validated, cross-referenced corpus. Events are grouped per project and
/// sorted by timestamp (stable, so equal timestamps keep file order).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Corpus {
    pub projects: Vec<ProjectRecord>,
    pub events: BTreeMap<String, Vec<ActivityEvent>>,
    pub labels: BTreeMap<String, DeliveryLabel>,
}

#[derive(Debug, Clone)]
pub struct CorpusPaths {
    pub projects: PathBuf,
    pub events: Option<PathBuf>,
    pub labels: Option<PathBuf>,
}

impl CorpusPaths {
    /// The three standard file names inside `dir`; missing event/label files
    /// are treated as empty.
    pub fn in_dir(dir: &Path) -> Self {
        let opt = |name: &str| {
            let p = dir.join(name);
            p.exists().then_some(p)
        };
        CorpusPaths {
            projects: dir.join(PROJECTS_FILE),
            events: opt(EVENTS_FILE),
            labels: opt(LABELS_FILE),
        }
    }
}

impl Corpus {
    pub fn project(&self, id: &str) -> Option<&ProjectRecord> {
        self.projects.iter().find(|p| p.id == id)
    }

    pub fn events_for(&self, id: &str) -> &[ActivityEvent] {
        self.events.get(id).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn label_for(&self, id: &str) -> Option<&DeliveryLabel> {
        self.labels.get(id)
    }

    /// Projects that carry a delivery label, in corpus order.
    pub fn labeled_projects(&self) -> Vec<&ProjectRecord> {
        self.projects
            .iter()
            .filter(|p| self.labels.contains_key(&p.id))
            .collect()
    }

    pub fn projects_jsonl(&self) -> String {
        to_jsonl(self.projects.iter())
    }

    pub fn events_jsonl(&self) -> String {
        // Project order, then time order within a project.
        let ordered = self
            .projects
            .iter()
            .flat_map(|p| self.events_for(&p.id).iter());
        to_jsonl(ordered)
    }

    pub fn labels_jsonl(&self) -> String {
        let ordered = self
            .projects
            .iter()
            .filter_map(|p| self.labels.get(&p.id));
        to_jsonl(ordered)
    }

    /// Writes the three standard files into `dir`, each prefixed by `header`
    /// lines (which must already start with `#`).
    pub fn save_dir(&self, dir: &Path, header: &str) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (name, body) in [
            (PROJECTS_FILE, self.projects_jsonl()),
            (EVENTS_FILE, self.events_jsonl()),
            (LABELS_FILE, self.labels_jsonl()),
        ] {
            let path = dir.join(name);
            fs::write(&path, format!("{header}{body}")).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }

    /// Parses a corpus from in-memory JSONL documents. `names` are used in
    /// diagnostics only.
    pub fn from_jsonl(
        projects: (&str, &str),
        events: Option<(&str, &str)>,
        labels: Option<(&str, &str)>,
    ) -> Result<Corpus> {
        let (pname, ptext) = projects;
        let mut corpus = Corpus::default();
        let mut index: BTreeMap<String, usize> = BTreeMap::new();
        for (line, rec) in parse_lines::<ProjectRecord>(pname, ptext)? {
            rec.validate().map_err(|reason| Error::InvariantViolation {
                path: pname.to_string(),
                line,
                id: rec.id.clone(),
                reason,
            })?;
            if index.insert(rec.id.clone(), corpus.projects.len()).is_some() {
                return Err(Error::DuplicateId {
                    path: pname.to_string(),
                    line,
                    kind: "project",
                    id: rec.id,
                });
            }
            corpus.projects.push(rec);
        }

        if let Some((ename, etext)) = events {
            for (line, ev) in parse_lines::<ActivityEvent>(ename, etext)? {
                let Some(&pi) = index.get(&ev.project_id) else {
                    return Err(Error::DanglingReference {
                        path: ename.to_string(),
                        line,
                        kind: "event",
                        project_id: ev.project_id,
                    });
                };
                if ev.ts < corpus.projects[pi].launch_ts {
                    return Err(Error::InvariantViolation {
                        path: ename.to_string(),
                        line,
                        id: ev.project_id.clone(),
                        reason: format!("event ts {} precedes project launch", ev.ts),
                    });
                }
                corpus.events.entry(ev.project_id.clone()).or_default().push(ev);
            }
            for list in corpus.events.values_mut() {
                list.sort_by_key(|e| e.ts);
            }
        }

        if let Some((lname, ltext)) = labels {
            for (line, label) in parse_lines::<DeliveryLabel>(lname, ltext)? {
                if !index.contains_key(&label.project_id) {
                    return Err(Error::DanglingReference {
                        path: lname.to_string(),
                        line,
                        kind: "label",
                        project_id: label.project_id,
                    });
                }
                if let Some(d) = label.actual_duration_days {
                    if !(d.is_finite() && d > 0.0) {
                        return Err(Error::InvariantViolation {
                            path: lname.to_string(),
                            line,
                            id: label.project_id.clone(),
                            reason: format!("actual_duration_days must be positive, got {d}"),
                        });
                    }
                }
                if corpus.labels.contains_key(&label.project_id) {
                    return Err(Error::DuplicateId {
                        path: lname.to_string(),
                        line,
                        kind: "label",
                        id: label.project_id,
                    });
                }
                corpus.labels.insert(label.project_id.clone(), label);
            }
        }
        Ok(corpus)
    }
}

fn to_jsonl<'a, T: Serialize + 'a>(items: impl Iterator<Item = &'a T>) -> String {
    let mut out = String::new();
    for item in items {
        // Serializing plain data structs cannot fail.
        let line = serde_json::to_string(item).expect("record serializes");
        let _ = writeln!(out, "{line}");
    }
    out
}

fn parse_lines<T: DeserializeOwned>(path: &str, text: &str) -> Result<Vec<(usize, T)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let de = &mut serde_json::Deserializer::from_str(line);
        let value: T = serde_path_to_error::deserialize(de).map_err(|err| {
            let field = err.path().to_string();
            Error::Malformed {
                path: path.to_string(),
                line: line_no,
                field: if field == "." { "<record>".into() } else { field },
                message: err.into_inner().to_string(),
            }
        })?;
        out.push((line_no, value));
    }
    Ok(out)
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Loads and validates a corpus from disk.
pub fn load_corpus(paths: &CorpusPaths) -> Result<Corpus> {
    let ptext = read(&paths.projects)?;
    let etext = paths.events.as_deref().map(read).transpose()?;
    let ltext = paths.labels.as_deref().map(read).transpose()?;
    let pname = paths.projects.display().to_string();
    let ename = paths.events.as_ref().map(|p| p.display().to_string());
    let lname = paths.labels.as_ref().map(|p| p.display().to_string());
    Corpus::from_jsonl(
        (&pname, &ptext),
        ename.as_deref().zip(etext.as_deref()),
        lname.as_deref().zip(ltext.as_deref()),
    )
}

/// Keeps successful projects whose goal is at least `min_goal`, together with
/// their events and labels.
pub fn filter_successful(corpus: &Corpus, min_goal: f64) -> Corpus {
    let projects: Vec<ProjectRecord> = corpus
        .projects
        .iter()
        .filter(|p| p.successful && p.goal >= min_goal)
        .cloned()
        .collect();
    let keep: HashSet<&str> = projects.iter().map(|p| p.id.as_str()).collect();
    let events = corpus
        .events
        .iter()
        .filter(|(k, _)| keep.contains(k.as_str()))
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect();
    let labels = corpus
        .labels
        .iter()
        .filter(|(k, _)| keep.contains(k.as_str()))
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect();
    Corpus {
        projects,
        events,
        labels,
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn project(id: &str, goal: f64) -> ProjectRecord {
        ProjectRecord {
            id: id.into(),
            category: Category::Games,
            goal,
            pledged: goal * 1.2,
            successful: true,
            launch_ts: 1_000_000,
            deadline_ts: 1_000_000 + 30 * 86_400,
            images_count: 3,
            faqs_count: 1,
            project_description: "A card game. It is fun.".into(),
            bio_description: "We make games.".into(),
            rewards: vec![RewardRecord {
                id: format!("{id}-r1"),
                description: "A copy of the game".into(),
                pledge_amount: 25.0,
                estimated_delivery_ts: 1_000_000 + 120 * 86_400,
                backer_count: 40,
            }],
            creator_backed_count: 2,
            creator_created_count: 1,
        }
    }

    fn jsonl(ps: &[ProjectRecord]) -> String {
        to_jsonl(ps.iter())
    }

    #[test]
    fn loads_three_projects() {
        let text = jsonl(&[project("a", 100.0), project("b", 200.0), project("c", 300.0)]);
        let c = Corpus::from_jsonl(("corpus.jsonl", &text), None, None).unwrap();
        assert_eq!(c.projects.len(), 3);
    }

    #[test]
    fn rejects_deadline_before_launch_naming_record() {
        let mut bad = project("bad-one", 100.0);
        bad.deadline_ts = bad.launch_ts - 10;
        let text = jsonl(&[project("ok", 100.0), bad]);
        let err = Corpus::from_jsonl(("corpus.jsonl", &text), None, None).unwrap_err();
        match err {
            Error::InvariantViolation { line, id, .. } => {
                assert_eq!(line, 2);
                assert_eq!(id, "bad-one");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_dangling_label() {
        let text = jsonl(&[project("a", 100.0)]);
        let labels = r#"{"project_id":"zzz","status":"late"}"#;
        let err = Corpus::from_jsonl(("c", &text), None, Some(("labels.jsonl", labels))).unwrap_err();
        assert!(matches!(err, Error::DanglingReference { kind: "label", .. }));
    }

    #[test]
    fn rejects_duplicate_project_and_reports_malformed_field() {
        let text = jsonl(&[project("a", 100.0), project("a", 100.0)]);
        let err = Corpus::from_jsonl(("c", &text), None, None).unwrap_err();
        assert!(matches!(err, Error::DuplicateId { line: 2, .. }));

        let broken = jsonl(&[project("a", 100.0)]).replace("\"goal\":100.0", "\"goal\":\"lots\"");
        let err = Corpus::from_jsonl(("c", &broken), None, None).unwrap_err();
        match err {
            Error::Malformed { line, field, .. } => {
                assert_eq!(line, 1);
                assert_eq!(field, "goal");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_event_before_launch() {
        let text = jsonl(&[project("a", 100.0)]);
        let ev = r#"{"project_id":"a","author_role":"backer","kind":"comment","ts":5,"text":"hi"}"#;
        let err = Corpus::from_jsonl(("c", &text), Some(("e", ev)), None).unwrap_err();
        assert!(matches!(err, Error::InvariantViolation { .. }));
    }

    #[test]
    fn skips_comment_lines_and_sorts_events() {
        let text = format!("# header\n\n{}", jsonl(&[project("a", 100.0)]));
        let ev = "{\"project_id\":\"a\",\"author_role\":\"backer\",\"kind\":\"comment\",\"ts\":1000900,\"text\":\"b\"}\n\
                  {\"project_id\":\"a\",\"author_role\":\"creator\",\"kind\":\"update\",\"ts\":1000100,\"text\":\"a\"}";
        let c = Corpus::from_jsonl(("c", &text), Some(("e", ev)), None).unwrap();
        let evs = c.events_for("a");
        assert_eq!(evs[0].ts, 1_000_100);
        assert_eq!(evs[1].ts, 1_000_900);
    }

    #[test]
    fn filter_by_goal_threshold() {
        let c = Corpus {
            projects: vec![project("a", 50.0), project("b", 100.0), project("c", 500.0)],
            ..Default::default()
        };
        assert_eq!(filter_successful(&c, 100.0).projects.len(), 2);
        assert!(filter_successful(&c, 10_000.0).projects.is_empty());
        assert_eq!(filter_successful(&c, 0.0).projects.len(), 3);

        let mut failed = c.clone();
        failed.projects[2].successful = false;
        assert_eq!(filter_successful(&failed, 0.0).projects.len(), 2);
    }
}
