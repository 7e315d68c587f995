//! Artifact layout under the output directory, provenance headers, and
//! write-if-changed output.

use std::fs;
use std::path::{Path, PathBuf};

use fulfillkit_core::features::TimePoint;
use fulfillkit_core::{Error, Result};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Tool version, config hash and master seed stamped on every artifact.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub config_hash: String,
    pub master_seed: u64,
}

impl Provenance {
    /// `#`-comment header for JSONL, CSV, JSON and text artifacts.
    pub fn hash_header(&self) -> String {
        format!(
            "# fulfillkit {TOOL_VERSION}\n# config_hash {}\n# master_seed {}\n",
            self.config_hash, self.master_seed
        )
    }

    /// Header for markdown artifacts, where `#` starts a heading.
    pub fn markdown_header(&self) -> String {
        format!(
            "<!-- fulfillkit {TOOL_VERSION} | config_hash {} | master_seed {} -->\n\n",
            self.config_hash, self.master_seed
        )
    }

    pub fn stamp(&self, path: &Path, body: &str) -> String {
        if path.extension().is_some_and(|e| e == "md") {
            format!("{}{body}", self.markdown_header())
        } else {
            format!("{}{body}", self.hash_header())
        }
    }
}

/// Drops leading `#` comment lines.
pub fn strip_header(text: &str) -> &str {
    let mut rest = text;
    while rest.starts_with('#') {
        rest = match rest.find('\n') {
            Some(i) => &rest[i + 1..],
            None => "",
        };
    }
    rest
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WriteOutcome {
    Written,
    Unchanged,
}

/// Writes `contents` unless the file already holds exactly these bytes.
pub fn write_if_changed(path: &Path, contents: &str) -> Result<WriteOutcome> {
    if let Ok(existing) = fs::read(path) {
        if existing == contents.as_bytes() {
            return Ok(WriteOutcome::Unchanged);
        }
    }
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let tmp = path.with_extension("partial");
    fs::write(&tmp, contents).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))?;
    Ok(WriteOutcome::Written)
}

/// Reads an artifact produced by an earlier command; a missing file names
/// that command.
pub fn read_artifact(path: &Path, producer: &str) -> Result<String> {
    if !path.exists() {
        return Err(Error::InvalidInput(format!(
            "missing artifact {}; run `fulfillkit {producer}` first",
            path.display()
        )));
    }
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// File names inside the output directory.
#[derive(Debug, Clone)]
pub struct Layout {
    pub root: PathBuf,
}

impl Layout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Layout { root: root.into() }
    }

    pub fn corpus_dir(&self) -> PathBuf {
        self.root.join("corpus")
    }

    pub fn embeddings(&self) -> PathBuf {
        self.root.join("embeddings.txt")
    }

    pub fn semantic_model(&self) -> PathBuf {
        self.root.join("semantic_model.json")
    }

    pub fn difficulty(&self) -> PathBuf {
        self.root.join("difficulty.csv")
    }

    pub fn features(&self, tp: TimePoint) -> PathBuf {
        self.root.join("features").join(format!("{tp}.csv"))
    }

    pub fn feature_schema(&self, tp: TimePoint) -> PathBuf {
        self.root.join("features").join(format!("{tp}.schema.json"))
    }

    pub fn selection(&self, tp: TimePoint) -> PathBuf {
        self.root.join("selection").join(format!("{tp}.json"))
    }

    pub fn selection_table(&self, tp: TimePoint, name: &str) -> PathBuf {
        self.root.join("selection").join(format!("{tp}_{name}.csv"))
    }

    pub fn classifier(&self, tp: TimePoint) -> PathBuf {
        self.root.join("models").join(format!("classifier_{tp}.json"))
    }

    pub fn regressor(&self, tp: TimePoint) -> PathBuf {
        self.root.join("models").join(format!("regressor_{tp}.json"))
    }

    pub fn report(&self, ext: &str) -> PathBuf {
        self.root.join("report").join(format!("report.{ext}"))
    }

    pub fn predictions(&self) -> PathBuf {
        self.root.join("report").join("predictions.csv")
    }

    pub fn ablation(&self, ext: &str) -> PathBuf {
        self.root.join("report").join(format!("ablation.{ext}"))
    }

    pub fn prediction_for(&self, project_id: &str) -> PathBuf {
        self.root.join("predict").join(format!("{project_id}.json"))
    }
}
