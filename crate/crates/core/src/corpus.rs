//! Dataset manifest, sub-action scripts, class-name embeddings and frame
//! embedding loading. Everything read from disk passes through here and is
//! validated before the rest of the engine sees it.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{self, Matrix};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VideoEntry {
    pub video_id: String,
    pub domain: String,
    pub frame_count: usize,
    pub candidates: Vec<String>,
    pub ground_truth: String,
    pub embedding_file: PathBuf,
}

impl VideoEntry {
    /// Position of `class_id` in the manifest candidate order.
    pub fn candidate_index(&self, class_id: &str) -> Option<usize> {
        self.candidates.iter().position(|c| c == class_id)
    }

    fn validate(&self) -> Result<()> {
        let invalid = |field, reason: String| Error::InvalidVideo {
            video_id: self.video_id.clone(),
            field,
            reason,
        };
        if self.video_id.is_empty() {
            return Err(invalid("video_id", "empty id".into()));
        }
        if self.frame_count == 0 {
            return Err(invalid("frame_count", "must be at least 1".into()));
        }
        if self.candidates.len() < 2 {
            return Err(invalid(
                "candidates",
                format!("needs at least 2 candidates, found {}", self.candidates.len()),
            ));
        }
        let mut seen = HashSet::new();
        if let Some(dup) = self.candidates.iter().find(|c| !seen.insert(c.as_str())) {
            return Err(invalid("candidates", format!("duplicate candidate {dup}")));
        }
        if self.candidate_index(&self.ground_truth).is_none() {
            return Err(invalid(
                "ground_truth",
                format!("{} is not among the candidates", self.ground_truth),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub videos: Vec<VideoEntry>,
    #[serde(default)]
    pub domains: BTreeMap<String, String>,
    /// Directory that relative embedding paths resolve against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl DatasetManifest {
    pub fn validate(&self) -> Result<()> {
        let mut ids = HashSet::new();
        for v in &self.videos {
            v.validate()?;
            if !ids.insert(v.video_id.as_str()) {
                return Err(Error::DuplicateVideo(v.video_id.clone()));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.videos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.videos.is_empty()
    }

    pub fn video(&self, video_id: &str) -> Option<&VideoEntry> {
        self.videos.iter().find(|v| v.video_id == video_id)
    }

    pub fn embedding_path(&self, entry: &VideoEntry) -> PathBuf {
        self.base_dir.join(&entry.embedding_file)
    }

    /// Sorted, de-duplicated class ids referenced by any candidate list.
    pub fn class_ids(&self) -> Vec<String> {
        let set: std::collections::BTreeSet<&str> = self
            .videos
            .iter()
            .flat_map(|v| v.candidates.iter().map(String::as_str))
            .collect();
        set.into_iter().map(str::to_string).collect()
    }
}

pub fn parse_manifest(json: &str, base_dir: &Path) -> std::result::Result<DatasetManifest, serde_json::Error> {
    let mut manifest: DatasetManifest = serde_json::from_str(json)?;
    manifest.base_dir = base_dir.to_path_buf();
    Ok(manifest)
}

pub fn load_manifest(path: &Path) -> Result<DatasetManifest> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let manifest = parse_manifest(&text, parent_dir(path)).map_err(|e| Error::json(path, e))?;
    manifest.validate()?;
    Ok(manifest)
}

fn parent_dir(path: &Path) -> &Path {
    path.parent().unwrap_or_else(|| Path::new(""))
}

/// Unit-norm frame embeddings of one video, one row per frame.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSequence {
    pub video_id: String,
    pub frames: Matrix,
    /// Rows that came out of smoothing as exact zero vectors.
    pub degenerate_rows: Vec<usize>,
}

impl EmbeddingSequence {
    /// Wraps `frames` after normalizing every row.
    pub fn normalized(video_id: impl Into<String>, mut frames: Matrix) -> Result<Self> {
        let video_id = video_id.into();
        frames.normalize_rows(&format!("video {video_id}"))?;
        Ok(Self {
            video_id,
            frames,
            degenerate_rows: Vec::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.frames.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.rows() == 0
    }

    pub fn dim(&self) -> usize {
        self.frames.cols()
    }
}

/// Loads a frame tensor and L2-normalizes its rows. `expected_dim` is
/// checked only when given.
pub fn load_embeddings(
    path: &Path,
    video_id: &str,
    expected_frames: usize,
    expected_dim: Option<usize>,
) -> Result<EmbeddingSequence> {
    let frames = tensor::read_tensor(path)?;
    let (rows, cols) = (frames.rows(), frames.cols());
    if rows != expected_frames || expected_dim.is_some_and(|d| d != cols) || cols == 0 {
        return Err(Error::ShapeMismatch {
            context: format!("video {video_id} ({})", path.display()),
            expected_rows: expected_frames,
            expected_cols: expected_dim.unwrap_or(cols.max(1)),
            rows,
            cols,
        });
    }
    EmbeddingSequence::normalized(video_id, frames)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptStyle {
    ShortFixed,
    #[default]
    ContextRich,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubActionScript {
    pub class_id: String,
    pub domain: String,
    pub texts: Vec<String>,
    /// K x d unit-norm rows, in script order. Absent when the script file
    /// lists texts only.
    pub embeddings: Option<Matrix>,
    pub prompt_style: PromptStyle,
    pub context_augmented: bool,
}

impl SubActionScript {
    pub fn len(&self) -> usize {
        self.texts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.texts.is_empty()
    }

    pub fn embeddings(&self) -> Result<&Matrix> {
        self.embeddings.as_ref().ok_or_else(|| Error::InvalidScript {
            class_id: self.class_id.clone(),
            reason: "script has no embeddings".into(),
        })
    }

    pub(crate) fn validate(&self) -> Result<()> {
        let invalid = |reason: String| Error::InvalidScript {
            class_id: self.class_id.clone(),
            reason,
        };
        if self.texts.is_empty() {
            return Err(invalid("empty sub-action list".into()));
        }
        if let Some(e) = &self.embeddings {
            if e.rows() != self.texts.len() {
                return Err(invalid(format!(
                    "length mismatch: {} texts but {} embedding rows",
                    self.texts.len(),
                    e.rows()
                )));
            }
            if e.cols() == 0 {
                return Err(invalid("embedding dimension is zero".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Deserialize)]
struct ScriptRecord {
    #[serde(default)]
    domain: String,
    texts: Vec<String>,
    #[serde(default)]
    embedding_file: Option<PathBuf>,
    #[serde(default)]
    prompt_style: PromptStyle,
    #[serde(default)]
    context_augmented: bool,
}

pub fn load_scripts(path: &Path) -> Result<BTreeMap<String, SubActionScript>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let records: BTreeMap<String, ScriptRecord> =
        serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
    let base = parent_dir(path);
    let mut out = BTreeMap::new();
    for (class_id, rec) in records {
        let embeddings = match &rec.embedding_file {
            Some(file) => {
                let mut m = tensor::read_tensor(&base.join(file))?;
                if m.rows() == rec.texts.len() {
                    m.normalize_rows(&format!("class {class_id}"))?;
                }
                Some(m)
            }
            None => None,
        };
        let script = SubActionScript {
            class_id: class_id.clone(),
            domain: rec.domain,
            texts: rec.texts,
            embeddings,
            prompt_style: rec.prompt_style,
            context_augmented: rec.context_augmented,
        };
        script.validate()?;
        out.insert(class_id, script);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassNameEmbedding {
    pub class_id: String,
    pub name: String,
    pub embedding: Vec<f32>,
}

#[derive(Debug, Deserialize)]
struct NameRecord {
    #[serde(default)]
    name: String,
    embedding_file: PathBuf,
}

/// Loads class-name embeddings: `{class_id: {"name", "embedding_file"}}`
/// where each tensor file holds a single row.
pub fn load_names(path: &Path) -> Result<BTreeMap<String, ClassNameEmbedding>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let records: BTreeMap<String, NameRecord> =
        serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
    let base = parent_dir(path);
    let mut out = BTreeMap::new();
    for (class_id, rec) in records {
        let file = base.join(&rec.embedding_file);
        let mut m = tensor::read_tensor(&file)?;
        if m.rows() != 1 || m.cols() == 0 {
            return Err(Error::ShapeMismatch {
                context: format!("name embedding of class {class_id} ({})", file.display()),
                expected_rows: 1,
                expected_cols: m.cols().max(1),
                rows: m.rows(),
                cols: m.cols(),
            });
        }
        m.normalize_rows(&format!("name of class {class_id}"))?;
        out.insert(
            class_id.clone(),
            ClassNameEmbedding {
                class_id,
                name: rec.name,
                embedding: m.row(0).to_vec(),
            },
        );
    }
    Ok(out)
}
