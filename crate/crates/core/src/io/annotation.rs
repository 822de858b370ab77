//! Annotation files: one annotated turn plus its candidate sets, as UTF-8 JSON.
//!
//! ```json
//! {
//!   "turn_id": "t1",
//!   "context": [{"role": "user", "text": "..."}],
//!   "canonical_text": "...",
//!   "nuggets": [{"id": "n1", "text": "...", "act": "apology"}],
//!   "candidates": {"n1": {"diff": [{"act": "opening", "text": "..."}], "same": ["..."]}}
//! }
//! ```

use std::fs;
use std::io::Write;
use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::IoError;
use crate::model::{validate_annotation, AnnotatedTurn, CandidateSet, DiffCandidate, Nugget, Utterance};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NuggetRecord {
    pub id: String,
    pub text: String,
    pub act: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CandidateRecord {
    #[serde(default)]
    pub diff: Vec<DiffCandidate>,
    #[serde(default)]
    pub same: Vec<String>,
}

/// On-disk shape of an annotation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotationFile {
    pub turn_id: String,
    #[serde(default)]
    pub context: Vec<Utterance>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub canonical_text: Option<String>,
    pub nuggets: Vec<NuggetRecord>,
    #[serde(default)]
    pub candidates: IndexMap<String, CandidateRecord>,
}

impl AnnotationFile {
    pub fn into_model(self) -> (AnnotatedTurn, Vec<CandidateSet>) {
        let nuggets = self
            .nuggets
            .into_iter()
            .enumerate()
            .map(|(position, n)| Nugget { id: n.id, text: n.text, act: n.act, position })
            .collect();
        let turn = AnnotatedTurn {
            turn_id: self.turn_id,
            context: self.context,
            canonical_text: self.canonical_text,
            nuggets,
        };
        let candidates = self
            .candidates
            .into_iter()
            .map(|(nugget_id, c)| CandidateSet { nugget_id, diff_candidates: c.diff, same_candidates: c.same })
            .collect();
        (turn, candidates)
    }

    pub fn from_model(turn: &AnnotatedTurn, candidates: &[CandidateSet]) -> Self {
        let nuggets = turn
            .ordered_nuggets()
            .into_iter()
            .map(|n| NuggetRecord { id: n.id.clone(), text: n.text.clone(), act: n.act.clone() })
            .collect();
        let mut map: IndexMap<String, CandidateRecord> = IndexMap::new();
        for set in candidates {
            let entry = map.entry(set.nugget_id.clone()).or_default();
            entry.diff.extend(set.diff_candidates.iter().cloned());
            entry.same.extend(set.same_candidates.iter().cloned());
        }
        AnnotationFile {
            turn_id: turn.turn_id.clone(),
            context: turn.context.clone(),
            canonical_text: turn.canonical_text.clone(),
            nuggets,
            candidates: map,
        }
    }
}

/// Parses and validates annotation JSON. Validation errors abort; warnings are dropped.
pub fn parse_annotation(json: &str) -> Result<(AnnotatedTurn, Vec<CandidateSet>), IoError> {
    let file: AnnotationFile = serde_json::from_str(json).map_err(|e| IoError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let (turn, candidates) = file.into_model();
    let report = validate_annotation(&turn, &candidates);
    if !report.ok {
        return Err(IoError::Validation(report));
    }
    Ok((turn, candidates))
}

pub fn load_annotation(path: &Path) -> Result<(AnnotatedTurn, Vec<CandidateSet>), IoError> {
    let raw = fs::read_to_string(path).map_err(|e| IoError::io(path, e))?;
    parse_annotation(&raw)
}

pub fn annotation_to_json(turn: &AnnotatedTurn, candidates: &[CandidateSet]) -> String {
    serde_json::to_string_pretty(&AnnotationFile::from_model(turn, candidates)).expect("annotation serialization is infallible")
}

/// Writes `bytes` to `path` through a temporary file in the same directory
/// followed by a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), IoError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| IoError::io(path, e))?;
    tmp.write_all(bytes).map_err(|e| IoError::io(path, e))?;
    tmp.persist(path).map_err(|e| IoError::io(path, e.error))?;
    Ok(())
}

pub fn save_annotation(path: &Path, turn: &AnnotatedTurn, candidates: &[CandidateSet]) -> Result<(), IoError> {
    let mut json = annotation_to_json(turn, candidates);
    json.push('\n');
    write_atomic(path, json.as_bytes())
}
