//! Deterministic in-process scorers used as test substrates and for smoke runs.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::{check_finite, Scorer, ScorerError, ScorerRequest};

pub(crate) fn short_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().take(6).map(|b| format!("{b:02x}")).collect()
}

/// Returns the same value for every text.
#[derive(Debug, Clone)]
pub struct ConstantScorer {
    value: f64,
    identity: String,
}

impl ConstantScorer {
    pub fn new(value: f64) -> Result<Self, ScorerError> {
        check_finite(value)?;
        Ok(Self { value, identity: format!("builtin:constant:{value}") })
    }
}

impl Scorer for ConstantScorer {
    fn identity(&self) -> &str {
        &self.identity
    }

    fn score(&self, _request: &ScorerRequest) -> Result<f64, ScorerError> {
        Ok(self.value)
    }
}

/// `w / (w + 20)` where `w` is the whitespace-separated token count of the turn.
#[derive(Debug, Clone, Default)]
pub struct LengthScorer;

impl LengthScorer {
    pub const HALF_POINT: f64 = 20.0;

    pub fn new() -> Self {
        LengthScorer
    }
}

impl Scorer for LengthScorer {
    fn identity(&self) -> &str {
        "builtin:length"
    }

    fn score(&self, request: &ScorerRequest) -> Result<f64, ScorerError> {
        let words = request.turn_text.split_whitespace().count() as f64;
        Ok(words / (words + Self::HALF_POINT))
    }
}

/// Fraction of configured keywords found in the turn (case-insensitive substring match).
#[derive(Debug, Clone)]
pub struct KeywordScorer {
    keywords: Vec<String>,
    identity: String,
}

impl KeywordScorer {
    pub fn new(keywords: Vec<String>) -> Result<Self, ScorerError> {
        let keywords: Vec<String> = keywords
            .into_iter()
            .map(|k| k.trim().to_lowercase())
            .filter(|k| !k.is_empty())
            .collect();
        if keywords.is_empty() {
            return Err(ScorerError::Config("keyword scorer needs at least one keyword".into()));
        }
        let identity = format!("builtin:keyword#{}", short_digest(keywords.join("\n").as_bytes()));
        Ok(Self { keywords, identity })
    }

    /// Reads a JSON array of strings, or plain text with one keyword per line.
    pub fn from_file(path: &Path) -> Result<Self, ScorerError> {
        let raw = fs::read_to_string(path)
            .map_err(|e| ScorerError::Config(format!("cannot read keyword file {}: {e}", path.display())))?;
        let keywords = match serde_json::from_str::<Vec<String>>(&raw) {
            Ok(list) => list,
            Err(_) if !raw.trim_start().starts_with('[') => raw.lines().map(String::from).collect(),
            Err(e) => return Err(ScorerError::Config(format!("bad keyword file {}: {e}", path.display()))),
        };
        let mut s = Self::new(keywords)?;
        s.identity = format!("builtin:keyword:{}#{}", path.display(), short_digest(raw.as_bytes()));
        Ok(s)
    }
}

impl Scorer for KeywordScorer {
    fn identity(&self) -> &str {
        &self.identity
    }

    fn score(&self, request: &ScorerRequest) -> Result<f64, ScorerError> {
        let text = request.turn_text.to_lowercase();
        let hits = self.keywords.iter().filter(|k| text.contains(k.as_str())).count();
        Ok(hits as f64 / self.keywords.len() as f64)
    }
}

/// Exact-text lookup; a text missing from the table is a `SCORER_REJECTED` error.
#[derive(Debug, Clone)]
pub struct TableScorer {
    table: HashMap<String, f64>,
    identity: String,
}

impl TableScorer {
    pub fn new(table: HashMap<String, f64>) -> Result<Self, ScorerError> {
        if let Some((text, v)) = table.iter().find(|(_, v)| !v.is_finite()) {
            return Err(ScorerError::Config(format!("table entry {text:?} has non-finite score {v}")));
        }
        let mut entries: Vec<(&String, &f64)> = table.iter().collect();
        entries.sort_by(|a, b| a.0.cmp(b.0));
        let canonical: String = entries.iter().map(|(t, v)| format!("{t}\u{0}{}\n", v.to_bits())).collect();
        let identity = format!("builtin:table#{}", short_digest(canonical.as_bytes()));
        Ok(Self { table, identity })
    }

    /// Reads a JSON object mapping turn text to score.
    pub fn from_file(path: &Path) -> Result<Self, ScorerError> {
        let raw = fs::read_to_string(path)
            .map_err(|e| ScorerError::Config(format!("cannot read table file {}: {e}", path.display())))?;
        let table: HashMap<String, f64> = serde_json::from_str(&raw)
            .map_err(|e| ScorerError::Config(format!("bad table file {}: {e}", path.display())))?;
        let mut s = Self::new(table)?;
        s.identity = format!("builtin:table:{}#{}", path.display(), short_digest(raw.as_bytes()));
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }
}

impl Scorer for TableScorer {
    fn identity(&self) -> &str {
        &self.identity
    }

    fn score(&self, request: &ScorerRequest) -> Result<f64, ScorerError> {
        self.table.get(&request.turn_text).copied().ok_or_else(|| ScorerError::Rejected {
            code: "TABLE_MISS".into(),
            message: format!("no table entry for {:?}", request.turn_text),
        })
    }
}
