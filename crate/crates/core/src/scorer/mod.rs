//! Uniform access to turn-level scorers.
//!
//! A scorer maps a system turn (plus optional dialogue context) to one real
//! number. Builtin scorers are deterministic mocks; `exec` and `http` speak the
//! JSON protocol in [`protocol`] to an external process or service.

pub mod builtin;
pub mod cache;
pub mod exec;
pub mod http;
pub mod protocol;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::Utterance;

pub use builtin::{ConstantScorer, KeywordScorer, LengthScorer, TableScorer};
pub use cache::{cached, CacheStats, CachedScorer};
pub use exec::ExecScorer;
pub use http::HttpScorer;

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ScorerRequest {
    pub request_id: String,
    pub turn_text: String,
    pub context: Vec<Utterance>,
}

impl ScorerRequest {
    pub fn new(request_id: impl Into<String>, turn_text: impl Into<String>) -> Self {
        Self { request_id: request_id.into(), turn_text: turn_text.into(), context: Vec::new() }
    }

    pub fn with_context(mut self, context: Vec<Utterance>) -> Self {
        self.context = context;
        self
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ScorerError {
    #[error("SCORER_TIMEOUT: {0}")]
    Timeout(String),
    #[error("SCORER_PROTOCOL: {0}")]
    Protocol(String),
    #[error("SCORER_REJECTED: {code}: {message}")]
    Rejected { code: String, message: String },
    #[error("NON_FINITE_SCORE: scorer returned {0}")]
    NonFinite(f64),
    #[error("SCORER_CONFIG: {0}")]
    Config(String),
}

impl ScorerError {
    pub fn code(&self) -> &'static str {
        match self {
            ScorerError::Timeout(_) => "SCORER_TIMEOUT",
            ScorerError::Protocol(_) => "SCORER_PROTOCOL",
            ScorerError::Rejected { .. } => "SCORER_REJECTED",
            ScorerError::NonFinite(_) => "NON_FINITE_SCORE",
            ScorerError::Config(_) => "SCORER_CONFIG",
        }
    }
}

pub(crate) fn check_finite(score: f64) -> Result<f64, ScorerError> {
    if score.is_finite() {
        Ok(score)
    } else {
        Err(ScorerError::NonFinite(score))
    }
}

/// A turn-level quality scorer.
pub trait Scorer: Send + Sync {
    /// Stable string naming this scorer and its configuration.
    fn identity(&self) -> &str;

    fn score(&self, request: &ScorerRequest) -> Result<f64, ScorerError>;

    /// Scores every request; the result at index `i` belongs to `requests[i]`.
    /// One failing request does not fail the others.
    fn score_batch(&self, requests: &[ScorerRequest]) -> Vec<Result<f64, ScorerError>> {
        requests.iter().map(|r| self.score(r)).collect()
    }
}

impl<S: Scorer + ?Sized> Scorer for Box<S> {
    fn identity(&self) -> &str {
        (**self).identity()
    }
    fn score(&self, request: &ScorerRequest) -> Result<f64, ScorerError> {
        (**self).score(request)
    }
    fn score_batch(&self, requests: &[ScorerRequest]) -> Vec<Result<f64, ScorerError>> {
        (**self).score_batch(requests)
    }
}

impl<S: Scorer + ?Sized> Scorer for std::sync::Arc<S> {
    fn identity(&self) -> &str {
        (**self).identity()
    }
    fn score(&self, request: &ScorerRequest) -> Result<f64, ScorerError> {
        (**self).score(request)
    }
    fn score_batch(&self, requests: &[ScorerRequest]) -> Vec<Result<f64, ScorerError>> {
        (**self).score_batch(requests)
    }
}

/// Pairs request ids with [`Scorer::score_batch`] results.
pub fn score_batch(scorer: &dyn Scorer, requests: &[ScorerRequest]) -> Vec<(String, Result<f64, ScorerError>)> {
    let results = scorer.score_batch(requests);
    requests.iter().map(|r| r.request_id.clone()).zip(results).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScorerKind {
    Builtin,
    Exec,
    Http,
}

#[derive(Debug, Clone, PartialEq)]
pub enum BuiltinSpec {
    Constant(f64),
    Length,
    Keyword(PathBuf),
    Table(PathBuf),
}

/// Parsed scorer selection, e.g. `builtin:constant:0.5`, `table:scores.json`,
/// `exec:./my-scorer --flag` or `http:http://localhost:8000`.
#[derive(Debug, Clone, PartialEq)]
pub enum ScorerDescriptor {
    Builtin(BuiltinSpec),
    /// Program and arguments, split on whitespace.
    Exec(Vec<String>),
    /// Base URL; requests go to `<url>/score` unless the URL already ends in `/score`.
    Http(String),
}

impl ScorerDescriptor {
    pub fn kind(&self) -> ScorerKind {
        match self {
            ScorerDescriptor::Builtin(_) => ScorerKind::Builtin,
            ScorerDescriptor::Exec(_) => ScorerKind::Exec,
            ScorerDescriptor::Http(_) => ScorerKind::Http,
        }
    }

    /// Deterministic identity string for cache keys and reports. Does not read
    /// files, so table and keyword identities name the path only; the opened
    /// scorer's identity also covers file contents.
    pub fn identity(&self) -> String {
        self.to_string()
    }

    /// Resolves the descriptor into a live scorer.
    pub fn open(&self, timeout: Duration) -> Result<Box<dyn Scorer>, ScorerError> {
        Ok(match self {
            ScorerDescriptor::Builtin(BuiltinSpec::Constant(v)) => Box::new(ConstantScorer::new(*v)?),
            ScorerDescriptor::Builtin(BuiltinSpec::Length) => Box::new(LengthScorer::new()),
            ScorerDescriptor::Builtin(BuiltinSpec::Keyword(p)) => Box::new(KeywordScorer::from_file(p)?),
            ScorerDescriptor::Builtin(BuiltinSpec::Table(p)) => Box::new(TableScorer::from_file(p)?),
            ScorerDescriptor::Exec(argv) => Box::new(ExecScorer::spawn(argv, timeout)?),
            ScorerDescriptor::Http(url) => Box::new(HttpScorer::new(url, timeout)),
        })
    }
}

impl fmt::Display for ScorerDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScorerDescriptor::Builtin(BuiltinSpec::Constant(v)) => write!(f, "builtin:constant:{}", v),
            ScorerDescriptor::Builtin(BuiltinSpec::Length) => write!(f, "builtin:length"),
            ScorerDescriptor::Builtin(BuiltinSpec::Keyword(p)) => write!(f, "builtin:keyword:{}", p.display()),
            ScorerDescriptor::Builtin(BuiltinSpec::Table(p)) => write!(f, "builtin:table:{}", p.display()),
            ScorerDescriptor::Exec(argv) => write!(f, "exec:{}", argv.join(" ")),
            ScorerDescriptor::Http(url) => write!(f, "http:{url}"),
        }
    }
}

impl FromStr for ScorerDescriptor {
    type Err = ScorerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if let Some(rest) = s.strip_prefix("exec:") {
            let argv: Vec<String> = rest.split_whitespace().map(String::from).collect();
            if argv.is_empty() {
                return Err(ScorerError::Config("exec scorer needs a program path".into()));
            }
            return Ok(ScorerDescriptor::Exec(argv));
        }
        if s.starts_with("http://") || s.starts_with("https://") {
            return Ok(ScorerDescriptor::Http(s.to_string()));
        }
        if let Some(rest) = s.strip_prefix("http:") {
            if rest.is_empty() {
                return Err(ScorerError::Config("http scorer needs a URL".into()));
            }
            return Ok(ScorerDescriptor::Http(rest.to_string()));
        }
        let spec = s.strip_prefix("builtin:").unwrap_or(s);
        let (name, arg) = match spec.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (spec, None),
        };
        let builtin = match (name, arg) {
            ("constant", Some(v)) => {
                let v: f64 = v.parse().map_err(|_| ScorerError::Config(format!("bad constant value {v:?}")))?;
                BuiltinSpec::Constant(v)
            }
            ("length", None) => BuiltinSpec::Length,
            ("keyword", Some(p)) if !p.is_empty() => BuiltinSpec::Keyword(PathBuf::from(p)),
            ("table", Some(p)) if !p.is_empty() => BuiltinSpec::Table(PathBuf::from(p)),
            _ => {
                return Err(ScorerError::Config(format!(
                    "unknown scorer {s:?}; expected constant:<v>, length, keyword:<file>, table:<file>, exec:<path> or http:<url>"
                )))
            }
        };
        Ok(ScorerDescriptor::Builtin(builtin))
    }
}
