//! Nugget scores from turn-level score differences.
//!
//! For a nugget `n` of turn `T` with turn scorer `s`:
//!
//! * deletion delta: `d_phi = s(T) - s(T with n deleted)`
//! * `md_diff`: mean of `s(T) - s` over the K largest scores of turns where `n`
//!   is replaced by a different-act candidate
//! * `md_same`: the same over the L largest same-act replacement scores
//! * `ns = sigmoid(w_phi * d_phi + w_diff * md_diff + w_same * md_same)`
//!
//! Scoring is the only side effect; everything after the scorer returns is a
//! deterministic fold over plan order.

use std::cmp::Ordering;
use std::sync::atomic::{AtomicU64, Ordering as AtomicOrdering};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{validate_annotation, validate_config, AnnotatedTurn, CandidateSet, EmptyTurnPolicy, ScoringConfig, ValidationReport};
use crate::perturbation::{enumerate_perturbations, render_turn, SlotEdit, PerturbationError, PerturbationKind, PerturbedTurn};
use crate::scorer::{Scorer, ScorerError, ScorerRequest};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("VALIDATION_ERROR: annotation is invalid\n{0}")]
    InvalidAnnotation(ValidationReport),
    #[error("VALIDATION_ERROR: config is invalid\n{0}")]
    InvalidConfig(ValidationReport),
    #[error("UNKNOWN_NUGGET: {0:?}")]
    UnknownNugget(String),
    #[error("EMPTY_CANDIDATES: no substitution scores to aggregate")]
    EmptyCandidates,
    #[error("NON_FINITE_SCORE: {0}")]
    NonFiniteScore(f64),
    #[error("EMPTY_TURN_PERTURBATION: deleting nugget {nugget_id:?} leaves an empty turn")]
    EmptyTurnPerturbation { nugget_id: String },
    #[error("EMPTY_CANDIDATE_TEXT: what-if candidate for {0:?} is blank")]
    EmptyDraft(String),
    #[error("SCORER_FAILURE: scoring {perturbation} ({text:?}) failed: {source}")]
    ScorerFailure {
        /// `original` or a perturbation label such as `n1/diff_substitution[2]`.
        perturbation: String,
        text: String,
        #[source]
        source: ScorerError,
    },
}

impl EngineError {
    pub fn code(&self) -> &'static str {
        match self {
            EngineError::InvalidAnnotation(_) | EngineError::InvalidConfig(_) => "VALIDATION_ERROR",
            EngineError::UnknownNugget(_) => "UNKNOWN_NUGGET",
            EngineError::EmptyCandidates => "EMPTY_CANDIDATES",
            EngineError::NonFiniteScore(_) => "NON_FINITE_SCORE",
            EngineError::EmptyTurnPerturbation { .. } => "EMPTY_TURN_PERTURBATION",
            EngineError::EmptyDraft(_) => "EMPTY_CANDIDATE_TEXT",
            EngineError::ScorerFailure { .. } => "SCORER_FAILURE",
        }
    }
}

impl From<PerturbationError> for EngineError {
    fn from(e: PerturbationError) -> Self {
        match e {
            PerturbationError::UnknownNugget(id) => EngineError::UnknownNugget(id),
        }
    }
}

/// A substitution score tagged with its candidate index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndexedScore {
    pub index: usize,
    pub score: f64,
}

impl IndexedScore {
    pub fn new(index: usize, score: f64) -> Self {
        Self { index, score }
    }
}

/// Everything that went into one nugget's score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreBreakdown {
    pub nugget_id: String,
    pub s_original: f64,
    pub s_deleted: f64,
    pub diff_scores: Vec<IndexedScore>,
    pub same_scores: Vec<IndexedScore>,
    pub selected_diff: Vec<IndexedScore>,
    pub selected_same: Vec<IndexedScore>,
    pub d_phi: f64,
    pub md_diff: Option<f64>,
    pub md_same: Option<f64>,
    pub effective_k: usize,
    pub effective_l: usize,
    pub ns: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnEvaluation {
    pub turn_id: String,
    pub s_original: f64,
    /// One per nugget, in position order.
    pub breakdowns: Vec<ScoreBreakdown>,
    pub config: ScoringConfig,
    pub scorer: String,
}

impl TurnEvaluation {
    pub fn breakdown(&self, nugget_id: &str) -> Option<&ScoreBreakdown> {
        self.breakdowns.iter().find(|b| b.nugget_id == nugget_id)
    }
}

/// `s_t - s_t_deleted`.
pub fn delta_deletion(s_t: f64, s_t_deleted: f64) -> Result<f64, EngineError> {
    for v in [s_t, s_t_deleted] {
        if !v.is_finite() {
            return Err(EngineError::NonFiniteScore(v));
        }
    }
    Ok(s_t - s_t_deleted)
}

fn by_score_desc(a: &IndexedScore, b: &IndexedScore) -> Ordering {
    b.score.total_cmp(&a.score).then(a.index.cmp(&b.index))
}

/// The `min(k, len)` largest scores, sorted by descending score and then
/// ascending index (which also decides ties at the cut).
pub fn top_k_select(scores: &[IndexedScore], k: usize) -> Vec<IndexedScore> {
    let mut sorted = scores.to_vec();
    sorted.sort_by(by_score_desc);
    sorted.truncate(k);
    sorted
}

/// Result of averaging the top substitution scores.
#[derive(Debug, Clone, PartialEq)]
pub struct SubstitutionMean {
    pub mean: f64,
    pub selected: Vec<IndexedScore>,
    /// `selected.len()`; smaller than requested when candidates run out.
    pub effective: usize,
}

fn mean_substitution(s_t: f64, scores: &[IndexedScore], top: usize) -> Result<SubstitutionMean, EngineError> {
    if scores.is_empty() {
        return Err(EngineError::EmptyCandidates);
    }
    if let Some(bad) = std::iter::once(s_t).chain(scores.iter().map(|s| s.score)).find(|v| !v.is_finite()) {
        return Err(EngineError::NonFiniteScore(bad));
    }
    let selected = top_k_select(scores, top);
    let effective = selected.len();
    let sum: f64 = selected.iter().map(|s| s_t - s.score).sum();
    Ok(SubstitutionMean { mean: sum / effective as f64, selected, effective })
}

/// Mean of `s_t - s` over the top-K different-act substitution scores.
pub fn mean_diff_substitution(s_t: f64, diff_scores: &[IndexedScore], k: usize) -> Result<SubstitutionMean, EngineError> {
    mean_substitution(s_t, diff_scores, k)
}

/// Mean of `s_t - s` over the top-L same-act substitution scores.
pub fn mean_same_substitution(s_t: f64, same_scores: &[IndexedScore], l: usize) -> Result<SubstitutionMean, EngineError> {
    mean_substitution(s_t, same_scores, l)
}

/// Logistic function `1 / (1 + exp(-slope * x))`, kept inside the open interval (0, 1).
pub fn sigmoid(x: f64, slope: f64) -> f64 {
    let z = slope * x;
    let y = if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    };
    // saturated values would otherwise round to exactly 0 or 1
    y.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

/// The weighted sum fed to the sigmoid. Absent terms contribute 0.
pub fn weighted_sum(
    d_phi: f64,
    md_diff: Option<f64>,
    md_same: Option<f64>,
    cfg: &ScoringConfig,
    turn_nugget_count: usize,
) -> f64 {
    let (w_phi, w_diff, w_same) = cfg.effective_weights(turn_nugget_count);
    w_phi * d_phi + w_diff * md_diff.unwrap_or(0.0) + w_same * md_same.unwrap_or(0.0)
}

pub fn nugget_score(
    d_phi: f64,
    md_diff: Option<f64>,
    md_same: Option<f64>,
    cfg: &ScoringConfig,
    turn_nugget_count: usize,
) -> f64 {
    sigmoid(weighted_sum(d_phi, md_diff, md_same, cfg, turn_nugget_count), cfg.sigmoid_slope)
}

/// Assembles a breakdown from raw scores. Pure: the engine, the what-if
/// endpoint and report recomputation all go through here.
pub fn breakdown_from_scores(
    nugget_id: &str,
    s_original: f64,
    s_deleted: f64,
    diff_scores: Vec<IndexedScore>,
    same_scores: Vec<IndexedScore>,
    cfg: &ScoringConfig,
    turn_nugget_count: usize,
) -> Result<ScoreBreakdown, EngineError> {
    let d_phi = delta_deletion(s_original, s_deleted)?;
    let diff = if diff_scores.is_empty() { None } else { Some(mean_diff_substitution(s_original, &diff_scores, cfg.k)?) };
    let same = if same_scores.is_empty() { None } else { Some(mean_same_substitution(s_original, &same_scores, cfg.l)?) };
    let md_diff = diff.as_ref().map(|m| m.mean);
    let md_same = same.as_ref().map(|m| m.mean);
    let ns = nugget_score(d_phi, md_diff, md_same, cfg, turn_nugget_count);
    let (selected_diff, effective_k) = diff.map(|m| (m.selected, m.effective)).unwrap_or_default();
    let (selected_same, effective_l) = same.map(|m| (m.selected, m.effective)).unwrap_or_default();
    Ok(ScoreBreakdown {
        nugget_id: nugget_id.to_string(),
        s_original,
        s_deleted,
        diff_scores,
        same_scores,
        selected_diff,
        selected_same,
        d_phi,
        md_diff,
        md_same,
        effective_k,
        effective_l,
        ns,
    })
}

static NEXT_REQUEST: AtomicU64 = AtomicU64::new(0);

fn next_request_id(turn_id: &str) -> String {
    format!("{turn_id}#{}", NEXT_REQUEST.fetch_add(1, AtomicOrdering::Relaxed))
}

/// Scores each distinct text once. Returns text -> score.
fn score_unique_texts<'a>(
    turn: &AnnotatedTurn,
    original: &'a str,
    entries: &[&'a PerturbedTurn],
    scorer: &dyn Scorer,
) -> Result<IndexMap<&'a str, f64>, EngineError> {
    // text -> label of the first plan entry that needs it
    let mut texts: IndexMap<&str, String> = IndexMap::new();
    texts.insert(original, "original".to_string());
    for e in entries {
        texts.entry(e.text.as_str()).or_insert_with(|| e.label());
    }
    let requests: Vec<ScorerRequest> = texts
        .keys()
        .map(|t| ScorerRequest::new(next_request_id(&turn.turn_id), *t).with_context(turn.context.clone()))
        .collect();
    let results = scorer.score_batch(&requests);
    if results.len() != requests.len() {
        return Err(EngineError::ScorerFailure {
            perturbation: "batch".into(),
            text: String::new(),
            source: ScorerError::Protocol(format!("expected {} results, got {}", requests.len(), results.len())),
        });
    }
    let mut scores = IndexMap::with_capacity(texts.len());
    for ((text, label), result) in texts.into_iter().zip(results) {
        let score = result
            .and_then(crate::scorer::check_finite)
            .map_err(|source| EngineError::ScorerFailure { perturbation: label, text: text.to_string(), source })?;
        scores.insert(text, score);
    }
    Ok(scores)
}

fn check_inputs(turn: &AnnotatedTurn, candidates: &[CandidateSet], cfg: &ScoringConfig) -> Result<(), EngineError> {
    let cfg_report = validate_config(cfg);
    if !cfg_report.ok {
        return Err(EngineError::InvalidConfig(cfg_report));
    }
    let report = validate_annotation(turn, candidates);
    if !report.ok {
        return Err(EngineError::InvalidAnnotation(report));
    }
    Ok(())
}

fn check_empty_turns<'a>(entries: impl IntoIterator<Item = &'a PerturbedTurn>, cfg: &ScoringConfig) -> Result<(), EngineError> {
    if cfg.empty_turn == EmptyTurnPolicy::Reject {
        if let Some(e) = entries.into_iter().find(|e| e.kind == PerturbationKind::Deletion && e.text.is_empty()) {
            return Err(EngineError::EmptyTurnPerturbation { nugget_id: e.nugget_id.clone() });
        }
    }
    Ok(())
}

fn fold_nugget(
    nugget_id: &str,
    entries: &[&PerturbedTurn],
    scores: &IndexMap<&str, f64>,
    s_original: f64,
    cfg: &ScoringConfig,
    nugget_count: usize,
) -> Result<ScoreBreakdown, EngineError> {
    let mut s_deleted = None;
    let mut diff = Vec::new();
    let mut same = Vec::new();
    for e in entries.iter().filter(|e| e.nugget_id == nugget_id) {
        let score = scores[e.text.as_str()];
        match (e.kind, e.candidate_index) {
            (PerturbationKind::Deletion, _) => s_deleted = Some(score),
            (PerturbationKind::DiffSubstitution, Some(i)) => diff.push(IndexedScore::new(i, score)),
            (PerturbationKind::SameSubstitution, Some(i)) => same.push(IndexedScore::new(i, score)),
            _ => unreachable!("substitutions always carry a candidate index"),
        }
    }
    let s_deleted = s_deleted.expect("every nugget has a deletion entry");
    breakdown_from_scores(nugget_id, s_original, s_deleted, diff, same, cfg, nugget_count)
}

/// Scores the original turn and every perturbation, then computes one
/// breakdown per nugget.
pub fn evaluate_turn(
    turn: &AnnotatedTurn,
    candidates: &[CandidateSet],
    cfg: &ScoringConfig,
    scorer: &dyn Scorer,
) -> Result<TurnEvaluation, EngineError> {
    check_inputs(turn, candidates, cfg)?;
    let plan = enumerate_perturbations(turn, candidates)?;
    check_empty_turns(&plan.entries, cfg)?;

    let entries: Vec<&PerturbedTurn> = plan.entries.iter().collect();
    let scores = score_unique_texts(turn, &plan.original_text, &entries, scorer)?;
    let s_original = scores[plan.original_text.as_str()];

    let nugget_count = turn.nuggets.len();
    let breakdowns = turn
        .ordered_nuggets()
        .into_iter()
        .map(|n| fold_nugget(&n.id, &entries, &scores, s_original, cfg, nugget_count))
        .collect::<Result<Vec<_>, _>>()?;

    Ok(TurnEvaluation {
        turn_id: turn.turn_id.clone(),
        s_original,
        breakdowns,
        config: *cfg,
        scorer: scorer.identity().to_string(),
    })
}

/// Like [`evaluate_turn`] but only scores the perturbations of one nugget.
pub fn evaluate_nugget(
    turn: &AnnotatedTurn,
    candidates: &[CandidateSet],
    nugget_id: &str,
    cfg: &ScoringConfig,
    scorer: &dyn Scorer,
) -> Result<ScoreBreakdown, EngineError> {
    check_inputs(turn, candidates, cfg)?;
    if turn.nugget(nugget_id).is_none() {
        return Err(EngineError::UnknownNugget(nugget_id.to_string()));
    }
    let plan = enumerate_perturbations(turn, candidates)?;
    let entries: Vec<&PerturbedTurn> = plan.for_nugget(nugget_id).collect();
    check_empty_turns(entries.iter().copied(), cfg)?;
    let scores = score_unique_texts(turn, &plan.original_text, &entries, scorer)?;
    let s_original = scores[plan.original_text.as_str()];
    fold_nugget(nugget_id, &entries, &scores, s_original, cfg, turn.nuggets.len())
}

/// Which slot edit a what-if query applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WhatIfKind {
    Deletion,
    Diff,
    Same,
}

/// Effect of one provisional edit on a nugget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WhatIf {
    pub s_original: f64,
    pub s_perturbed: f64,
    /// `s_original - s_perturbed`
    pub delta: f64,
    /// NS with the draft added to the nugget's diff or same candidates.
    /// Deletion is already part of every NS, so it leaves NS unchanged.
    pub projected_ns: f64,
}

/// Scores `candidate` in the slot of `nugget_id` without touching the
/// annotation. The draft is not validated against the candidate rules, so an
/// annotator can try the original text or a repeated act.
pub fn what_if(
    turn: &AnnotatedTurn,
    candidates: &[CandidateSet],
    nugget_id: &str,
    kind: WhatIfKind,
    candidate: &str,
    cfg: &ScoringConfig,
    scorer: &dyn Scorer,
) -> Result<WhatIf, EngineError> {
    let current = evaluate_nugget(turn, candidates, nugget_id, cfg, scorer)?;
    if kind == WhatIfKind::Deletion {
        return Ok(WhatIf {
            s_original: current.s_original,
            s_perturbed: current.s_deleted,
            delta: current.d_phi,
            projected_ns: current.ns,
        });
    }
    if candidate.trim().is_empty() {
        return Err(EngineError::EmptyDraft(nugget_id.to_string()));
    }
    let position = turn.nugget(nugget_id).map(|n| n.position).expect("checked by evaluate_nugget");
    let text = render_turn(&turn.nuggets, Some((position, SlotEdit::Replace(candidate))));
    let label = format!("{nugget_id}/what_if_{}", if kind == WhatIfKind::Diff { "diff" } else { "same" });
    let request = ScorerRequest::new(next_request_id(&turn.turn_id), text.clone()).with_context(turn.context.clone());
    let s_perturbed = scorer
        .score(&request)
        .and_then(crate::scorer::check_finite)
        .map_err(|source| EngineError::ScorerFailure { perturbation: label, text, source })?;

    let ScoreBreakdown { s_original, s_deleted, mut diff_scores, mut same_scores, .. } = current;
    let target = if kind == WhatIfKind::Diff { &mut diff_scores } else { &mut same_scores };
    target.push(IndexedScore::new(target.len(), s_perturbed));
    let projected = breakdown_from_scores(nugget_id, s_original, s_deleted, diff_scores, same_scores, cfg, turn.nuggets.len())?;
    Ok(WhatIf { s_original, s_perturbed, delta: delta_deletion(s_original, s_perturbed)?, projected_ns: projected.ns })
}
