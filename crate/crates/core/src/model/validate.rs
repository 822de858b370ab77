//! Structural checks for annotations and scoring configurations.
//!
//! Problems are collected into a [`ValidationReport`] rather than returned as
//! errors so that an annotator sees every issue in one pass.

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::acts::is_known_act;
use super::types::{AnnotatedTurn, CandidateSet, LengthScaling, ScoringConfig};
use crate::perturbation::render_turn;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum IssueCode {
    EmptyTurn,
    UnknownAct,
    EmptyNuggetText,
    DuplicateNuggetId,
    PositionGap,
    UnknownNugget,
    DuplicateCandidateSet,
    DuplicateDiffAct,
    DuplicateActAsOriginal,
    EmptyCandidateText,
    SameEqualsOriginal,
    NoDiffCandidates,
    NoSameCandidates,
    FewerThanK,
    FewerThanL,
    CanonicalTextMismatch,
    WeightOrder,
    NegativeWeight,
    NonFiniteWeight,
    KRange,
    LRange,
    SlopeRange,
    ReferenceLength,
}

impl IssueCode {
    pub fn as_str(self) -> &'static str {
        match self {
            IssueCode::EmptyTurn => "EMPTY_TURN",
            IssueCode::UnknownAct => "UNKNOWN_ACT",
            IssueCode::EmptyNuggetText => "EMPTY_NUGGET_TEXT",
            IssueCode::DuplicateNuggetId => "DUPLICATE_NUGGET_ID",
            IssueCode::PositionGap => "POSITION_GAP",
            IssueCode::UnknownNugget => "UNKNOWN_NUGGET",
            IssueCode::DuplicateCandidateSet => "DUPLICATE_CANDIDATE_SET",
            IssueCode::DuplicateDiffAct => "DUPLICATE_DIFF_ACT",
            IssueCode::DuplicateActAsOriginal => "DUPLICATE_ACT_AS_ORIGINAL",
            IssueCode::EmptyCandidateText => "EMPTY_CANDIDATE_TEXT",
            IssueCode::SameEqualsOriginal => "SAME_EQUALS_ORIGINAL",
            IssueCode::NoDiffCandidates => "NO_DIFF_CANDIDATES",
            IssueCode::NoSameCandidates => "NO_SAME_CANDIDATES",
            IssueCode::FewerThanK => "FEWER_THAN_K",
            IssueCode::FewerThanL => "FEWER_THAN_L",
            IssueCode::CanonicalTextMismatch => "CANONICAL_TEXT_MISMATCH",
            IssueCode::WeightOrder => "WEIGHT_ORDER",
            IssueCode::NegativeWeight => "NEGATIVE_WEIGHT",
            IssueCode::NonFiniteWeight => "NON_FINITE_WEIGHT",
            IssueCode::KRange => "K_RANGE",
            IssueCode::LRange => "L_RANGE",
            IssueCode::SlopeRange => "SLOPE_RANGE",
            IssueCode::ReferenceLength => "REFERENCE_LENGTH",
        }
    }
}

impl fmt::Display for IssueCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Issue {
    pub severity: Severity,
    pub code: IssueCode,
    pub message: String,
    /// Where the problem is, e.g. `nuggets[2]` or `candidates.n1.diff[0]`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub location: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub ok: bool,
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    fn from_issues(issues: Vec<Issue>) -> Self {
        let ok = !issues.iter().any(|i| i.severity == Severity::Error);
        Self { ok, issues }
    }

    pub fn errors(&self) -> impl Iterator<Item = &Issue> {
        self.issues.iter().filter(|i| i.severity == Severity::Error)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &Issue> {
        self.issues.iter().filter(|i| i.severity == Severity::Warning)
    }

    pub fn has_code(&self, code: IssueCode) -> bool {
        self.issues.iter().any(|i| i.code == code)
    }

    pub fn merge(mut self, other: ValidationReport) -> Self {
        self.issues.extend(other.issues);
        Self::from_issues(self.issues)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.issues.is_empty() {
            return writeln!(f, "ok: no issues");
        }
        for issue in &self.issues {
            let sev = match issue.severity {
                Severity::Error => "error",
                Severity::Warning => "warning",
            };
            match &issue.location {
                Some(loc) => writeln!(f, "{sev}[{}] {loc}: {}", issue.code, issue.message)?,
                None => writeln!(f, "{sev}[{}] {}", issue.code, issue.message)?,
            }
        }
        Ok(())
    }
}

#[derive(Default)]
struct Issues(Vec<Issue>);

impl Issues {
    fn error(&mut self, code: IssueCode, location: impl Into<Option<String>>, message: String) {
        self.0.push(Issue { severity: Severity::Error, code, message, location: location.into() });
    }

    fn warn(&mut self, code: IssueCode, location: impl Into<Option<String>>, message: String) {
        self.0.push(Issue { severity: Severity::Warning, code, message, location: location.into() });
    }
}

/// Checks an annotated turn and its candidate sets.
pub fn validate_annotation(turn: &AnnotatedTurn, candidates: &[CandidateSet]) -> ValidationReport {
    let mut out = Issues::default();

    if turn.nuggets.is_empty() {
        out.error(IssueCode::EmptyTurn, None, format!("turn {:?} has no nuggets", turn.turn_id));
    }

    let mut seen_ids = HashSet::new();
    for (i, n) in turn.nuggets.iter().enumerate() {
        let loc = format!("nuggets[{i}]");
        if !seen_ids.insert(n.id.as_str()) {
            out.error(IssueCode::DuplicateNuggetId, loc.clone(), format!("nugget id {:?} is used more than once", n.id));
        }
        if n.text.trim().is_empty() {
            out.error(IssueCode::EmptyNuggetText, loc.clone(), format!("nugget {:?} has empty text", n.id));
        }
        if !is_known_act(&n.act) {
            out.error(IssueCode::UnknownAct, loc, format!("nugget {:?} uses unknown act {:?}", n.id, n.act));
        }
    }

    let mut positions: Vec<usize> = turn.nuggets.iter().map(|n| n.position).collect();
    positions.sort_unstable();
    if positions.iter().enumerate().any(|(i, &p)| i != p) {
        out.error(
            IssueCode::PositionGap,
            None,
            format!("nugget positions must be 0..{} without gaps or duplicates, got {positions:?}", turn.nuggets.len()),
        );
    }

    let mut covered: HashMap<&str, usize> = HashMap::new();
    for (si, set) in candidates.iter().enumerate() {
        let base = format!("candidates.{}", set.nugget_id);
        *covered.entry(set.nugget_id.as_str()).or_default() += 1;
        if covered[set.nugget_id.as_str()] == 2 {
            out.error(
                IssueCode::DuplicateCandidateSet,
                base.clone(),
                format!("more than one candidate set for nugget {:?}", set.nugget_id),
            );
        }
        let Some(original) = turn.nugget(&set.nugget_id) else {
            out.error(
                IssueCode::UnknownNugget,
                format!("candidates[{si}]"),
                format!("candidate set references unknown nugget {:?}", set.nugget_id),
            );
            continue;
        };

        let mut diff_acts = HashSet::new();
        for (ci, cand) in set.diff_candidates.iter().enumerate() {
            let loc = format!("{base}.diff[{ci}]");
            if cand.text.trim().is_empty() {
                out.error(IssueCode::EmptyCandidateText, loc.clone(), "diff candidate has empty text".into());
            }
            if !is_known_act(&cand.act) {
                out.error(IssueCode::UnknownAct, loc.clone(), format!("diff candidate uses unknown act {:?}", cand.act));
            }
            if cand.act == original.act {
                out.error(
                    IssueCode::DuplicateActAsOriginal,
                    loc.clone(),
                    format!("diff candidate shares the original act {:?}", cand.act),
                );
            }
            if !diff_acts.insert(cand.act.as_str()) {
                out.error(
                    IssueCode::DuplicateDiffAct,
                    loc,
                    format!("more than one diff candidate with act {:?}", cand.act),
                );
            }
        }

        for (ci, text) in set.same_candidates.iter().enumerate() {
            let loc = format!("{base}.same[{ci}]");
            if text.trim().is_empty() {
                out.error(IssueCode::EmptyCandidateText, loc, "same candidate has empty text".into());
            } else if *text == original.text {
                out.error(IssueCode::SameEqualsOriginal, loc, "same candidate repeats the original nugget text".into());
            }
        }
    }

    for n in &turn.nuggets {
        let sets: Vec<&CandidateSet> = candidates.iter().filter(|c| c.nugget_id == n.id).collect();
        let diff: usize = sets.iter().map(|s| s.diff_candidates.len()).sum();
        let same: usize = sets.iter().map(|s| s.same_candidates.len()).sum();
        let loc = format!("candidates.{}", n.id);
        if diff == 0 {
            out.warn(IssueCode::NoDiffCandidates, loc.clone(), format!("nugget {:?} has no diff candidates", n.id));
        }
        if same == 0 {
            out.warn(IssueCode::NoSameCandidates, loc, format!("nugget {:?} has no same candidates", n.id));
        }
    }

    if let Some(canonical) = &turn.canonical_text {
        if !turn.nuggets.is_empty() {
            let rendered = render_turn(&turn.nuggets, None);
            if &rendered != canonical {
                out.warn(
                    IssueCode::CanonicalTextMismatch,
                    "canonical_text".to_string(),
                    format!("nuggets render to {rendered:?}, canonical text is {canonical:?}"),
                );
            }
        }
    }

    ValidationReport::from_issues(out.0)
}

/// [`validate_annotation`] plus warnings for nuggets with fewer than K diff or L
/// same candidates under `cfg`.
pub fn validate_annotation_for(turn: &AnnotatedTurn, candidates: &[CandidateSet], cfg: &ScoringConfig) -> ValidationReport {
    let report = validate_annotation(turn, candidates);
    let mut out = Issues::default();
    for n in &turn.nuggets {
        let sets = candidates.iter().filter(|c| c.nugget_id == n.id);
        let (diff, same) = sets.fold((0, 0), |(d, s), c| (d + c.diff_candidates.len(), s + c.same_candidates.len()));
        let loc = format!("candidates.{}", n.id);
        if diff > 0 && diff < cfg.k {
            out.warn(IssueCode::FewerThanK, loc.clone(), format!("nugget {:?} has {diff} diff candidates, K={}", n.id, cfg.k));
        }
        if same > 0 && same < cfg.l {
            out.warn(IssueCode::FewerThanL, loc, format!("nugget {:?} has {same} same candidates, L={}", n.id, cfg.l));
        }
    }
    report.merge(ValidationReport::from_issues(out.0))
}

/// Checks the weight ordering and parameter ranges.
pub fn validate_config(cfg: &ScoringConfig) -> ValidationReport {
    let mut out = Issues::default();
    let weights = [("w_phi", cfg.w_phi), ("w_diff", cfg.w_diff), ("w_same", cfg.w_same)];
    for (name, w) in weights {
        if !w.is_finite() {
            out.error(IssueCode::NonFiniteWeight, name.to_string(), format!("{name} must be finite, got {w}"));
        } else if w < 0.0 {
            out.error(IssueCode::NegativeWeight, name.to_string(), format!("{name} must be nonnegative, got {w}"));
        }
    }
    if !(cfg.w_phi >= cfg.w_diff && cfg.w_diff >= cfg.w_same) {
        out.error(
            IssueCode::WeightOrder,
            None,
            format!(
                "weights must satisfy w_phi >= w_diff >= w_same, got {{{}, {}, {}}}",
                cfg.w_phi, cfg.w_diff, cfg.w_same
            ),
        );
    }
    if cfg.k < 1 {
        out.error(IssueCode::KRange, "k".to_string(), format!("k must be at least 1, got {}", cfg.k));
    }
    if cfg.l < 1 {
        out.error(IssueCode::LRange, "l".to_string(), format!("l must be at least 1, got {}", cfg.l));
    }
    if !(cfg.sigmoid_slope > 0.0 && cfg.sigmoid_slope.is_finite()) {
        out.error(
            IssueCode::SlopeRange,
            "sigmoid_slope".to_string(),
            format!("sigmoid_slope must be positive and finite, got {}", cfg.sigmoid_slope),
        );
    }
    if let LengthScaling::Linear { reference_length: 0 } = cfg.length_scaling {
        out.error(
            IssueCode::ReferenceLength,
            "length_scaling".to_string(),
            "linear length scaling needs a positive reference_length".into(),
        );
    }
    ValidationReport::from_issues(out.0)
}
