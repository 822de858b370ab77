//! Building the perturbed turn texts: one nugget deleted, or replaced by an
//! authored candidate of a different or the same dialogue act.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{AnnotatedTurn, CandidateSet, Nugget};

/// Single-slot change applied while rendering.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotEdit<'a> {
    Delete,
    Replace(&'a str),
}

/// Joins nugget texts in position order with a single ASCII space.
///
/// `edit` changes at most one slot, identified by nugget position. Texts are
/// used verbatim: no capitalization or punctuation repair.
pub fn render_turn(nuggets: &[Nugget], edit: Option<(usize, SlotEdit<'_>)>) -> String {
    let mut ordered: Vec<&Nugget> = nuggets.iter().collect();
    ordered.sort_by_key(|n| n.position);
    let mut parts: Vec<&str> = Vec::with_capacity(ordered.len());
    for n in ordered {
        match edit {
            Some((pos, SlotEdit::Delete)) if pos == n.position => {}
            Some((pos, SlotEdit::Replace(text))) if pos == n.position => parts.push(text),
            _ => parts.push(&n.text),
        }
    }
    parts.join(" ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbationKind {
    Deletion,
    DiffSubstitution,
    SameSubstitution,
}

impl PerturbationKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PerturbationKind::Deletion => "deletion",
            PerturbationKind::DiffSubstitution => "diff_substitution",
            PerturbationKind::SameSubstitution => "same_substitution",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PerturbedTurn {
    pub kind: PerturbationKind,
    pub nugget_id: String,
    /// Index into the diff or same candidate list; `None` for deletions.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub candidate_index: Option<usize>,
    pub text: String,
}

impl PerturbedTurn {
    /// Short human label, e.g. `n1/diff_substitution[3]`.
    pub fn label(&self) -> String {
        match self.candidate_index {
            Some(i) => format!("{}/{}[{i}]", self.nugget_id, self.kind.as_str()),
            None => format!("{}/{}", self.nugget_id, self.kind.as_str()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PerturbationPlan {
    pub original_text: String,
    /// Ordered by nugget position, then deletion/diff/same, then candidate index.
    pub entries: Vec<PerturbedTurn>,
}

impl PerturbationPlan {
    pub fn for_nugget<'a>(&'a self, nugget_id: &'a str) -> impl Iterator<Item = &'a PerturbedTurn> + 'a {
        self.entries.iter().filter(move |e| e.nugget_id == nugget_id)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PerturbationError {
    #[error("UNKNOWN_NUGGET: candidate set references unknown nugget {0:?}")]
    UnknownNugget(String),
}

/// Lists every single-slot perturbation of `turn`.
///
/// Each nugget gets one deletion entry; nuggets with a candidate set also get
/// one entry per diff and per same candidate.
pub fn enumerate_perturbations(
    turn: &AnnotatedTurn,
    candidates: &[CandidateSet],
) -> Result<PerturbationPlan, PerturbationError> {
    if let Some(orphan) = candidates.iter().find(|c| turn.nugget(&c.nugget_id).is_none()) {
        return Err(PerturbationError::UnknownNugget(orphan.nugget_id.clone()));
    }

    let mut entries = Vec::new();
    for nugget in turn.ordered_nuggets() {
        entries.push(PerturbedTurn {
            kind: PerturbationKind::Deletion,
            nugget_id: nugget.id.clone(),
            candidate_index: None,
            text: render_turn(&turn.nuggets, Some((nugget.position, SlotEdit::Delete))),
        });
        let sets: Vec<&CandidateSet> = candidates.iter().filter(|c| c.nugget_id == nugget.id).collect();
        let diffs = sets.iter().flat_map(|s| s.diff_candidates.iter().map(|c| c.text.as_str()));
        for (i, text) in diffs.enumerate() {
            entries.push(PerturbedTurn {
                kind: PerturbationKind::DiffSubstitution,
                nugget_id: nugget.id.clone(),
                candidate_index: Some(i),
                text: render_turn(&turn.nuggets, Some((nugget.position, SlotEdit::Replace(text)))),
            });
        }
        let sames = sets.iter().flat_map(|s| s.same_candidates.iter().map(String::as_str));
        for (i, text) in sames.enumerate() {
            entries.push(PerturbedTurn {
                kind: PerturbationKind::SameSubstitution,
                nugget_id: nugget.id.clone(),
                candidate_index: Some(i),
                text: render_turn(&turn.nuggets, Some((nugget.position, SlotEdit::Replace(text)))),
            });
        }
    }

    Ok(PerturbationPlan { original_text: render_turn(&turn.nuggets, None), entries })
}
