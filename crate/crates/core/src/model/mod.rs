//! Domain types, the dialogue-act catalog and structural validation.

pub mod acts;
pub mod types;
pub mod validate;

pub use acts::{act_by_id, act_catalog, is_known_act, DialogueAct};
pub use types::{
    AnnotatedTurn, CandidateSet, DiffCandidate, EmptyTurnPolicy, LengthScaling, Nugget, Role, ScoringConfig, Utterance,
};
pub use validate::{
    validate_annotation, validate_annotation_for, validate_config, Issue, IssueCode, Severity, ValidationReport,
};
