//! Nugget-level dialogue quality scores derived from a turn-level scorer.
//!
//! A system turn is split into nuggets, each labeled with a dialogue act. Every
//! nugget is deleted, replaced by authored candidates of other acts, and
//! replaced by rephrasings of its own act; the turn-level score changes are
//! combined into one score in (0, 1) per nugget.

pub mod engine;
pub mod io;
pub mod model;
pub mod perturbation;
pub mod scorer;

pub use engine::{evaluate_nugget, evaluate_turn, what_if, EngineError, IndexedScore, ScoreBreakdown, TurnEvaluation, WhatIf, WhatIfKind};
pub use model::{act_catalog, AnnotatedTurn, CandidateSet, DialogueAct, Nugget, ScoringConfig, ValidationReport};
pub use scorer::{Scorer, ScorerDescriptor, ScorerError, ScorerRequest};
