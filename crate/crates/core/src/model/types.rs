use serde::{Deserialize, Serialize};

/// Speaker of a context utterance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    User,
    System,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Utterance {
    pub role: Role,
    pub text: String,
}

impl Utterance {
    pub fn new(role: Role, text: impl Into<String>) -> Self {
        Self { role, text: text.into() }
    }
}

/// A span of a system turn carrying a single dialogue act.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Nugget {
    /// Caller-supplied, unique within the turn. Texts may repeat, ids may not.
    pub id: String,
    /// Verbatim surface text, punctuation included.
    pub text: String,
    /// Dialogue-act id from the catalog.
    pub act: String,
    /// 0-based ordinal within the turn.
    pub position: usize,
}

/// A system turn segmented into nuggets, together with the dialogue that led to it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedTurn {
    pub turn_id: String,
    pub context: Vec<Utterance>,
    /// Original turn text, when the annotator recorded it.
    pub canonical_text: Option<String>,
    pub nuggets: Vec<Nugget>,
}

impl AnnotatedTurn {
    /// Builds a turn from `(id, text, act)` triples, assigning positions in order.
    pub fn from_parts<I, S1, S2, S3>(turn_id: impl Into<String>, context: Vec<Utterance>, nuggets: I) -> Self
    where
        I: IntoIterator<Item = (S1, S2, S3)>,
        S1: Into<String>,
        S2: Into<String>,
        S3: Into<String>,
    {
        let nuggets = nuggets
            .into_iter()
            .enumerate()
            .map(|(position, (id, text, act))| Nugget {
                id: id.into(),
                text: text.into(),
                act: act.into(),
                position,
            })
            .collect();
        Self { turn_id: turn_id.into(), context, canonical_text: None, nuggets }
    }

    pub fn nugget(&self, id: &str) -> Option<&Nugget> {
        self.nuggets.iter().find(|n| n.id == id)
    }

    /// Nuggets sorted by position.
    pub fn ordered_nuggets(&self) -> Vec<&Nugget> {
        let mut v: Vec<&Nugget> = self.nuggets.iter().collect();
        v.sort_by_key(|n| n.position);
        v
    }
}

/// A replacement nugget labeled with a dialogue act other than the original's.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiffCandidate {
    pub act: String,
    pub text: String,
}

impl DiffCandidate {
    pub fn new(act: impl Into<String>, text: impl Into<String>) -> Self {
        Self { act: act.into(), text: text.into() }
    }
}

/// Authored replacements for one nugget.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateSet {
    pub nugget_id: String,
    /// At most one candidate per act, never the original nugget's act.
    pub diff_candidates: Vec<DiffCandidate>,
    /// Rephrasings that keep the original act.
    pub same_candidates: Vec<String>,
}

impl CandidateSet {
    pub fn new(nugget_id: impl Into<String>) -> Self {
        Self { nugget_id: nugget_id.into(), diff_candidates: Vec::new(), same_candidates: Vec::new() }
    }

    pub fn with_diff(mut self, act: impl Into<String>, text: impl Into<String>) -> Self {
        self.diff_candidates.push(DiffCandidate::new(act, text));
        self
    }

    pub fn with_same(mut self, text: impl Into<String>) -> Self {
        self.same_candidates.push(text.into());
        self
    }
}

/// How the three weights react to the number of nuggets in the turn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LengthScaling {
    #[default]
    Off,
    /// Every weight is multiplied by `nugget_count / reference_length`.
    Linear { reference_length: usize },
}

/// What to do when deleting a turn's only nugget leaves an empty string.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmptyTurnPolicy {
    /// Send the empty string to the scorer like any other text.
    #[default]
    Score,
    /// Fail the evaluation with `EMPTY_TURN_PERTURBATION`.
    Reject,
}

/// Parameters of the nugget score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoringConfig {
    /// Number of top different-act substitution scores averaged.
    pub k: usize,
    /// Number of top same-act substitution scores averaged.
    pub l: usize,
    pub w_phi: f64,
    pub w_diff: f64,
    pub w_same: f64,
    pub sigmoid_slope: f64,
    #[serde(default)]
    pub length_scaling: LengthScaling,
    #[serde(default)]
    pub empty_turn: EmptyTurnPolicy,
}

impl Default for ScoringConfig {
    /// K=5, L=3, weights {10, 5, 2}, unit slope, no length scaling.
    fn default() -> Self {
        Self {
            k: 5,
            l: 3,
            w_phi: 10.0,
            w_diff: 5.0,
            w_same: 2.0,
            sigmoid_slope: 1.0,
            length_scaling: LengthScaling::Off,
            empty_turn: EmptyTurnPolicy::Score,
        }
    }
}

impl ScoringConfig {
    pub fn with_weights(mut self, w_phi: f64, w_diff: f64, w_same: f64) -> Self {
        self.w_phi = w_phi;
        self.w_diff = w_diff;
        self.w_same = w_same;
        self
    }

    pub fn with_k_l(mut self, k: usize, l: usize) -> Self {
        self.k = k;
        self.l = l;
        self
    }

    /// Weights after length scaling, as `(w_phi, w_diff, w_same)`.
    pub fn effective_weights(&self, nugget_count: usize) -> (f64, f64, f64) {
        match self.length_scaling {
            LengthScaling::Off => (self.w_phi, self.w_diff, self.w_same),
            LengthScaling::Linear { reference_length } => {
                let factor = nugget_count as f64 / reference_length as f64;
                (self.w_phi * factor, self.w_diff * factor, self.w_same * factor)
            }
        }
    }
}
