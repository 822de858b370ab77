//! Newline-delimited JSON messages shared by the exec and http transports.
//!
//! Request: `{"id": .., "turn": .., "context": [{"role": .., "text": ..}]}`.
//! Response: `{"id": .., "score": ..}` or `{"id": .., "error": {"code": .., "message": ..}}`.

use serde::{Deserialize, Serialize};

use super::{ScorerError, ScorerRequest};
use crate::model::Utterance;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireRequest {
    pub id: String,
    pub turn: String,
    pub context: Vec<Utterance>,
}

impl From<&ScorerRequest> for WireRequest {
    fn from(r: &ScorerRequest) -> Self {
        WireRequest { id: r.request_id.clone(), turn: r.turn_text.clone(), context: r.context.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WireError {
    pub code: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireResponse {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<WireError>,
}

impl WireResponse {
    pub fn score(id: impl Into<String>, score: f64) -> Self {
        Self { id: id.into(), score: Some(score), error: None }
    }

    pub fn error(id: impl Into<String>, code: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            score: None,
            error: Some(WireError { code: code.into(), message: message.into() }),
        }
    }

    /// Converts to the gateway result, enforcing that exactly one of
    /// `score`/`error` is present and that the score is finite.
    pub fn into_result(self) -> Result<f64, ScorerError> {
        match (self.score, self.error) {
            (Some(s), None) => super::check_finite(s),
            (None, Some(e)) => Err(ScorerError::Rejected { code: e.code, message: e.message }),
            (Some(_), Some(_)) => Err(ScorerError::Protocol(format!("response {:?} carries both score and error", self.id))),
            (None, None) => Err(ScorerError::Protocol(format!("response {:?} carries neither score nor error", self.id))),
        }
    }
}

pub fn encode_request(req: &ScorerRequest) -> String {
    serde_json::to_string(&WireRequest::from(req)).expect("request serialization is infallible")
}

pub fn decode_response(line: &str) -> Result<WireResponse, ScorerError> {
    serde_json::from_str(line).map_err(|e| ScorerError::Protocol(format!("malformed response {line:?}: {e}")))
}
