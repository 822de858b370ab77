//! HTTP scorer client: one `POST /score` per request, JSON bodies identical to
//! the exec transport.

use std::time::Duration;

use super::protocol::{WireRequest, WireResponse};
use super::{Scorer, ScorerError, ScorerRequest};

/// Upper bound on simultaneous in-flight requests from one batch.
const MAX_IN_FLIGHT: usize = 8;

pub struct HttpScorer {
    endpoint: String,
    identity: String,
    agent: ureq::Agent,
}

impl HttpScorer {
    pub fn new(url: &str, timeout: Duration) -> Self {
        let trimmed = url.trim_end_matches('/');
        let endpoint = if trimmed.ends_with("/score") { trimmed.to_string() } else { format!("{trimmed}/score") };
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self { identity: format!("http:{url}"), endpoint, agent }
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }
}

impl Scorer for HttpScorer {
    fn identity(&self) -> &str {
        &self.identity
    }

    fn score(&self, request: &ScorerRequest) -> Result<f64, ScorerError> {
        let body = serde_json::to_string(&WireRequest::from(request)).expect("request serialization is infallible");
        let mut resp = self
            .agent
            .post(&self.endpoint)
            .header("content-type", "application/json")
            .send(body)
            // connection failures and deadlines both mean no answer arrived in time
            .map_err(|e| ScorerError::Timeout(format!("{}: {e}", self.endpoint)))?;
        let status = resp.status();
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| ScorerError::Protocol(format!("cannot read response body: {e}")))?;
        let parsed: WireResponse = match serde_json::from_str(&text) {
            Ok(p) => p,
            Err(_) if !status.is_success() => {
                return Err(ScorerError::Rejected { code: format!("HTTP_{}", status.as_u16()), message: text })
            }
            Err(e) => return Err(ScorerError::Protocol(format!("malformed response {text:?}: {e}"))),
        };
        if parsed.id != request.request_id {
            return Err(ScorerError::Protocol(format!(
                "response id {:?} does not match request id {:?}",
                parsed.id, request.request_id
            )));
        }
        parsed.into_result()
    }

    fn score_batch(&self, requests: &[ScorerRequest]) -> Vec<Result<f64, ScorerError>> {
        if requests.len() <= 1 {
            return requests.iter().map(|r| self.score(r)).collect();
        }
        let chunk = requests.len().div_ceil(MAX_IN_FLIGHT);
        std::thread::scope(|s| {
            let handles: Vec<_> = requests
                .chunks(chunk)
                .map(|part| s.spawn(move || part.iter().map(|r| self.score(r)).collect::<Vec<_>>()))
                .collect();
            handles.into_iter().flat_map(|h| h.join().expect("scoring thread panicked")).collect()
        })
    }
}
