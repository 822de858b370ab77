//! In-memory score cache keyed by scorer identity and a digest of the request content.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use sha2::{Digest, Sha256};

use super::{Scorer, ScorerError, ScorerRequest};
use crate::model::Role;

type Key = [u8; 32];

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CacheStats {
    pub hits: u64,
    /// Requests forwarded to the wrapped scorer.
    pub downstream_calls: u64,
    pub entries: usize,
}

/// Wraps a scorer so that identical (identity, turn, context) requests are
/// scored downstream at most once. Errors are not cached.
pub struct CachedScorer<S> {
    inner: S,
    identity: String,
    entries: Mutex<HashMap<Key, f64>>,
    hits: AtomicU64,
    downstream: AtomicU64,
}

pub fn cached<S: Scorer>(inner: S) -> CachedScorer<S> {
    CachedScorer::new(inner)
}

impl<S: Scorer> CachedScorer<S> {
    pub fn new(inner: S) -> Self {
        let identity = inner.identity().to_string();
        Self {
            inner,
            identity,
            entries: Mutex::new(HashMap::new()),
            hits: AtomicU64::new(0),
            downstream: AtomicU64::new(0),
        }
    }

    pub fn inner(&self) -> &S {
        &self.inner
    }

    pub fn stats(&self) -> CacheStats {
        CacheStats {
            hits: self.hits.load(Ordering::Relaxed),
            downstream_calls: self.downstream.load(Ordering::Relaxed),
            entries: self.entries.lock().unwrap().len(),
        }
    }

    pub fn clear(&self) {
        self.entries.lock().unwrap().clear();
    }

    fn key(&self, request: &ScorerRequest) -> Key {
        let mut h = Sha256::new();
        let mut field = |bytes: &[u8]| {
            h.update((bytes.len() as u64).to_le_bytes());
            h.update(bytes);
        };
        field(self.identity.as_bytes());
        field(request.turn_text.as_bytes());
        for u in &request.context {
            field(match u.role {
                Role::User => b"user",
                Role::System => b"system",
            });
            field(u.text.as_bytes());
        }
        h.finalize().into()
    }

    fn lookup(&self, key: &Key) -> Option<f64> {
        self.entries.lock().unwrap().get(key).copied()
    }
}

impl<S: Scorer> Scorer for CachedScorer<S> {
    fn identity(&self) -> &str {
        &self.identity
    }

    fn score(&self, request: &ScorerRequest) -> Result<f64, ScorerError> {
        let key = self.key(request);
        if let Some(v) = self.lookup(&key) {
            self.hits.fetch_add(1, Ordering::Relaxed);
            return Ok(v);
        }
        self.downstream.fetch_add(1, Ordering::Relaxed);
        let v = self.inner.score(request)?;
        self.entries.lock().unwrap().insert(key, v);
        Ok(v)
    }

    fn score_batch(&self, requests: &[ScorerRequest]) -> Vec<Result<f64, ScorerError>> {
        let keys: Vec<Key> = requests.iter().map(|r| self.key(r)).collect();
        let mut results: Vec<Option<Result<f64, ScorerError>>> = vec![None; requests.len()];
        // first index of each distinct missing key, and every index waiting on it
        let mut pending: HashMap<Key, usize> = HashMap::new();
        let mut forward: Vec<usize> = Vec::new();
        let mut waiters: Vec<Vec<usize>> = Vec::new();

        for (i, key) in keys.iter().enumerate() {
            if let Some(v) = self.lookup(key) {
                self.hits.fetch_add(1, Ordering::Relaxed);
                results[i] = Some(Ok(v));
            } else if let Some(&slot) = pending.get(key) {
                self.hits.fetch_add(1, Ordering::Relaxed);
                waiters[slot].push(i);
            } else {
                pending.insert(*key, forward.len());
                forward.push(i);
                waiters.push(vec![i]);
            }
        }

        if !forward.is_empty() {
            let batch: Vec<ScorerRequest> = forward.iter().map(|&i| requests[i].clone()).collect();
            self.downstream.fetch_add(batch.len() as u64, Ordering::Relaxed);
            let scored = self.inner.score_batch(&batch);
            let mut entries = self.entries.lock().unwrap();
            for (slot, (&first, result)) in forward.iter().zip(scored).enumerate() {
                if let Ok(v) = result {
                    entries.insert(keys[first], v);
                }
                for &i in &waiters[slot] {
                    results[i] = Some(result.clone());
                }
            }
        }

        results
            .into_iter()
            .map(|r| r.unwrap_or_else(|| Err(ScorerError::Protocol("scorer returned too few results".into()))))
            .collect()
    }
}
