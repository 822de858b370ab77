//! Child-process scorer speaking newline-delimited JSON over stdin/stdout.
//!
//! Writes are serialized through one lock; a reader thread routes each
//! response line to the waiting request by id, so the child may answer in
//! any order.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use super::protocol::{decode_response, encode_request};
use super::{Scorer, ScorerError, ScorerRequest};

type Reply = Result<f64, ScorerError>;

#[derive(Default)]
struct Router {
    pending: HashMap<String, Sender<Reply>>,
    /// Set once the child's stdout closes; later requests fail immediately.
    closed: Option<String>,
}

impl Router {
    fn fail_all(&mut self, reason: &str) {
        for (_, tx) in self.pending.drain() {
            let _ = tx.send(Err(ScorerError::Protocol(reason.to_string())));
        }
    }
}

pub struct ExecScorer {
    identity: String,
    timeout: Duration,
    child: Mutex<Child>,
    stdin: Mutex<ChildStdin>,
    router: Arc<Mutex<Router>>,
}

impl ExecScorer {
    /// Starts `argv[0]` with the remaining elements as arguments.
    pub fn spawn(argv: &[String], timeout: Duration) -> Result<Self, ScorerError> {
        let (program, args) =
            argv.split_first().ok_or_else(|| ScorerError::Config("exec scorer needs a program path".into()))?;
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| ScorerError::Config(format!("cannot start scorer {program:?}: {e}")))?;
        let stdin = child.stdin.take().expect("stdin is piped");
        let stdout = child.stdout.take().expect("stdout is piped");

        let router = Arc::new(Mutex::new(Router::default()));
        let reader_router = Arc::clone(&router);
        thread::Builder::new()
            .name("exec-scorer-reader".into())
            .spawn(move || {
                let reader = BufReader::new(stdout);
                for line in reader.lines() {
                    let Ok(line) = line else { break };
                    if line.trim().is_empty() {
                        continue;
                    }
                    let mut router = reader_router.lock().unwrap();
                    match decode_response(&line) {
                        Ok(resp) => {
                            if let Some(tx) = router.pending.remove(&resp.id) {
                                let _ = tx.send(resp.into_result());
                            }
                            // unknown ids are dropped: the request may already have timed out
                        }
                        Err(e) => {
                            // cannot attribute the line to a request
                            router.fail_all(&e.to_string());
                        }
                    }
                }
                let mut router = reader_router.lock().unwrap();
                router.closed = Some("scorer process closed its output".into());
                router.fail_all("scorer process closed its output");
            })
            .map_err(|e| ScorerError::Config(format!("cannot start reader thread: {e}")))?;

        Ok(Self {
            identity: format!("exec:{}", argv.join(" ")),
            timeout,
            child: Mutex::new(child),
            stdin: Mutex::new(stdin),
            router,
        })
    }

    fn register(&self, request_id: &str) -> Result<Receiver<Reply>, ScorerError> {
        let mut router = self.router.lock().unwrap();
        if let Some(reason) = &router.closed {
            return Err(ScorerError::Protocol(reason.clone()));
        }
        if router.pending.contains_key(request_id) {
            return Err(ScorerError::Protocol(format!("request id {request_id:?} is already pending")));
        }
        let (tx, rx) = mpsc::channel();
        router.pending.insert(request_id.to_string(), tx);
        Ok(rx)
    }

    fn send(&self, request: &ScorerRequest) -> Result<(), ScorerError> {
        let mut line = encode_request(request);
        line.push('\n');
        let mut stdin = self.stdin.lock().unwrap();
        stdin
            .write_all(line.as_bytes())
            .and_then(|_| stdin.flush())
            .map_err(|e| ScorerError::Protocol(format!("cannot write to scorer process: {e}")))
    }

    fn await_reply(&self, request_id: &str, rx: Receiver<Reply>) -> Reply {
        match rx.recv_timeout(self.timeout) {
            Ok(reply) => reply,
            Err(RecvTimeoutError::Timeout) => {
                self.router.lock().unwrap().pending.remove(request_id);
                Err(ScorerError::Timeout(format!(
                    "no response for request {request_id:?} within {:?}",
                    self.timeout
                )))
            }
            Err(RecvTimeoutError::Disconnected) => Err(ScorerError::Protocol("scorer process closed its output".into())),
        }
    }

    fn dispatch(&self, request: &ScorerRequest) -> Result<Receiver<Reply>, ScorerError> {
        let rx = self.register(&request.request_id)?;
        if let Err(e) = self.send(request) {
            self.router.lock().unwrap().pending.remove(&request.request_id);
            return Err(e);
        }
        Ok(rx)
    }
}

impl Scorer for ExecScorer {
    fn identity(&self) -> &str {
        &self.identity
    }

    fn score(&self, request: &ScorerRequest) -> Result<f64, ScorerError> {
        let rx = self.dispatch(request)?;
        self.await_reply(&request.request_id, rx)
    }

    /// Writes every request before waiting, so the child sees the whole batch
    /// and may answer in any order. The timeout applies to each awaited reply.
    fn score_batch(&self, requests: &[ScorerRequest]) -> Vec<Result<f64, ScorerError>> {
        let dispatched: Vec<Result<Receiver<Reply>, ScorerError>> = requests.iter().map(|r| self.dispatch(r)).collect();
        requests
            .iter()
            .zip(dispatched)
            .map(|(r, rx)| rx.and_then(|rx| self.await_reply(&r.request_id, rx)))
            .collect()
    }
}

impl Drop for ExecScorer {
    fn drop(&mut self) {
        if let Ok(mut child) = self.child.lock() {
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}
