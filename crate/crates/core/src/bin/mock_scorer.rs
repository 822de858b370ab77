//! Scripted exec-transport scorer.
//!
//! Reads newline-delimited JSON requests on stdin and answers on stdout using
//! one of the builtin scoring rules. Requests are buffered up to `--window`
//! (or until input is idle for `--idle-ms`) and answered in reverse arrival
//! order, which exercises id-based response matching in clients.
//!
//! ```text
//! nugget-mock-scorer [--rule length|constant:<v>|table:<file>|keyword:<file>] [--window N] [--idle-ms M]
//! ```

use std::io::{self, BufRead, Write};
use std::process::ExitCode;
use std::sync::mpsc::{self, RecvTimeoutError};
use std::thread;
use std::time::Duration;

use nugget_core::scorer::protocol::{WireRequest, WireResponse};
use nugget_core::scorer::{Scorer, ScorerDescriptor, ScorerKind, ScorerRequest};

struct Options {
    rule: String,
    window: usize,
    idle: Duration,
}

fn parse_args() -> Result<Options, String> {
    let mut opts = Options { rule: "length".into(), window: 4, idle: Duration::from_millis(20) };
    let mut args = std::env::args().skip(1);
    while let Some(flag) = args.next() {
        let mut value = || args.next().ok_or_else(|| format!("{flag} needs a value"));
        match flag.as_str() {
            "--rule" => opts.rule = value()?,
            "--window" => opts.window = value()?.parse().map_err(|e| format!("--window: {e}"))?,
            "--idle-ms" => opts.idle = Duration::from_millis(value()?.parse().map_err(|e| format!("--idle-ms: {e}"))?),
            other => return Err(format!("unknown argument {other:?}")),
        }
    }
    opts.window = opts.window.max(1);
    Ok(opts)
}

fn answer(scorer: &dyn Scorer, line: &str) -> WireResponse {
    match serde_json::from_str::<WireRequest>(line) {
        Ok(req) => {
            let request = ScorerRequest::new(req.id.clone(), req.turn).with_context(req.context);
            match scorer.score(&request) {
                Ok(score) => WireResponse::score(req.id, score),
                Err(e) => WireResponse::error(req.id, e.code(), e.to_string()),
            }
        }
        Err(e) => WireResponse::error("", "PROTOCOL", format!("malformed request: {e}")),
    }
}

fn main() -> ExitCode {
    let opts = match parse_args() {
        Ok(o) => o,
        Err(e) => {
            eprintln!("nugget-mock-scorer: {e}");
            return ExitCode::from(2);
        }
    };
    let descriptor: ScorerDescriptor = match opts.rule.parse() {
        Ok(d) => d,
        Err(e) => {
            eprintln!("nugget-mock-scorer: {e}");
            return ExitCode::from(2);
        }
    };
    if descriptor.kind() != ScorerKind::Builtin {
        eprintln!("nugget-mock-scorer: --rule must name a builtin scorer");
        return ExitCode::from(2);
    }
    let scorer = match descriptor.open(Duration::from_secs(1)) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("nugget-mock-scorer: {e}");
            return ExitCode::from(2);
        }
    };

    let (tx, rx) = mpsc::channel::<String>();
    thread::spawn(move || {
        for line in io::stdin().lock().lines() {
            let Ok(line) = line else { break };
            if !line.trim().is_empty() && tx.send(line).is_err() {
                break;
            }
        }
    });

    let stdout = io::stdout();
    let mut buffer: Vec<String> = Vec::new();
    let flush = |buffer: &mut Vec<String>| -> io::Result<()> {
        let mut out = stdout.lock();
        for line in buffer.drain(..).rev() {
            let resp = answer(scorer.as_ref(), &line);
            writeln!(out, "{}", serde_json::to_string(&resp).expect("response serializes"))?;
        }
        out.flush()
    };

    loop {
        match rx.recv_timeout(opts.idle) {
            Ok(line) => {
                buffer.push(line);
                if buffer.len() >= opts.window && flush(&mut buffer).is_err() {
                    break;
                }
            }
            Err(RecvTimeoutError::Timeout) => {
                if !buffer.is_empty() && flush(&mut buffer).is_err() {
                    break;
                }
            }
            Err(RecvTimeoutError::Disconnected) => {
                let _ = flush(&mut buffer);
                break;
            }
        }
    }
    ExitCode::SUCCESS
}
