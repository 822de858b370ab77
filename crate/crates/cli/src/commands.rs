use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

use nugget_core::engine::{evaluate_turn, EngineError};
use nugget_core::io::{load_annotation, load_config, render_report, report_timestamp, write_report, AnnotationFile, ConfigOverrides, EvaluationReport, IoError, ReportFormat};
use nugget_core::model::{validate_annotation_for, ScoringConfig};
use nugget_core::scorer::{cached, Scorer, ScorerDescriptor, ScorerError};

use crate::args::{Cli, Command, EvaluateArgs, ServeArgs, ValidateArgs};
use crate::manifest::RunManifest;
use crate::service;

/// Process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Exit {
    Ok = 0,
    /// Bad input, config or output path.
    Invalid = 1,
    /// The scorer could not be opened, failed or returned garbage.
    Scorer = 2,
}

#[derive(Debug)]
pub struct Failure {
    pub exit: Exit,
    pub message: String,
}

impl Failure {
    pub fn invalid(message: impl Into<String>) -> Self {
        Failure { exit: Exit::Invalid, message: message.into() }
    }

    fn in_file(path: &Path, e: IoError) -> Self {
        Failure::invalid(format!("{}: {e}", path.display()))
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        Failure::invalid(e.to_string())
    }
}

impl From<ScorerError> for Failure {
    fn from(e: ScorerError) -> Self {
        Failure { exit: Exit::Scorer, message: format!("{}: {e}", e.code()) }
    }
}

impl From<EngineError> for Failure {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::ScorerFailure { perturbation, text, source } => Failure {
                exit: Exit::Scorer,
                message: format!("scoring {perturbation} failed: {source}\n  text: {text:?}"),
            },
            EngineError::NonFiniteScore(_) => Failure { exit: Exit::Scorer, message: e.to_string() },
            other => Failure::invalid(other.to_string()),
        }
    }
}

pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Exit {
    let result = match cli.command {
        Command::Evaluate(args) => evaluate(&args, out, err),
        Command::Validate(args) => validate(&args, out),
        Command::Serve(args) => serve(&args, err),
    };
    match result {
        Ok(()) => Exit::Ok,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message.trim_end());
            f.exit
        }
    }
}

/// Opens the scorer behind `descriptor`, wrapped in a cache unless `cache` is false.
pub fn open_scorer(descriptor: &ScorerDescriptor, timeout: Duration, cache: bool) -> Result<Arc<dyn Scorer>, ScorerError> {
    let scorer = descriptor.open(timeout)?;
    Ok(if cache { Arc::new(cached(scorer)) } else { Arc::from(scorer) })
}

pub fn evaluate(args: &EvaluateArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), Failure> {
    let manifest = RunManifest::resolve(args)?;
    let mut turns = Vec::with_capacity(manifest.inputs.len());
    for path in &manifest.inputs {
        turns.push(load_annotation(path).map_err(|e| Failure::in_file(path, e))?);
    }
    if manifest.output.is_some() && turns.len() > 1 {
        let mut seen = HashSet::new();
        if let Some((turn, _)) = turns.iter().find(|(t, _)| !seen.insert(t.turn_id.as_str())) {
            return Err(Failure::invalid(format!("DUPLICATE_TURN_ID: {:?} appears in more than one input", turn.turn_id)));
        }
    }
    for ((turn, sets), path) in turns.iter().zip(&manifest.inputs) {
        for w in validate_annotation_for(turn, sets, &manifest.config).warnings() {
            let _ = writeln!(err, "{}: warning[{}] {}", path.display(), w.code, w.message);
        }
    }

    let scorer = open_scorer(&manifest.scorer, manifest.timeout, manifest.cache)?;
    let timestamp = report_timestamp();
    let mut reports = Vec::with_capacity(turns.len());
    for (turn, sets) in &turns {
        let evaluation = evaluate_turn(turn, sets, &manifest.config, scorer.as_ref())?;
        reports.push(EvaluationReport::new(&evaluation, turn, timestamp.clone()));
    }

    write_reports(&manifest, &reports, out)?;
    let _ = writeln!(err, "{}: scored {} turn(s) with {}", manifest.run_id, reports.len(), scorer.identity());
    Ok(())
}

fn write_reports(manifest: &RunManifest, reports: &[EvaluationReport], out: &mut dyn Write) -> Result<(), Failure> {
    if manifest.output.is_some() {
        if reports.len() > 1 {
            let dir = manifest.output.as_deref().expect("checked");
            fs::create_dir_all(dir).map_err(|e| Failure::invalid(format!("IO_ERROR: {}: {e}", dir.display())))?;
        }
        for report in reports {
            let path = manifest.output_for(&report.turn_id).expect("output is set");
            write_report(report, manifest.format, &path)?;
        }
        return Ok(());
    }
    let text = if reports.len() > 1 && manifest.format == ReportFormat::Json {
        let mut s = serde_json::to_string_pretty(reports).map_err(|e| Failure::invalid(format!("FORMAT_ERROR: {e}")))?;
        s.push('\n');
        s
    } else {
        let rendered = reports.iter().map(|r| render_report(r, manifest.format)).collect::<Result<Vec<_>, _>>()?;
        rendered.join("\n")
    };
    out.write_all(text.as_bytes()).map_err(|e| Failure::invalid(format!("IO_ERROR: stdout: {e}")))
}

pub fn validate(args: &ValidateArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let cfg = match &args.config {
        Some(p) => load_config(Some(p), &ConfigOverrides::default())?,
        None => ScoringConfig::default(),
    };
    let path = &args.input;
    let raw = fs::read_to_string(path).map_err(|e| Failure::invalid(format!("IO_ERROR: {}: {e}", path.display())))?;
    let file: AnnotationFile = serde_json::from_str(&raw).map_err(|e| {
        Failure::in_file(path, IoError::Parse { line: e.line(), column: e.column(), message: e.to_string() })
    })?;
    let (turn, sets) = file.into_model();
    let report = validate_annotation_for(&turn, &sets, &cfg);
    if !report.issues.is_empty() {
        let _ = writeln!(out, "{report}");
    }
    let errors = report.errors().count();
    let warnings = report.warnings().count();
    let _ = writeln!(out, "{}: {} ({errors} error(s), {warnings} warning(s))", path.display(), if report.ok { "valid" } else { "invalid" });
    if report.ok {
        Ok(())
    } else {
        Err(Failure::invalid(format!("VALIDATION_ERROR: {} has {errors} error(s)", path.display())))
    }
}

fn serve(args: &ServeArgs, err: &mut dyn Write) -> Result<(), Failure> {
    let base = match &args.config {
        Some(p) => ConfigOverrides::from_file(p)?,
        None => ConfigOverrides::default(),
    };
    base.resolve()?;
    if !args.data_dir.is_dir() {
        return Err(Failure::invalid(format!("IO_ERROR: {} is not a directory", args.data_dir.display())));
    }
    let descriptor: ScorerDescriptor = args.scorer.parse()?;
    let scorer = open_scorer(&descriptor, Duration::from_secs(args.timeout_secs.max(1)), !args.no_cache)?;
    let state = service::AppState { data_dir: args.data_dir.clone(), scorer, base };
    let app = service::router(state, args.static_dir.as_deref());

    let runtime = tokio::runtime::Runtime::new().map_err(|e| Failure::invalid(format!("runtime: {e}")))?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind((args.host.as_str(), args.port))
            .await
            .map_err(|e| Failure::invalid(format!("IO_ERROR: bind {}:{}: {e}", args.host, args.port)))?;
        let addr = listener.local_addr().map_err(|e| Failure::invalid(e.to_string()))?;
        let _ = writeln!(err, "listening on http://{addr} (scorer {})", descriptor.identity());
        let _ = err.flush();
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
            .map_err(|e| Failure::invalid(format!("IO_ERROR: {e}")))
    })
}
