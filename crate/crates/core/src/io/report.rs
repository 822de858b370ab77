//! Evaluation reports in JSON, CSV and Markdown.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use super::annotation::write_atomic;
use super::IoError;
use crate::engine::{breakdown_from_scores, EngineError, ScoreBreakdown, TurnEvaluation};
use crate::model::{AnnotatedTurn, ScoringConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
    Markdown,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            other => Err(format!("unknown report format {other:?}; expected json, csv or markdown")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub nugget_text: String,
    pub act: String,
    #[serde(flatten)]
    pub breakdown: ScoreBreakdown,
}

/// Per-nugget results for one turn, ordered by nugget position. The JSON form
/// carries every raw score, so NS can be recomputed from the report alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub turn_id: String,
    pub scorer: String,
    pub timestamp: String,
    pub config: ScoringConfig,
    pub s_original: f64,
    pub rows: Vec<ReportRow>,
}

impl EvaluationReport {
    pub fn new(evaluation: &TurnEvaluation, turn: &AnnotatedTurn, timestamp: impl Into<String>) -> Self {
        let rows = evaluation
            .breakdowns
            .iter()
            .map(|b| {
                let nugget = turn.nugget(&b.nugget_id);
                ReportRow {
                    nugget_text: nugget.map(|n| n.text.clone()).unwrap_or_default(),
                    act: nugget.map(|n| n.act.clone()).unwrap_or_default(),
                    breakdown: b.clone(),
                }
            })
            .collect();
        Self {
            turn_id: evaluation.turn_id.clone(),
            scorer: evaluation.scorer.clone(),
            timestamp: timestamp.into(),
            config: evaluation.config,
            s_original: evaluation.s_original,
            rows,
        }
    }

    /// Recomputes every row's breakdown from the raw scores stored in the report.
    pub fn recompute(&self) -> Result<Vec<ScoreBreakdown>, EngineError> {
        let count = self.rows.len();
        self.rows
            .iter()
            .map(|r| {
                let b = &r.breakdown;
                breakdown_from_scores(
                    &b.nugget_id,
                    b.s_original,
                    b.s_deleted,
                    b.diff_scores.clone(),
                    b.same_scores.clone(),
                    &self.config,
                    count,
                )
            })
            .collect()
    }
}

/// RFC 3339 UTC timestamp. Honors `SOURCE_DATE_EPOCH` so repeated runs can
/// produce byte-identical reports.
pub fn report_timestamp() -> String {
    let now = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.trim().parse::<i64>().ok())
        .and_then(|secs| DateTime::<Utc>::from_timestamp(secs, 0))
        .unwrap_or_else(Utc::now);
    now.to_rfc3339_opts(SecondsFormat::Secs, true)
}

/// `①`..`⑳` for the first twenty positions, `(n)` afterwards.
pub fn nugget_marker(position: usize) -> String {
    if position < 20 {
        char::from_u32(0x2460 + position as u32).expect("circled digits are valid chars").to_string()
    } else {
        format!("({})", position + 1)
    }
}

fn render_markdown(report: &EvaluationReport) -> String {
    let cfg = &report.config;
    let mut out = String::new();
    let _ = writeln!(out, "Nugget scores for turn `{}` (scorer `{}`)", report.turn_id, report.scorer);
    let _ = writeln!(out);
    let _ = writeln!(
        out,
        "K={}, L={}, {{w_phi, w_diff, w_same}}={{{}, {}, {}}}",
        cfg.k, cfg.l, cfg.w_phi, cfg.w_diff, cfg.w_same
    );
    let _ = writeln!(out);
    let _ = writeln!(out, "| Nugget | NS(T, n) |");
    let _ = writeln!(out, "|:------:|:--------:|");
    for (i, row) in report.rows.iter().enumerate() {
        let _ = writeln!(out, "| {} | {:.4} |", nugget_marker(i), row.breakdown.ns);
    }
    out
}

fn render_csv(report: &EvaluationReport) -> Result<String, IoError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| IoError::Format(e.to_string());
    w.write_record(["nugget_id", "act", "d_phi", "md_diff", "md_same", "ns"]).map_err(csv_err)?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for row in &report.rows {
        let b = &row.breakdown;
        w.write_record([
            b.nugget_id.clone(),
            row.act.clone(),
            b.d_phi.to_string(),
            opt(b.md_diff),
            opt(b.md_same),
            b.ns.to_string(),
        ])
        .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| IoError::Format(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| IoError::Format(e.to_string()))
}

pub fn render_report(report: &EvaluationReport, format: ReportFormat) -> Result<String, IoError> {
    if report.rows.is_empty() {
        return Err(IoError::EmptyReport);
    }
    match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(report).map_err(|e| IoError::Format(e.to_string()))?;
            s.push('\n');
            Ok(s)
        }
        ReportFormat::Csv => render_csv(report),
        ReportFormat::Markdown => Ok(render_markdown(report)),
    }
}

pub fn write_report(report: &EvaluationReport, format: ReportFormat, path: &Path) -> Result<(), IoError> {
    let text = render_report(report, format)?;
    write_atomic(path, text.as_bytes())
}
