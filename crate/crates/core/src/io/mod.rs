//! Annotation files, configuration loading and report output.

pub mod annotation;
pub mod config;
pub mod report;

use std::path::Path;

use thiserror::Error;

use crate::model::ValidationReport;

pub use annotation::{annotation_to_json, load_annotation, parse_annotation, save_annotation, write_atomic, AnnotationFile};
pub use config::{load_config, ConfigOverrides};
pub use report::{nugget_marker, render_report, report_timestamp, write_report, EvaluationReport, ReportFormat, ReportRow};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("IO_ERROR: {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("PARSE_ERROR at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("VALIDATION_ERROR\n{0}")]
    Validation(ValidationReport),
    #[error("EMPTY_REPORT: nothing to write")]
    EmptyReport,
    #[error("FORMAT_ERROR: {0}")]
    Format(String),
}

impl IoError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        IoError::Io { path: path.display().to_string(), source }
    }

    pub fn code(&self) -> &'static str {
        match self {
            IoError::Io { .. } => "IO_ERROR",
            IoError::Parse { .. } => "PARSE_ERROR",
            IoError::Validation(_) => "VALIDATION_ERROR",
            IoError::EmptyReport => "EMPTY_REPORT",
            IoError::Format(_) => "FORMAT_ERROR",
        }
    }
}
