//! Everything an evaluation run needs, resolved before any scoring starts.

use std::path::{Path, PathBuf};
use std::time::Duration;

use nugget_core::io::{load_config, report_timestamp, ReportFormat};
use nugget_core::model::ScoringConfig;
use nugget_core::scorer::ScorerDescriptor;

use crate::args::EvaluateArgs;
use crate::commands::Failure;

#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub run_id: String,
    pub inputs: Vec<PathBuf>,
    pub config: ScoringConfig,
    pub scorer: ScorerDescriptor,
    pub format: ReportFormat,
    pub output: Option<PathBuf>,
    pub cache: bool,
    pub timeout: Duration,
}

impl RunManifest {
    /// Loads the config file, applies flag overrides, validates the config and
    /// parses the scorer descriptor. Does not open the scorer.
    pub fn resolve(args: &EvaluateArgs) -> Result<Self, Failure> {
        let config = load_config(args.config.as_deref(), &args.flags.overrides()).map_err(Failure::from)?;
        let scorer: ScorerDescriptor = args.scorer.parse().map_err(Failure::from)?;
        if args.timeout_secs == 0 {
            return Err(Failure::invalid("TIMEOUT_RANGE: --timeout-secs must be at least 1"));
        }
        let run_id = args.run_id.clone().unwrap_or_else(|| {
            let ts: String = report_timestamp().chars().filter(char::is_ascii_digit).collect();
            format!("run-{ts}")
        });
        Ok(RunManifest {
            run_id,
            inputs: args.input.clone(),
            config,
            scorer,
            format: args.format,
            output: args.output.clone(),
            cache: !args.no_cache,
            timeout: Duration::from_secs(args.timeout_secs),
        })
    }

    /// Where the report for `turn_id` goes: the output file for a single
    /// input, `<output>/<turn_id>.<ext>` otherwise, `None` for stdout.
    pub fn output_for(&self, turn_id: &str) -> Option<PathBuf> {
        let out = self.output.as_deref()?;
        if self.inputs.len() == 1 {
            return Some(out.to_path_buf());
        }
        Some(Path::new(out).join(format!("{turn_id}.{}", extension(self.format))))
    }
}

pub fn extension(format: ReportFormat) -> &'static str {
    match format {
        ReportFormat::Json => "json",
        ReportFormat::Csv => "csv",
        ReportFormat::Markdown => "md",
    }
}
