use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use nugget_core::io::{ConfigOverrides, ReportFormat};

#[derive(Debug, Parser)]
#[command(name = "nugget-eval", version, about = "Nugget-level dialogue quality scores from a turn-level scorer")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score every nugget of one or more annotated turns and write a report.
    Evaluate(EvaluateArgs),
    /// Check an annotation file without scoring it.
    Validate(ValidateArgs),
    /// Run the workbench HTTP service.
    Serve(ServeArgs),
}

/// Scoring parameters given on the command line. Each one overrides the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigFlags {
    /// Diff substitutions averaged per nugget.
    #[arg(long)]
    pub k: Option<usize>,
    /// Same-act substitutions averaged per nugget.
    #[arg(long)]
    pub l: Option<usize>,
    #[arg(long)]
    pub w_phi: Option<f64>,
    #[arg(long)]
    pub w_diff: Option<f64>,
    #[arg(long)]
    pub w_same: Option<f64>,
}

impl ConfigFlags {
    pub fn overrides(&self) -> ConfigOverrides {
        ConfigOverrides {
            k: self.k,
            l: self.l,
            w_phi: self.w_phi,
            w_diff: self.w_diff,
            w_same: self.w_same,
            ..ConfigOverrides::default()
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct EvaluateArgs {
    /// Annotation file. Repeat for several turns.
    #[arg(long, required = true)]
    pub input: Vec<PathBuf>,
    /// JSON scoring config; missing fields take defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// builtin:<spec> | exec:<command> | http:<url>
    #[arg(long)]
    pub scorer: String,
    #[command(flatten)]
    pub flags: ConfigFlags,
    #[arg(long, default_value = "json", value_parser = parse_format)]
    pub format: ReportFormat,
    /// Report file, or a directory when several inputs are given. Defaults to stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Send every text to the scorer, even repeats.
    #[arg(long)]
    pub no_cache: bool,
    #[arg(long, default_value_t = 30)]
    pub timeout_secs: u64,
    /// Label printed with diagnostics. Defaults to one derived from the report timestamp.
    #[arg(long)]
    pub run_id: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct ValidateArgs {
    pub input: PathBuf,
    /// Also warn when candidates are fewer than this config's K or L.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    #[arg(long)]
    pub scorer: String,
    /// Directory holding `<annotation_id>.json` files.
    #[arg(long)]
    pub data_dir: PathBuf,
    /// Built workbench assets, served at `/`.
    #[arg(long)]
    pub static_dir: Option<PathBuf>,
    /// Base scoring config; request bodies override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub no_cache: bool,
    #[arg(long, default_value_t = 30)]
    pub timeout_secs: u64,
}

fn parse_format(s: &str) -> Result<ReportFormat, String> {
    s.parse()
}
