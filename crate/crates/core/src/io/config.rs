//! Scoring configuration files and flag overrides.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::IoError;
use crate::model::{validate_config, EmptyTurnPolicy, LengthScaling, ScoringConfig};

/// Partial configuration: every field optional, unset fields fall back to
/// the defaults (K=5, L=3, weights {10, 5, 2}, slope 1, no length scaling).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigOverrides {
    pub k: Option<usize>,
    pub l: Option<usize>,
    pub w_phi: Option<f64>,
    pub w_diff: Option<f64>,
    pub w_same: Option<f64>,
    pub sigmoid_slope: Option<f64>,
    pub length_scaling: Option<LengthScaling>,
    pub empty_turn: Option<EmptyTurnPolicy>,
}

impl ConfigOverrides {
    pub fn from_json(json: &str) -> Result<Self, IoError> {
        if json.trim().is_empty() {
            return Ok(Self::default());
        }
        serde_json::from_str(json).map_err(|e| IoError::Parse { line: e.line(), column: e.column(), message: e.to_string() })
    }

    pub fn from_file(path: &Path) -> Result<Self, IoError> {
        let raw = fs::read_to_string(path).map_err(|e| IoError::io(path, e))?;
        Self::from_json(&raw)
    }

    /// Fields set in `other` win.
    pub fn merge(self, other: ConfigOverrides) -> Self {
        ConfigOverrides {
            k: other.k.or(self.k),
            l: other.l.or(self.l),
            w_phi: other.w_phi.or(self.w_phi),
            w_diff: other.w_diff.or(self.w_diff),
            w_same: other.w_same.or(self.w_same),
            sigmoid_slope: other.sigmoid_slope.or(self.sigmoid_slope),
            length_scaling: other.length_scaling.or(self.length_scaling),
            empty_turn: other.empty_turn.or(self.empty_turn),
        }
    }

    pub fn apply(&self, base: ScoringConfig) -> ScoringConfig {
        ScoringConfig {
            k: self.k.unwrap_or(base.k),
            l: self.l.unwrap_or(base.l),
            w_phi: self.w_phi.unwrap_or(base.w_phi),
            w_diff: self.w_diff.unwrap_or(base.w_diff),
            w_same: self.w_same.unwrap_or(base.w_same),
            sigmoid_slope: self.sigmoid_slope.unwrap_or(base.sigmoid_slope),
            length_scaling: self.length_scaling.unwrap_or(base.length_scaling),
            empty_turn: self.empty_turn.unwrap_or(base.empty_turn),
        }
    }

    /// Applies to the defaults and validates.
    pub fn resolve(&self) -> Result<ScoringConfig, IoError> {
        let cfg = self.apply(ScoringConfig::default());
        let report = validate_config(&cfg);
        if !report.ok {
            return Err(IoError::Validation(report));
        }
        Ok(cfg)
    }
}

/// Loads an optional config file, layers `flags` on top and validates.
pub fn load_config(path: Option<&Path>, flags: &ConfigOverrides) -> Result<ScoringConfig, IoError> {
    let file = match path {
        Some(p) => ConfigOverrides::from_file(p)?,
        None => ConfigOverrides::default(),
    };
    file.merge(flags.clone()).resolve()
}
