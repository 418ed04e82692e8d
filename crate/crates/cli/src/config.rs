//! Experiment configuration: a JSON document whose fields can be overridden
//! from the command line.

use std::path::{Path, PathBuf};

use floquet_core::newton::LRule;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// `a..b` (inclusive) or a single `j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct JRange {
    pub lo: i64,
    pub hi: i64,
}

impl JRange {
    pub fn values(&self) -> Vec<i64> {
        (self.lo..=self.hi).collect()
    }

    pub fn is_single(&self) -> bool {
        self.lo == self.hi
    }
}

impl std::str::FromStr for JRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parse = |t: &str| {
            t.trim()
                .parse::<i64>()
                .map_err(|_| format!("`{s}` is not `j` or `a..b`"))
        };
        let (lo, hi) = match s.split_once("..") {
            Some((a, b)) => (parse(a)?, parse(b.trim_start_matches('='))?),
            None => {
                let j = parse(s)?;
                (j, j)
            }
        };
        if lo > hi {
            return Err(format!("empty range `{s}`"));
        }
        Ok(JRange { lo, hi })
    }
}

impl TryFrom<String> for JRange {
    type Error = String;
    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl From<JRange> for String {
    fn from(r: JRange) -> String {
        if r.is_single() {
            r.lo.to_string()
        } else {
            format!("{}..{}", r.lo, r.hi)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub delta: f64,
    /// Largest `|j|` of the local spectrum scan.
    pub j_max: i64,
    /// Newton targets.
    pub j: JRange,
    #[serde(rename = "L_rule")]
    pub l_rule: LRule,
    /// `L0` of the zero-gap check; the box is `[-(L0^2 - 1), L0^2 - 1]^2`.
    pub l0: u32,
    /// Newton tolerance; `1e-12 delta` when absent.
    pub tolerance: Option<f64>,
    pub max_iter: usize,
    pub compare_dense: bool,
    /// Fourier radius of the evolved datum.
    #[serde(rename = "J")]
    pub big_j: usize,
    /// Time half-width of the Bloch box.
    #[serde(rename = "N")]
    pub n_max: usize,
    pub periods: usize,
    pub steps_per_period: usize,
    pub s_values: Vec<f64>,
    /// Decay exponent `p` of the datum `(1 + |j|)^(-p)`.
    pub power: f64,
    pub bloch_check: bool,
    /// Fourier radius of the Bloch cross-check; the datum is supported on
    /// `|j| <= bloch_J / 2`.
    #[serde(rename = "bloch_J")]
    pub bloch_j: usize,
    pub bloch_periods: usize,
    pub bloch_steps_per_period: usize,
    pub quick: bool,
    pub output_dir: PathBuf,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            experiment: "floquet".into(),
            delta: 0.1,
            j_max: 30,
            j: JRange { lo: 10, hi: 40 },
            l_rule: LRule::Minimal,
            l0: 3,
            tolerance: None,
            max_iter: floquet_core::newton::DEFAULT_MAX_ITER,
            compare_dense: false,
            big_j: 64,
            n_max: 16,
            periods: 10_000,
            steps_per_period: 64,
            s_values: vec![1.0, 2.0],
            power: 2.0,
            bloch_check: false,
            bloch_j: 16,
            bloch_periods: 10,
            bloch_steps_per_period: 8192,
            quick: false,
            output_dir: PathBuf::from("floquet-out"),
            seed: 20_240_901,
        }
    }
}

fn invalid(field: &str, reason: impl Into<String>) -> CliError {
    CliError::Config {
        field: field.to_string(),
        reason: reason.into(),
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| invalid("config", format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| invalid("config", e.to_string()))
    }

    /// Check every field before any computation starts.
    pub fn validate(&self) -> Result<(), CliError> {
        if !self.delta.is_finite() || self.delta < 0.0 {
            return Err(invalid("delta", "must be finite and nonnegative"));
        }
        if self.j_max < 3 {
            return Err(invalid("j_max", "must be at least 3"));
        }
        if self.j.lo.abs() < 2 || self.j.hi.abs() < 2 || (self.j.lo < 0 && self.j.hi > 0) {
            return Err(invalid("j", "every target needs |j| >= 2"));
        }
        if self.l0 < 1 {
            return Err(invalid("l0", "must be at least 1"));
        }
        if let Some(t) = self.tolerance {
            if !(t > 0.0 && t.is_finite()) {
                return Err(invalid("tolerance", "must be positive"));
            }
        }
        if self.max_iter == 0 {
            return Err(invalid("max_iter", "must be positive"));
        }
        if self.big_j < floquet_core::evolution::MIN_RADIUS {
            return Err(invalid(
                "J",
                format!("must be at least {}", floquet_core::evolution::MIN_RADIUS),
            ));
        }
        if self.bloch_j < floquet_core::evolution::MIN_RADIUS {
            return Err(invalid(
                "bloch_J",
                format!("must be at least {}", floquet_core::evolution::MIN_RADIUS),
            ));
        }
        if self.n_max < 1 {
            return Err(invalid("N", "must be at least 1"));
        }
        if self.steps_per_period < 64 || self.bloch_steps_per_period < 64 {
            return Err(invalid("steps_per_period", "must be at least 64"));
        }
        if self.periods == 0 || self.bloch_periods == 0 {
            return Err(invalid("periods", "must be positive"));
        }
        if self.s_values.is_empty() || self.s_values.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
            return Err(invalid("s_values", "need at least one finite s >= 0"));
        }
        if !self.power.is_finite() {
            return Err(invalid("power", "must be finite"));
        }
        Ok(())
    }

    pub fn newton_tolerance(&self) -> f64 {
        self.tolerance
            .unwrap_or_else(|| floquet_core::newton::default_tolerance(self.delta))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges_parse() {
        assert_eq!("10..40".parse::<JRange>(), Ok(JRange { lo: 10, hi: 40 }));
        assert_eq!("10..=40".parse::<JRange>(), Ok(JRange { lo: 10, hi: 40 }));
        assert_eq!("12".parse::<JRange>(), Ok(JRange { lo: 12, hi: 12 }));
        assert!("4..2".parse::<JRange>().is_err());
        assert!("x".parse::<JRange>().is_err());
    }

    #[test]
    fn json_round_trip_and_validation() {
        let c = ExperimentConfig::default();
        let text = serde_json::to_string(&c).unwrap();
        assert!(text.contains("\"L_rule\":\"minimal\""));
        let back: ExperimentConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, c);
        c.validate().unwrap();
        let partial: ExperimentConfig =
            serde_json::from_str(r#"{"delta": 0.05, "j": "12"}"#).unwrap();
        assert_eq!(partial.j, JRange { lo: 12, hi: 12 });
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"dleta": 1}"#).is_err());
        let bad = ExperimentConfig { delta: -1.0, ..c };
        assert!(matches!(bad.validate(), Err(CliError::Config { field, .. }) if field == "delta"));
    }
}
