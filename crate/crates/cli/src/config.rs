//! Per-command configuration.
//!
//! Each subcommand reads an optional JSON document whose keys mirror its
//! flags; flags override the document, which overrides the defaults below.
//! `out` and `threads` affect where and how fast output is produced, never
//! its content, so they are left out of the echoed configuration.

use std::path::{Path, PathBuf};

use chainrelay::analysis::EXACT_MAX_N;
use chainrelay::verification::{Attack, HashFamily, KeyLayout};
use chainrelay::{CompromiseModel, CompromisePattern, NetworkSpec};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const MAX_TRIALS: u64 = 100_000_000;
pub const MAX_GRID_ROWS: usize = 100_000;

pub fn load<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T, CliError> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("invalid config {}: {e}", path.display())))
}

fn check_t(t: f64) -> Result<(), CliError> {
    if !(0.0..=1.0).contains(&t) {
        return Err(CliError::Config(format!("t={t} must lie in [0, 1]")));
    }
    Ok(())
}

fn check_trials(trials: u64) -> Result<(), CliError> {
    if trials == 0 || trials > MAX_TRIALS {
        return Err(CliError::Config(format!(
            "trials={trials} must lie in 1..={MAX_TRIALS}"
        )));
    }
    Ok(())
}

fn check_nonempty<T>(name: &str, v: &[T]) -> Result<(), CliError> {
    if v.is_empty() {
        return Err(CliError::Config(format!(
            "{name} must list at least one value"
        )));
    }
    Ok(())
}

fn check_grid(rows: usize) -> Result<(), CliError> {
    if rows > MAX_GRID_ROWS {
        return Err(CliError::Config(format!(
            "grid has {rows} rows, more than {MAX_GRID_ROWS}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub m: usize,
    pub n: usize,
    pub ell: usize,
    pub t: f64,
    pub model: CompromiseModel,
    /// Fixed compromise pattern in `0`/`1` text form; overrides sampling.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pattern: Option<String>,
    pub trials: u64,
    pub seed: u64,
    #[serde(skip_serializing)]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing)]
    pub threads: Option<usize>,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            m: 4,
            n: 3,
            ell: 256,
            t: 0.7,
            model: CompromiseModel::Bernoulli,
            pattern: None,
            trials: 1000,
            seed: 0,
            out: None,
            threads: None,
        }
    }
}

impl SimulateConfig {
    pub fn validate(&self) -> Result<(NetworkSpec, Option<CompromisePattern>), CliError> {
        let spec = NetworkSpec::new(self.m, self.n, self.ell)
            .map_err(|e| CliError::Config(e.to_string()))?;
        check_t(self.t)?;
        check_trials(self.trials)?;
        let pattern = self
            .pattern
            .as_deref()
            .map(|p| CompromisePattern::parse(spec, p))
            .transpose()
            .map_err(|e| CliError::Config(format!("pattern: {e}")))?;
        Ok((spec, pattern))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    pub ell_1a: usize,
    pub ell_1b: usize,
    pub ell_2: usize,
    pub ell_3: usize,
    /// `default`, `linear` or `linear:<seed>`.
    pub hash: String,
    /// `none`, `random-e1b`, `linear-forge` or `impersonate`.
    pub attack: String,
    pub trials: u64,
    pub seed: u64,
    #[serde(skip_serializing)]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing)]
    pub threads: Option<usize>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        let layout = KeyLayout::default();
        Self {
            ell_1a: layout.ell_1a,
            ell_1b: layout.ell_1b,
            ell_2: layout.ell_2,
            ell_3: layout.ell_3,
            hash: "default".into(),
            attack: "none".into(),
            trials: 10_000,
            seed: 0,
            out: None,
            threads: None,
        }
    }
}

impl VerifyConfig {
    pub fn validate(&self) -> Result<(KeyLayout, HashFamily, Attack), CliError> {
        if self.ell_1a == 0 || self.ell_1b == 0 || self.ell_2 == 0 || self.ell_3 == 0 {
            return Err(CliError::Config(
                "every key segment needs at least one bit".into(),
            ));
        }
        let layout = KeyLayout::new(self.ell_1a, self.ell_1b, self.ell_2, self.ell_3)
            .map_err(|e| CliError::Config(e.to_string()))?;
        let family: HashFamily = self
            .hash
            .parse()
            .map_err(|e: chainrelay::Error| CliError::Config(e.to_string()))?;
        check_trials(self.trials)?;
        let attack = match self.attack.as_str() {
            "none" => Attack::None,
            "random-e1b" => Attack::RandomE1b {
                e3: chainrelay::verification::campaign_e3(layout, self.seed),
            },
            "linear-forge" => Attack::LinearForge,
            "impersonate" => Attack::Impersonate,
            other => {
                return Err(CliError::Config(format!(
                "unknown attack {other:?} (expected none, random-e1b, linear-forge or impersonate)"
            )))
            }
        };
        Ok((layout, family, attack))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalyzeConfig {
    pub n: Vec<usize>,
    pub m: Vec<usize>,
    pub t: Vec<f64>,
    pub model: CompromiseModel,
    /// Monte Carlo trials per row; 0 disables the estimate.
    pub trials: u64,
    pub seed: u64,
    #[serde(skip_serializing)]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing)]
    pub threads: Option<usize>,
}

impl Default for AnalyzeConfig {
    fn default() -> Self {
        Self {
            n: vec![3],
            m: vec![4],
            t: vec![0.6],
            model: CompromiseModel::Bernoulli,
            trials: 10_000,
            seed: 0,
            out: None,
            threads: None,
        }
    }
}

impl AnalyzeConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        check_nonempty("n", &self.n)?;
        check_nonempty("m", &self.m)?;
        check_nonempty("t", &self.t)?;
        if self.n.contains(&0) || self.m.contains(&0) {
            return Err(CliError::Config("n and m values must be at least 1".into()));
        }
        self.t.iter().try_for_each(|&t| check_t(t))?;
        if self.trials > 0 {
            check_trials(self.trials)?;
        }
        check_grid(self.n.len() * self.m.len() * self.t.len())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DimensionConfig {
    /// Target secure probabilities.
    pub ps: Vec<f64>,
    /// Failure budgets, `1 - p_s`.
    pub delta: Vec<f64>,
    pub m: Vec<usize>,
    pub t: Vec<f64>,
    #[serde(skip_serializing)]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing)]
    pub threads: Option<usize>,
}

impl Default for DimensionConfig {
    fn default() -> Self {
        Self {
            ps: vec![0.999],
            delta: Vec::new(),
            m: vec![11],
            t: vec![0.5],
            out: None,
            threads: None,
        }
    }
}

impl DimensionConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.ps.is_empty() && self.delta.is_empty() {
            return Err(CliError::Config(
                "give at least one ps or delta target".into(),
            ));
        }
        check_nonempty("m", &self.m)?;
        check_nonempty("t", &self.t)?;
        for &p in self.ps.iter().chain(&self.delta) {
            if !(p > 0.0 && p < 1.0) {
                return Err(CliError::Config(format!(
                    "targets must lie in (0, 1), got {p}"
                )));
            }
        }
        if self.m.iter().any(|&m| m < 2) {
            return Err(CliError::Config("dimensioning needs m >= 2".into()));
        }
        if self.t.iter().any(|&t| !(t > 0.0 && t < 1.0)) {
            return Err(CliError::Config("dimensioning needs t in (0, 1)".into()));
        }
        check_grid((self.ps.len() + self.delta.len()) * self.m.len() * self.t.len())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntRange {
    pub from: usize,
    pub to: usize,
}

impl IntRange {
    pub fn values(&self) -> Vec<usize> {
        (self.from..=self.to).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FloatRange {
    pub from: f64,
    pub to: f64,
    pub step: f64,
}

impl FloatRange {
    /// `from, from + step, ...` up to `to`, each rounded to 9 decimals.
    pub fn values(&self) -> Vec<f64> {
        let count = ((self.to - self.from) / self.step + 1e-9).floor() as usize + 1;
        (0..count)
            .map(|k| ((self.from + k as f64 * self.step) * 1e9).round() / 1e9)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub n: IntRange,
    pub m: IntRange,
    pub t: FloatRange,
    /// Monte Carlo trials per row and model; 0 disables the estimates.
    pub trials: u64,
    pub seed: u64,
    #[serde(skip_serializing)]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing)]
    pub threads: Option<usize>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            n: IntRange { from: 1, to: 4 },
            m: IntRange { from: 2, to: 6 },
            t: FloatRange {
                from: 0.5,
                to: 0.9,
                step: 0.1,
            },
            trials: 10_000,
            seed: 0,
            out: None,
            threads: None,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.n.from == 0
            || self.m.from == 0
            || self.n.from > self.n.to
            || self.m.from > self.m.to
        {
            return Err(CliError::Config(
                "n and m ranges must be non-empty and start at 1 or more".into(),
            ));
        }
        if self.t.step.is_nan() || self.t.step <= 0.0 || self.t.from > self.t.to {
            return Err(CliError::Config(
                "t range needs from <= to and a positive step".into(),
            ));
        }
        check_t(self.t.from)?;
        check_t(self.t.to)?;
        if self.trials > 0 {
            check_trials(self.trials)?;
        }
        let rows = (self.n.to - self.n.from + 1)
            .saturating_mul(self.m.to - self.m.from + 1)
            .saturating_mul(self.t.values().len());
        check_grid(rows)?;
        if self.trials == 0 && self.n.to > EXACT_MAX_N {
            // rows beyond the exact oracle would carry nothing but the bound
            return Err(CliError::Config(format!(
                "n above {EXACT_MAX_N} has no exact value; enable Monte Carlo with trials > 0"
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        let err = serde_json::from_str::<SimulateConfig>(r#"{"m": 3, "bogus": 1}"#).unwrap_err();
        assert!(err.to_string().contains("bogus"));
    }

    #[test]
    fn partial_documents_keep_defaults() {
        let c: SimulateConfig =
            serde_json::from_str(r#"{"m": 7, "model": "fixed-fraction"}"#).unwrap();
        assert_eq!(c.m, 7);
        assert_eq!(c.model, CompromiseModel::FixedFraction);
        assert_eq!(c.n, SimulateConfig::default().n);
    }

    #[test]
    fn echo_leaves_out_runtime_options() {
        let c = SimulateConfig {
            out: Some("x.csv".into()),
            threads: Some(3),
            ..Default::default()
        };
        let json = serde_json::to_string(&c).unwrap();
        assert!(!json.contains("out") && !json.contains("threads"));
    }

    #[test]
    fn validation() {
        assert!(SimulateConfig {
            t: 1.5,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(SimulateConfig {
            m: 0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(SimulateConfig {
            pattern: Some("0101".into()),
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(VerifyConfig {
            attack: "replay".into(),
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(VerifyConfig {
            hash: "md5".into(),
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(DimensionConfig {
            m: vec![1],
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(AnalyzeConfig {
            t: vec![],
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(SweepConfig {
            t: FloatRange {
                from: 0.5,
                to: 0.4,
                step: 0.1
            },
            ..Default::default()
        }
        .validate()
        .is_err());
    }

    #[test]
    fn float_range_is_clean() {
        let r = FloatRange {
            from: 0.1,
            to: 0.9,
            step: 0.1,
        };
        assert_eq!(
            r.values(),
            vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]
        );
    }
}
