use std::path::PathBuf;

use chainrelay::CompromiseModel;
use clap::{Args, Parser, Subcommand};

use crate::config::{
    AnalyzeConfig, DimensionConfig, FloatRange, IntRange, SimulateConfig, SweepConfig, VerifyConfig,
};
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "chainrelay",
    version,
    about = "Secret-sharing relay simulator and security analysis"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run seeded relay trials over sampled compromise patterns.
    Simulate(SimulateArgs),
    /// Run key-verification trials under an attack and report acceptance rates.
    VerifyDemo(VerifyArgs),
    /// Bound, exact and Monte Carlo secure probabilities over explicit (n, m, t) points.
    Analyze(AnalyzeArgs),
    /// Nodes per city needed to reach a target secure probability.
    Dimension(DimensionArgs),
    /// Bound, exact and both Monte Carlo models over (n, m, t) ranges.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Master seed; every trial derives its own seed from it
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub trials: Option<u64>,
    /// Write CSV here instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON file with the command's parameters; flags take precedence
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Worker threads (does not affect output)
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub ell: Option<usize>,
    #[arg(long)]
    pub t: Option<f64>,
    /// bernoulli or fixed-fraction
    #[arg(long)]
    pub model: Option<CompromiseModel>,
    /// Fixed pattern, `m*n` characters of 0/1, city by city.
    #[arg(long)]
    pub pattern: Option<String>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long = "ell-1a")]
    pub ell_1a: Option<usize>,
    #[arg(long = "ell-1b")]
    pub ell_1b: Option<usize>,
    #[arg(long = "ell-2")]
    pub ell_2: Option<usize>,
    #[arg(long = "ell-3")]
    pub ell_3: Option<usize>,
    /// default, linear or linear:<seed>
    #[arg(long)]
    pub hash: Option<String>,
    /// none, random-e1b, linear-forge or impersonate
    #[arg(long)]
    pub attack: Option<String>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_delimiter = ',')]
    pub n: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    pub m: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    pub t: Option<Vec<f64>>,
    #[arg(long)]
    pub model: Option<CompromiseModel>,
}

#[derive(Debug, Args)]
pub struct DimensionArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_delimiter = ',')]
    pub ps: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub delta: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub m: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    pub t: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Inclusive range `from:to`.
    #[arg(long, value_parser = parse_int_range)]
    pub n: Option<IntRange>,
    /// Inclusive range `from:to`.
    #[arg(long, value_parser = parse_int_range)]
    pub m: Option<IntRange>,
    /// Inclusive range `from:to:step`.
    #[arg(long, value_parser = parse_float_range)]
    pub t: Option<FloatRange>,
}

fn parse_int_range(s: &str) -> Result<IntRange, String> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| format!("expected from:to, got {s:?}"))?;
    Ok(IntRange {
        from: a.parse().map_err(|e| format!("{e}"))?,
        to: b.parse().map_err(|e| format!("{e}"))?,
    })
}

fn parse_float_range(s: &str) -> Result<FloatRange, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, c] = parts[..] else {
        return Err(format!("expected from:to:step, got {s:?}"));
    };
    let p = |x: &str| x.parse::<f64>().map_err(|e| format!("{e}"));
    Ok(FloatRange {
        from: p(a)?,
        to: p(b)?,
        step: p(c)?,
    })
}

macro_rules! set {
    ($cfg:ident . $field:ident, $value:expr) => {
        if let Some(v) = $value {
            $cfg.$field = v;
        }
    };
}

impl SimulateArgs {
    pub fn resolve(&self) -> Result<SimulateConfig, CliError> {
        let mut c: SimulateConfig = crate::config::load(self.common.config.as_deref())?;
        set!(c.m, self.m);
        set!(c.n, self.n);
        set!(c.ell, self.ell);
        set!(c.t, self.t);
        set!(c.model, self.model);
        set!(c.seed, self.common.seed);
        set!(c.trials, self.common.trials);
        if self.pattern.is_some() {
            c.pattern = self.pattern.clone();
        }
        if self.common.out.is_some() {
            c.out = self.common.out.clone();
        }
        if self.common.threads.is_some() {
            c.threads = self.common.threads;
        }
        Ok(c)
    }
}

impl VerifyArgs {
    pub fn resolve(&self) -> Result<VerifyConfig, CliError> {
        let mut c: VerifyConfig = crate::config::load(self.common.config.as_deref())?;
        set!(c.ell_1a, self.ell_1a);
        set!(c.ell_1b, self.ell_1b);
        set!(c.ell_2, self.ell_2);
        set!(c.ell_3, self.ell_3);
        set!(c.hash, self.hash.clone());
        set!(c.attack, self.attack.clone());
        set!(c.seed, self.common.seed);
        set!(c.trials, self.common.trials);
        if self.common.out.is_some() {
            c.out = self.common.out.clone();
        }
        if self.common.threads.is_some() {
            c.threads = self.common.threads;
        }
        Ok(c)
    }
}

impl AnalyzeArgs {
    pub fn resolve(&self) -> Result<AnalyzeConfig, CliError> {
        let mut c: AnalyzeConfig = crate::config::load(self.common.config.as_deref())?;
        set!(c.n, self.n.clone());
        set!(c.m, self.m.clone());
        set!(c.t, self.t.clone());
        set!(c.model, self.model);
        set!(c.seed, self.common.seed);
        set!(c.trials, self.common.trials);
        if self.common.out.is_some() {
            c.out = self.common.out.clone();
        }
        if self.common.threads.is_some() {
            c.threads = self.common.threads;
        }
        Ok(c)
    }
}

impl DimensionArgs {
    pub fn resolve(&self) -> Result<DimensionConfig, CliError> {
        let mut c: DimensionConfig = crate::config::load(self.common.config.as_deref())?;
        set!(c.ps, self.ps.clone());
        set!(c.delta, self.delta.clone());
        set!(c.m, self.m.clone());
        set!(c.t, self.t.clone());
        if self.common.seed.is_some() || self.common.trials.is_some() {
            return Err(CliError::Config(
                "dimension is closed-form; --seed and --trials do not apply".into(),
            ));
        }
        if self.common.out.is_some() {
            c.out = self.common.out.clone();
        }
        if self.common.threads.is_some() {
            c.threads = self.common.threads;
        }
        Ok(c)
    }
}

impl SweepArgs {
    pub fn resolve(&self) -> Result<SweepConfig, CliError> {
        let mut c: SweepConfig = crate::config::load(self.common.config.as_deref())?;
        set!(c.n, self.n);
        set!(c.m, self.m);
        set!(c.t, self.t);
        set!(c.seed, self.common.seed);
        set!(c.trials, self.common.trials);
        if self.common.out.is_some() {
            c.out = self.common.out.clone();
        }
        if self.common.threads.is_some() {
            c.threads = self.common.threads;
        }
        Ok(c)
    }
}
