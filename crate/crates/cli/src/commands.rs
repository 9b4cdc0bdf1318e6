//! Command bodies. Each returns the complete output text (metadata header and
//! CSV) so the driver and the tests see exactly the same bytes.

use anyhow::{anyhow, Context};
use chainrelay::analysis::{self, fmt_prob, SecurityParams, SecurityReport};
use chainrelay::relay::{adversary_reconstruct, extract_view, run_relay};
use chainrelay::rng::{mix64, trial_seed};
use chainrelay::topology::{has_cut, sample_pattern};
use chainrelay::verification::{attack_trial, Attack, HashFamily};
use chainrelay::CompromiseModel;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{AnalyzeConfig, DimensionConfig, SimulateConfig, SweepConfig, VerifyConfig};
use crate::error::CliError;

pub const SIMULATE_COLUMNS: [&str; 8] = [
    "trial",
    "pattern",
    "dishonest",
    "cut",
    "reconstructed",
    "keys_equal",
    "intercity_bits",
    "intracity_bits",
];

pub const VERIFY_COLUMNS: [&str; 12] = [
    "attack",
    "hash",
    "ell_1a",
    "ell_1b",
    "ell_2",
    "ell_3",
    "trials",
    "bob_accepts",
    "alice_accepts",
    "bob_rate",
    "alice_rate",
    "reference_rate",
];

pub const DIMENSION_COLUMNS: [&str; 7] = [
    "p_s",
    "delta",
    "m",
    "t",
    "required_n",
    "approx_n",
    "bound_at_required_n",
];

pub const SWEEP_COLUMNS: [&str; 11] = [
    "n",
    "m",
    "t",
    "bound",
    "exact",
    "exact_status",
    "mc_bernoulli",
    "mc_bernoulli_half_width",
    "mc_fixed_fraction",
    "mc_fixed_fraction_half_width",
    "mc_trials",
];

/// The analyze columns: the report columns followed by the sampling model.
pub fn analyze_columns() -> Vec<&'static str> {
    SecurityReport::CSV_HEADER
        .iter()
        .copied()
        .chain(["model"])
        .collect()
}

fn header<C: Serialize>(command: &str, seed: Option<u64>, config: &C) -> Result<String, CliError> {
    let mut out = format!(
        "# chainrelay {}\n# command: {command}\n",
        env!("CARGO_PKG_VERSION")
    );
    if let Some(seed) = seed {
        out.push_str(&format!("# seed: {seed}\n"));
    }
    let json = serde_json::to_string(config).context("serializing the effective config")?;
    out.push_str(&format!("# config: {json}\n"));
    Ok(out)
}

fn csv_body<I, R>(columns: &[&str], rows: I) -> Result<String, CliError>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(columns).context("writing CSV header")?;
    for row in rows {
        w.write_record(row).context("writing CSV row")?;
    }
    let bytes = w.into_inner().map_err(|e| anyhow!("flushing CSV: {e}"))?;
    Ok(String::from_utf8(bytes).context("CSV is not UTF-8")?)
}

fn rate(count: u64, trials: u64) -> String {
    fmt_prob(count as f64 / trials as f64)
}

pub fn simulate(cfg: &SimulateConfig) -> Result<String, CliError> {
    let (spec, fixed) = cfg.validate()?;
    let rows = (0..cfg.trials)
        .into_par_iter()
        .map(|k| -> anyhow::Result<Vec<String>> {
            let pattern_seed = trial_seed(cfg.seed, k);
            let pattern = match &fixed {
                Some(p) => p.clone(),
                None => sample_pattern(spec, cfg.t, pattern_seed, cfg.model)?,
            };
            let outcome = run_relay(&spec, &pattern, mix64(pattern_seed), None)?;
            let cut = has_cut(&spec, &pattern)?;
            let recovered = adversary_reconstruct(&extract_view(&outcome, &pattern)?, &spec);
            if let Some(r) = &recovered {
                anyhow::ensure!(
                    *r == outcome.s,
                    "trial {k}: reconstruction disagrees with Alice's key"
                );
            }
            let bw = outcome.transcript.bandwidth();
            Ok(vec![
                k.to_string(),
                pattern.to_string(),
                pattern.dishonest_count().to_string(),
                cut.to_string(),
                recovered.is_some().to_string(),
                outcome.keys_equal().to_string(),
                bw.intercity_bits.to_string(),
                bw.intracity_bits.to_string(),
            ])
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    Ok(header("simulate", Some(cfg.seed), cfg)? + &csv_body(&SIMULATE_COLUMNS, rows)?)
}

pub fn verify_demo(cfg: &VerifyConfig) -> Result<String, CliError> {
    let (layout, family, attack) = cfg.validate()?;
    let (bob, alice) = (0..cfg.trials)
        .into_par_iter()
        .map(|k| attack_trial(layout, family, &attack, trial_seed(cfg.seed, k)))
        .try_fold(
            || (0u64, 0u64),
            |(b, a), out| out.map(|o| (b + o.bob_accepts as u64, a + o.alice_accepts as u64)),
        )
        .try_reduce(|| (0, 0), |x, y| Ok((x.0 + y.0, x.1 + y.1)))
        .context("verification trial")?;

    let guess_rate = |bits: usize| 2f64.powi(-(bits as i32));
    let reference = match (&attack, family) {
        (Attack::None, _) => 1.0,
        (Attack::RandomE1b { .. }, _) => guess_rate(layout.ell_1b),
        (Attack::LinearForge, HashFamily::LinearTest { .. }) => 1.0,
        (Attack::LinearForge, HashFamily::DefaultNonlinear) => guess_rate(layout.ell_1b),
        (Attack::Impersonate, _) => guess_rate(layout.ell_2),
    };
    let row = vec![
        attack.name().to_string(),
        family.to_string(),
        layout.ell_1a.to_string(),
        layout.ell_1b.to_string(),
        layout.ell_2.to_string(),
        layout.ell_3.to_string(),
        cfg.trials.to_string(),
        bob.to_string(),
        alice.to_string(),
        rate(bob, cfg.trials),
        rate(alice, cfg.trials),
        fmt_prob(reference),
    ];
    Ok(header("verify-demo", Some(cfg.seed), cfg)? + &csv_body(&VERIFY_COLUMNS, [row])?)
}

pub fn analyze(cfg: &AnalyzeConfig) -> Result<String, CliError> {
    cfg.validate()?;
    let mut rows = Vec::new();
    let mut index = 0u64;
    for &n in &cfg.n {
        for &m in &cfg.m {
            for &t in &cfg.t {
                let report = SecurityReport::compute(
                    SecurityParams { n, m, t },
                    cfg.trials,
                    trial_seed(cfg.seed, index),
                    cfg.model,
                )
                .context("computing security report")?;
                let mut record = report.csv_record();
                record.push(cfg.model.to_string());
                rows.push(record);
                index += 1;
            }
        }
    }
    Ok(header("analyze", Some(cfg.seed), cfg)? + &csv_body(&analyze_columns(), rows)?)
}

pub fn dimension(cfg: &DimensionConfig) -> Result<String, CliError> {
    cfg.validate()?;
    let targets = cfg
        .ps
        .iter()
        .map(|&p| (p, 1.0 - p))
        .chain(cfg.delta.iter().map(|&d| (1.0 - d, d)));
    let mut rows = Vec::new();
    for (p_s, delta) in targets {
        for &m in &cfg.m {
            for &t in &cfg.t {
                let n = analysis::required_n(p_s, m, t).context("required_n")?;
                let approx = analysis::approx_n(delta, m, t).context("approx_n")?;
                let bound = analysis::bound_ps(n, m, t).context("bound_ps")?;
                rows.push(vec![
                    p_s.to_string(),
                    delta.to_string(),
                    m.to_string(),
                    t.to_string(),
                    n.to_string(),
                    format!("{approx:.6}"),
                    fmt_prob(bound),
                ]);
            }
        }
    }
    Ok(header("dimension", None, cfg)? + &csv_body(&DIMENSION_COLUMNS, rows)?)
}

pub fn sweep(cfg: &SweepConfig) -> Result<String, CliError> {
    cfg.validate()?;
    let mut rows = Vec::new();
    let mut index = 0u64;
    for n in cfg.n.values() {
        for m in cfg.m.values() {
            for t in cfg.t.values() {
                let params = SecurityParams { n, m, t };
                let row_seed = trial_seed(cfg.seed, index);
                index += 1;
                let report = SecurityReport::compute(params, 0, 0, CompromiseModel::Bernoulli)
                    .context("sweep row")?;
                let mc = |model| -> Result<(String, String), CliError> {
                    if cfg.trials == 0 {
                        return Ok(Default::default());
                    }
                    let e = analysis::monte_carlo_secure_prob(n, m, t, cfg.trials, row_seed, model)
                        .context("Monte Carlo estimate")?;
                    Ok((fmt_prob(e.estimate), fmt_prob(e.half_width)))
                };
                let (b, bh) = mc(CompromiseModel::Bernoulli)?;
                let (f, fh) = mc(CompromiseModel::FixedFraction)?;
                rows.push(vec![
                    n.to_string(),
                    m.to_string(),
                    t.to_string(),
                    fmt_prob(report.bound),
                    report.exact.map(fmt_prob).unwrap_or_default(),
                    report.exact_status.as_str().to_string(),
                    b,
                    bh,
                    f,
                    fh,
                    if cfg.trials > 0 {
                        cfg.trials.to_string()
                    } else {
                        String::new()
                    },
                ]);
            }
        }
    }
    Ok(header("sweep", Some(cfg.seed), cfg)? + &csv_body(&SWEEP_COLUMNS, rows)?)
}
