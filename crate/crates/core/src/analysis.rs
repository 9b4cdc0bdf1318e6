//! Security probabilities, dimensioning and bandwidth accounting.
//!
//! `t` is the probability that a relay node is honest. The closed-form lower
//! bound treats the `m - 1` stages as independent; [`exact_secure_prob`] runs
//! a transfer-matrix recursion over per-city compromise subsets and accounts
//! for the correlation between neighbouring stages.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::rng::trial_seed;
use crate::topology::{check_probability, has_cut, sample_pattern, CompromiseModel, NetworkSpec};

/// Largest city size the exact recursion accepts (`2^n` states).
pub const EXACT_MAX_N: usize = 12;

/// Two-sided 99% normal quantile.
pub const Z_99: f64 = 2.575_829_303_548_901;

fn check_dims(n: usize, m: usize) -> Result<(), Error> {
    if n == 0 || m == 0 {
        return Err(Error::Domain(format!(
            "n and m must be at least 1 (n={n}, m={m})"
        )));
    }
    Ok(())
}

fn check_open(name: &'static str, value: f64) -> Result<(), Error> {
    if !(value > 0.0 && value < 1.0) {
        return Err(Error::ProbabilityOutOfRange {
            name,
            value,
            range: "(0, 1)",
        });
    }
    Ok(())
}

/// `[1 - (1 - t^2)^n]^(m - 1)`; 1 for a single city.
pub fn bound_ps(n: usize, m: usize, t: f64) -> Result<f64, Error> {
    check_dims(n, m)?;
    check_probability("t", t)?;
    let stage_compromised = (1.0 - t * t).powi(n as i32);
    Ok((1.0 - stage_compromised).powi((m - 1) as i32))
}

/// Probability that a Bernoulli(`1 - t`) compromise pattern has no cut.
pub fn exact_secure_prob(n: usize, m: usize, t: f64) -> Result<f64, Error> {
    check_dims(n, m)?;
    check_probability("t", t)?;
    if n > EXACT_MAX_N {
        return Err(Error::StateSpaceTooLarge {
            n,
            max: EXACT_MAX_N,
        });
    }
    let states = 1usize << n;
    let full = states - 1;
    let q = 1.0 - t;
    let weight: Vec<f64> = (0..states)
        .map(|s| {
            let bad = s.count_ones() as i32;
            q.powi(bad) * t.powi(n as i32 - bad)
        })
        .collect();

    // mass[s]: probability that the current city has dishonest set `s` and no
    // cut has been seen yet. A fully dishonest first city is already a cut.
    let mut mass: Vec<f64> = weight.clone();
    mass[full] = 0.0;

    for _ in 1..m {
        // sup[c] = sum of mass over all supersets of c
        let mut sup = mass.clone();
        for bit in 0..n {
            for c in 0..states {
                if c & (1 << bit) == 0 {
                    sup[c] += sup[c | (1 << bit)];
                }
            }
        }
        let total = sup[0];
        // The stage is a cut iff prev | next == full, i.e. prev covers !next.
        mass = (0..states)
            .map(|next| weight[next] * (total - sup[full & !next]))
            .collect();
    }
    // a fully dishonest last city is a cut as well
    mass[full] = 0.0;
    Ok(mass.iter().sum::<f64>().clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub trials: u64,
    /// 99% normal-approximation half-width.
    pub half_width: f64,
}

impl McEstimate {
    pub fn covers(&self, value: f64) -> bool {
        (self.estimate - value).abs() <= self.half_width
    }
}

/// Fraction of sampled patterns without a cut. Trial `k` uses the pattern seed
/// `mix64(seed + k)`, so the result does not depend on the thread count.
pub fn monte_carlo_secure_prob(
    n: usize,
    m: usize,
    t: f64,
    trials: u64,
    seed: u64,
    model: CompromiseModel,
) -> Result<McEstimate, Error> {
    check_dims(n, m)?;
    check_probability("t", t)?;
    if trials == 0 {
        return Err(Error::Domain("at least one trial is required".into()));
    }
    let spec = NetworkSpec::new(m, n, 1)?;
    let secure = (0..trials)
        .into_par_iter()
        .map(|k| {
            let pattern = sample_pattern(spec, t, trial_seed(seed, k), model)?;
            Ok(!has_cut(&spec, &pattern)? as u64)
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    let p = secure as f64 / trials as f64;
    let half_width = Z_99 * (p * (1.0 - p) / trials as f64).sqrt();
    Ok(McEstimate {
        estimate: p,
        trials,
        half_width,
    })
}

/// Smallest `n` with `bound_ps(n, m, t) >= p_s`.
pub fn required_n(p_s: f64, m: usize, t: f64) -> Result<usize, Error> {
    check_open("p_s", p_s)?;
    check_open("t", t)?;
    if m < 2 {
        return Err(Error::Domain(format!(
            "dimensioning needs at least two cities (m={m})"
        )));
    }
    let per_stage = p_s.powf(1.0 / (m - 1) as f64);
    let real = (-per_stage).ln_1p() / (-t * t).ln_1p();
    let mut n = if real.is_finite() && real > 1.0 {
        real.ceil() as usize
    } else {
        1
    };
    let meets = |n: usize| bound_ps(n, m, t).map(|b| b >= p_s);
    while !meets(n)? {
        n += 1;
    }
    while n > 1 && meets(n - 1)? {
        n -= 1;
    }
    Ok(n)
}

/// Small-failure-budget estimate `(ln(m - 1) - ln δ) / -ln(1 - t^2)`.
pub fn approx_n(delta: f64, m: usize, t: f64) -> Result<f64, Error> {
    check_open("delta", delta)?;
    check_open("t", t)?;
    if m < 2 {
        return Err(Error::Domain(format!(
            "dimensioning needs at least two cities (m={m})"
        )));
    }
    Ok((((m - 1) as f64).ln() - delta.ln()) / -(-t * t).ln_1p())
}

/// Whether an adversary that picks `k - 1` nodes cannot form a cut.
pub fn chosen_k_secure(n: usize, k: usize) -> bool {
    k <= n
}

/// Corrupt shares a proactive verifiable sharing round tolerates: `ceil(n/4) - 1`, at least 0.
pub fn pvss_dos_tolerance(n: usize) -> usize {
    n.div_ceil(4).saturating_sub(1)
}

/// Honesty level above which verifiable resharing protects against denial of service.
pub fn pvss_threshold() -> f64 {
    3f64.sqrt() / 2.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandwidthModel {
    pub intercity_bits: u64,
    pub intracity_bits: u64,
    /// Intercity bits when each of the `m*n` parties talks to a partner
    /// `m/2` cities away: `m^2 n^2 ell / 2`.
    pub all_pairs_intercity: f64,
}

pub fn bandwidth_model(n: usize, m: usize, ell: usize) -> Result<BandwidthModel, Error> {
    let spec = NetworkSpec::new(m, n, ell)?;
    let (n, m, ell) = (n as u64, m as u64, spec.share_bits() as u64);
    Ok(BandwidthModel {
        intercity_bits: n * (m + 1) * ell,
        intracity_bits: m * n * (n - 1) * ell,
        all_pairs_intercity: (m * m * n * n * ell) as f64 / 2.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecurityParams {
    pub n: usize,
    pub m: usize,
    pub t: f64,
}

/// Why the exact column may be missing or differ in meaning from the bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExactStatus {
    Ok,
    /// Single city: the bound is vacuous (1) while the exact value counts a
    /// fully dishonest city as a compromise.
    SingleCity,
    TooLarge,
}

impl ExactStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Ok => "ok",
            Self::SingleCity => "single-city",
            Self::TooLarge => "too-large",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecurityReport {
    pub params: SecurityParams,
    pub bound: f64,
    pub exact: Option<f64>,
    pub exact_status: ExactStatus,
    pub mc: Option<McEstimate>,
}

impl SecurityReport {
    /// Bound and exact value, plus a Monte Carlo estimate when `mc_trials > 0`.
    pub fn compute(
        params: SecurityParams,
        mc_trials: u64,
        seed: u64,
        model: CompromiseModel,
    ) -> Result<Self, Error> {
        let SecurityParams { n, m, t } = params;
        let bound = bound_ps(n, m, t)?;
        let (exact, exact_status) = match exact_secure_prob(n, m, t) {
            Ok(v) if m == 1 => (Some(v), ExactStatus::SingleCity),
            Ok(v) => (Some(v), ExactStatus::Ok),
            Err(Error::StateSpaceTooLarge { .. }) => (None, ExactStatus::TooLarge),
            Err(e) => return Err(e),
        };
        let mc = if mc_trials > 0 {
            Some(monte_carlo_secure_prob(n, m, t, mc_trials, seed, model)?)
        } else {
            None
        };
        Ok(Self {
            params,
            bound,
            exact,
            exact_status,
            mc,
        })
    }

    pub const CSV_HEADER: [&'static str; 9] = [
        "n",
        "m",
        "t",
        "bound",
        "exact",
        "exact_status",
        "mc_estimate",
        "mc_half_width",
        "mc_trials",
    ];

    pub fn csv_record(&self) -> Vec<String> {
        let opt = |v: Option<f64>| v.map(fmt_prob).unwrap_or_default();
        vec![
            self.params.n.to_string(),
            self.params.m.to_string(),
            self.params.t.to_string(),
            fmt_prob(self.bound),
            opt(self.exact),
            self.exact_status.as_str().to_string(),
            opt(self.mc.map(|e| e.estimate)),
            opt(self.mc.map(|e| e.half_width)),
            self.mc.map(|e| e.trials.to_string()).unwrap_or_default(),
        ]
    }
}

/// Fixed 12-significant-digit rendering used in every CSV column.
pub fn fmt_prob(p: f64) -> String {
    format!("{p:.12}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::CompromisePattern;

    /// Sums the Bernoulli weight of every cut-free pattern.
    fn enumerate_secure(n: usize, m: usize, t: f64) -> f64 {
        let spec = NetworkSpec::new(m, n, 1).unwrap();
        (0u64..1 << (n * m))
            .filter(|&mask| !has_cut(&spec, &CompromisePattern::from_mask(spec, mask)).unwrap())
            .map(|mask| {
                let bad = mask.count_ones() as i32;
                (1.0 - t).powi(bad) * t.powi((n * m) as i32 - bad)
            })
            .sum()
    }

    #[test]
    fn bound_examples() {
        for (n, m) in [(1, 1), (3, 5), (7, 2)] {
            assert_eq!(bound_ps(n, m, 1.0).unwrap(), 1.0);
        }
        assert_eq!(bound_ps(4, 3, 0.0).unwrap(), 0.0);
        assert!((bound_ps(5, 3, 0.6).unwrap() - 0.796_780_850_246_068_4).abs() < 1e-13);
        assert_eq!(bound_ps(3, 1, 0.2).unwrap(), 1.0);
        assert!(bound_ps(0, 3, 0.5).is_err());
        assert!(bound_ps(3, 3, 1.2).is_err());
    }

    #[test]
    fn exact_examples() {
        for t in [0.1, 0.5, 0.77] {
            assert!((exact_secure_prob(1, 2, t).unwrap() - t * t).abs() < 1e-15);
        }
        assert!((exact_secure_prob(1, 3, 0.9).unwrap() - 0.729).abs() < 1e-12);
        assert!((exact_secure_prob(2, 3, 0.5).unwrap() - 17.0 / 64.0).abs() < 1e-15);
        assert!((exact_secure_prob(3, 4, 0.6).unwrap() - 0.482_721_140_736_001_86).abs() < 1e-12);
        assert_eq!(
            exact_secure_prob(13, 2, 0.5).unwrap_err(),
            Error::StateSpaceTooLarge { n: 13, max: 12 }
        );
    }

    #[test]
    fn exact_single_city() {
        assert!((exact_secure_prob(3, 1, 0.5).unwrap() - (1.0 - 0.125)).abs() < 1e-15);
    }

    #[test]
    fn exact_matches_enumeration() {
        for n in 1..=4 {
            for m in 1..=16 / n {
                for t in [0.1, 0.35, 0.6, 0.9] {
                    let dp = exact_secure_prob(n, m, t).unwrap();
                    let brute = enumerate_secure(n, m, t);
                    assert!(
                        (dp - brute).abs() < 1e-12,
                        "n={n} m={m} t={t}: {dp} vs {brute}"
                    );
                }
            }
        }
    }

    #[test]
    fn bound_is_a_lower_bound_and_tight_for_two_cities() {
        // m = 1 is excluded: there are no stages, the bound is 1 and the
        // exact value still charges a fully dishonest city.
        for n in 1..=6 {
            for m in 2..=8 {
                for k in 1..=9 {
                    let t = k as f64 / 10.0;
                    let exact = exact_secure_prob(n, m, t).unwrap();
                    let bound = bound_ps(n, m, t).unwrap();
                    assert!(exact >= bound - 1e-12, "n={n} m={m} t={t}");
                    if m == 2 {
                        assert!((exact - bound).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn bound_monotonicity() {
        for n in 1..8 {
            for m in 1..8 {
                for k in 0..10 {
                    let t = k as f64 / 10.0;
                    let b = bound_ps(n, m, t).unwrap();
                    assert!(bound_ps(n + 1, m, t).unwrap() >= b);
                    assert!(bound_ps(n, m + 1, t).unwrap() <= b);
                    assert!(bound_ps(n, m, t + 0.1).unwrap() >= b);
                }
            }
        }
    }

    #[test]
    fn monte_carlo_examples() {
        let e = monte_carlo_secure_prob(3, 4, 1.0, 1000, 1, CompromiseModel::Bernoulli).unwrap();
        assert_eq!((e.estimate, e.half_width), (1.0, 0.0));
        let e =
            monte_carlo_secure_prob(1, 3, 0.9, 1_000_000, 2, CompromiseModel::Bernoulli).unwrap();
        assert!((e.estimate - 0.729).abs() < 0.002, "{e:?}");
        let e =
            monte_carlo_secure_prob(4, 6, 0.7, 1_000_000, 3, CompromiseModel::Bernoulli).unwrap();
        assert!(e.estimate >= bound_ps(4, 6, 0.7).unwrap() - 3.0 * e.half_width);
        assert!(monte_carlo_secure_prob(3, 4, 0.5, 0, 1, CompromiseModel::Bernoulli).is_err());
    }

    #[test]
    fn monte_carlo_is_thread_independent() {
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| {
                    monte_carlo_secure_prob(3, 5, 0.6, 20_000, 42, CompromiseModel::FixedFraction)
                        .unwrap()
                })
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn monte_carlo_interval_is_calibrated() {
        let exact = exact_secure_prob(3, 4, 0.6).unwrap();
        let covered = (0..200u64)
            .filter(|&r| {
                monte_carlo_secure_prob(
                    3,
                    4,
                    0.6,
                    10_000,
                    trial_seed(900, r),
                    CompromiseModel::Bernoulli,
                )
                .unwrap()
                .covers(exact)
            })
            .count();
        assert!(covered >= 190, "{covered}/200");
    }

    #[test]
    fn required_n_examples() {
        assert_eq!(required_n(0.999, 11, 0.5).unwrap(), 33);
        assert_eq!(required_n(0.36, 2, 0.6).unwrap(), 1);
        assert!(required_n(0.9, 1, 0.5).is_err());
        assert!(required_n(0.9, 3, 0.0).is_err());
        assert!(required_n(1.0, 3, 0.5).is_err());
    }

    #[test]
    fn approx_n_examples() {
        assert!((approx_n(0.001, 11, 0.5).unwrap() - 32.015_691_118_604_38).abs() < 1e-9);
        let two = approx_n(0.01, 2, 0.4).unwrap();
        assert!((two - 0.01f64.ln() / (1.0 - 0.16f64).ln()).abs() < 1e-12);
        assert!(approx_n(0.0, 3, 0.5).is_err());
    }

    #[test]
    fn approximation_never_undershoots() {
        // The small-delta form overestimates the real-valued solution, so its
        // ceiling is required_n or one more.
        for delta in [1e-2, 1e-3, 1e-5] {
            for m in [2, 3, 7, 30] {
                for k in 1..10 {
                    let t = k as f64 / 10.0;
                    let req = required_n(1.0 - delta, m, t).unwrap();
                    let approx = approx_n(delta, m, t).unwrap().ceil() as usize;
                    assert!(
                        approx == req || approx == req + 1,
                        "delta={delta} m={m} t={t}"
                    );
                }
            }
        }
    }

    #[test]
    fn chosen_k_and_pvss() {
        assert!(chosen_k_secure(5, 5));
        assert!(!chosen_k_secure(5, 6));
        assert_eq!(pvss_dos_tolerance(1), 0);
        assert_eq!(pvss_dos_tolerance(4), 0);
        assert_eq!(pvss_dos_tolerance(5), 1);
        assert_eq!(pvss_dos_tolerance(8), 1);
        assert_eq!(pvss_dos_tolerance(9), 2);
        assert!((pvss_threshold() - 0.866_025_403_784_438_6).abs() < 1e-15);
    }

    #[test]
    fn bandwidth_examples() {
        let b = bandwidth_model(1, 1, 1).unwrap();
        assert_eq!((b.intercity_bits, b.intracity_bits), (2, 0));
        let b = bandwidth_model(3, 4, 128).unwrap();
        assert_eq!((b.intercity_bits, b.intracity_bits), (1920, 3072));
        assert_eq!(b.all_pairs_intercity, (16 * 9 * 128) as f64 / 2.0);
        let single = bandwidth_model(3, 5, 64).unwrap().intercity_bits;
        let double = bandwidth_model(3, 10, 64).unwrap().intercity_bits;
        assert_eq!(double, 2 * single - 3 * 64);
    }

    #[test]
    fn report_flags() {
        let r = SecurityReport::compute(
            SecurityParams { n: 2, m: 1, t: 0.5 },
            0,
            0,
            CompromiseModel::Bernoulli,
        )
        .unwrap();
        assert_eq!(r.exact_status, ExactStatus::SingleCity);
        assert_eq!(r.bound, 1.0);
        let r = SecurityReport::compute(
            SecurityParams {
                n: 20,
                m: 3,
                t: 0.5,
            },
            100,
            0,
            CompromiseModel::Bernoulli,
        )
        .unwrap();
        assert_eq!(r.exact_status, ExactStatus::TooLarge);
        assert!(r.exact.is_none() && r.mc.is_some());
        assert_eq!(r.csv_record().len(), SecurityReport::CSV_HEADER.len());
        let json = serde_json::to_value(&r).unwrap();
        assert_eq!(json["exact_status"], "too-large");
    }
}
