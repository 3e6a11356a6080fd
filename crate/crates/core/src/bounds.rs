//! The quantitative guarantees of the tree protocol and a verifier that
//! checks exact or estimated probabilities against them.
//!
//! With ε the protocol constant and agent `n` at level `k`:
//!
//! * reveal:      `P[n reveals] <= n^{-ε}`
//! * vote error:  `P[level-k vote wrong] <= exp(-2kε²) <= n^{-ε²}`
//! * correctness: `p_n >= 1 - 2 n^{-ε²}`

use std::f64::consts::LOG2_E;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{tree_exact, ExactResult, HerdingChain};
use crate::montecarlo::{default_probes, run_trials, ThetaMode, TrialConfig};
use crate::protocol::ProtocolKind;
use crate::signal::{SignalParams, StateOfNature};
use crate::tree::level_of;

pub fn reveal_bound(n: u128, epsilon: f64) -> f64 {
    (n as f64).powf(-epsilon)
}

/// `n^{-ε log₂ e}`, the sharper intermediate form of the reveal bound.
pub fn reveal_bound_strict(n: u128, epsilon: f64) -> f64 {
    (n as f64).powf(-epsilon * LOG2_E)
}

/// `1 − 2 n^{-ε²}`; negative (vacuous) for small `n`.
pub fn correctness_bound(n: u128, epsilon: f64) -> f64 {
    1.0 - 2.0 * (n as f64).powf(-epsilon * epsilon)
}

/// Hoeffding bound `exp(−2kε²)` for a vote over `k` samples.
pub fn chernoff_bound(k: u32, epsilon: f64) -> f64 {
    (-2.0 * f64::from(k) * epsilon * epsilon).exp()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChernoffCheck {
    pub k: u32,
    pub bound: f64,
    /// `n^{-ε²}` at the largest index of level `k`, `n = 2^k − 1`.
    pub polynomial: f64,
    /// `bound <= polynomial`, hence `bound <= n^{-ε²}` for every `n < 2^k`.
    pub holds: bool,
}

pub fn chernoff_check(k: u32, epsilon: f64) -> ChernoffCheck {
    assert!((1..=127).contains(&k), "level {k} out of range");
    let bound = chernoff_bound(k, epsilon);
    let last = (1u128 << k) - 1;
    let polynomial = (last as f64).powf(-epsilon * epsilon);
    ChernoffCheck {
        k,
        bound,
        polynomial,
        holds: bound <= polynomial,
    }
}

/// Smallest `n` from which the correctness bound guarantees `p_n >= 1 − δ`:
/// `(2/δ)^{1/ε²}`.
pub fn liminf_threshold(delta: f64, epsilon: f64) -> f64 {
    (2.0 / delta).powf(1.0 / (epsilon * epsilon))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckKind {
    /// `value >= 1 − 2n^{-ε²}`
    Correctness,
    /// `value <= n^{-ε}`
    Reveal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum VerifyMode {
    Exact,
    #[value(name = "montecarlo")]
    #[serde(rename = "montecarlo")]
    MonteCarlo,
}

/// One bound evaluated at one `(n, θ, ε)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub protocol: ProtocolKind,
    pub n: u128,
    pub theta: StateOfNature,
    pub epsilon: f64,
    pub check: CheckKind,
    pub value: f64,
    /// CI half-width granted to estimates; 0 for exact values.
    pub slack: f64,
    pub reveal_bound: f64,
    pub correct_bound: f64,
    pub chernoff_bound: f64,
    pub satisfied: bool,
    pub vacuous: bool,
    pub method: String,
}

impl BoundReport {
    /// Evaluates one check without a method label.
    pub fn evaluate(
        protocol: ProtocolKind,
        n: u128,
        theta: StateOfNature,
        epsilon: f64,
        check: CheckKind,
        value: f64,
        slack: f64,
    ) -> Self {
        Self::new(protocol, n, theta, epsilon, check, value, slack, "")
    }

    #[allow(clippy::too_many_arguments)]
    fn new(
        protocol: ProtocolKind,
        n: u128,
        theta: StateOfNature,
        epsilon: f64,
        check: CheckKind,
        value: f64,
        slack: f64,
        method: &str,
    ) -> Self {
        let reveal = reveal_bound(n, epsilon);
        let correct = correctness_bound(n, epsilon);
        let level = level_of(n).expect("probes start at 1").level;
        let (vacuous, holds) = match check {
            CheckKind::Correctness => (correct <= 0.0, value + slack >= correct),
            CheckKind::Reveal => (reveal >= 1.0, value - slack <= reveal),
        };
        BoundReport {
            protocol,
            n,
            theta,
            epsilon,
            check,
            value,
            slack,
            reveal_bound: reveal,
            correct_bound: correct,
            chernoff_bound: chernoff_bound(level, epsilon),
            satisfied: vacuous || holds,
            vacuous,
            method: method.to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub protocol: ProtocolKind,
    pub params: SignalParams,
    pub prior: f64,
    pub n_max: u128,
    pub mode: VerifyMode,
    /// Explicit probes; empty means the mode's default grid.
    pub probes: Vec<u128>,
    /// Exact mode probes every `n` up to this limit.
    pub dense_limit: u128,
    pub trials: u64,
    pub seed: u64,
}

pub const DEFAULT_DENSE_LIMIT: u128 = 1 << 13;

impl VerifyConfig {
    pub fn new(
        protocol: ProtocolKind,
        params: SignalParams,
        n_max: u128,
        mode: VerifyMode,
    ) -> Self {
        VerifyConfig {
            protocol,
            params,
            prior: 0.5,
            n_max,
            mode,
            probes: Vec::new(),
            dense_limit: DEFAULT_DENSE_LIMIT,
            trials: 100_000,
            seed: 0,
        }
    }

    /// ε* and the ε*/2 robustness margin.
    pub fn epsilons(&self) -> [f64; 2] {
        let eps = self.params.derived().epsilon_star;
        [eps, eps / 2.0]
    }

    fn probe_grid(&self) -> Vec<u128> {
        if !self.probes.is_empty() {
            let mut probes = self.probes.clone();
            probes.sort_unstable();
            probes.dedup();
            return probes;
        }
        let mut probes = default_probes(self.n_max);
        if self.mode == VerifyMode::Exact {
            probes.extend(1..=self.dense_limit.min(self.n_max));
            probes.sort_unstable();
            probes.dedup();
        }
        probes
    }
}

/// Exact probabilities at `probes` for a deterministic protocol, per θ.
pub fn exact_series(
    protocol: ProtocolKind,
    params: &SignalParams,
    prior: f64,
    theta: StateOfNature,
    probes: &[u128],
) -> Result<Vec<ExactResult>> {
    match protocol {
        ProtocolKind::TreeDeterministic => probes
            .iter()
            .map(|&n| tree_exact(n, params, theta))
            .collect(),
        ProtocolKind::RationalHerding => {
            let chain = HerdingChain::new(params, prior, theta)?;
            probes.iter().map(|&n| chain.at(n)).collect()
        }
        ProtocolKind::RandomizedReveal => Err(Error::NoExactOracle("randomized")),
    }
}

/// Checks every probed `n`, both states and both ε values.
///
/// Reveal checks apply to the tree protocol only: its revealing agents are
/// the ones the reveal bound speaks about.
pub fn verify(config: &VerifyConfig, workers: usize) -> Result<Vec<BoundReport>> {
    let probes = config.probe_grid();
    if let Some(&bad) = probes.iter().find(|&&n| n == 0 || n > config.n_max) {
        return Err(Error::ProbeOutOfRange {
            index: bad,
            n: config.n_max,
        });
    }
    let with_reveal = config.protocol == ProtocolKind::TreeDeterministic;
    let mut reports = Vec::new();
    for theta in StateOfNature::BOTH {
        // (n, p_correct, p_reveal, slack_correct, slack_reveal, method)
        let values: Vec<(u128, f64, f64, f64, f64, &str)> = match config.mode {
            VerifyMode::Exact => exact_series(
                config.protocol,
                &config.params,
                config.prior,
                theta,
                &probes,
            )?
            .into_iter()
            .map(|r| (r.n, r.p_correct, r.p_reveal, 0.0, 0.0, r.method.name()))
            .collect(),
            VerifyMode::MonteCarlo => {
                let series = run_trials(
                    &TrialConfig {
                        protocol: config.protocol,
                        params: config.params,
                        prior: config.prior,
                        theta_mode: ThetaMode::Fixed(theta),
                        n: config.n_max,
                        trials: config.trials,
                        seed: config.seed,
                        probes: probes.clone(),
                    },
                    workers,
                )?;
                (0..series.indices.len())
                    .map(|i| {
                        let (lo, hi) = crate::montecarlo::wilson_interval(
                            series.reveals[i],
                            series.trials,
                            crate::montecarlo::CONFIDENCE,
                        );
                        (
                            series.indices[i],
                            series.p_hat[i],
                            series.reveal_hat[i],
                            series.ci_half_width[i],
                            (hi - lo) / 2.0,
                            "montecarlo",
                        )
                    })
                    .collect()
            }
        };
        for epsilon in config.epsilons() {
            for &(n, p_correct, p_reveal, slack_c, slack_r, method) in &values {
                reports.push(BoundReport::new(
                    config.protocol,
                    n,
                    theta,
                    epsilon,
                    CheckKind::Correctness,
                    p_correct,
                    slack_c,
                    method,
                ));
                if with_reveal {
                    reports.push(BoundReport::new(
                        config.protocol,
                        n,
                        theta,
                        epsilon,
                        CheckKind::Reveal,
                        p_reveal,
                        slack_r,
                        method,
                    ));
                }
            }
        }
    }
    Ok(reports)
}

/// Aggregate view of a batch of reports.
#[derive(Clone, Debug, PartialEq)]
pub struct VerifySummary {
    pub total: usize,
    pub non_vacuous: usize,
    pub violations: Vec<BoundReport>,
}

impl VerifySummary {
    pub fn new(reports: &[BoundReport]) -> Self {
        VerifySummary {
            total: reports.len(),
            non_vacuous: reports.iter().filter(|r| !r.vacuous).count(),
            violations: reports.iter().filter(|r| !r.satisfied).cloned().collect(),
        }
    }

    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn all_vacuous(&self) -> bool {
        self.non_vacuous == 0
    }
}
