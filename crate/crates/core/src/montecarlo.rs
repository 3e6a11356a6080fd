//! Seeded, schedule-independent trial engine.
//!
//! Trial `t` draws everything from the stream `(seed, t)`, and per-probe
//! results are merged as integer counts, so the output does not depend on
//! how trials are spread over workers.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::baseline::{HerdingProtocol, RandomizedProtocol};
use crate::error::{Error, Result};
use crate::protocol::{check_probability, Protocol, ProtocolKind, Step};
use crate::signal::{SeededRng, SignalParams, StateOfNature};
use crate::tree::{act, level_of, RevealTranscript};

/// How θ is chosen for each trial.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum ThetaMode {
    Fixed(StateOfNature),
    /// θ = 1 with the given probability, drawn per trial.
    Prior(f64),
}

impl ThetaMode {
    pub fn draw(self, rng: &mut SeededRng) -> StateOfNature {
        match self {
            ThetaMode::Fixed(theta) => theta,
            ThetaMode::Prior(p) => {
                if rng.theta_unit() < p {
                    StateOfNature::One
                } else {
                    StateOfNature::Zero
                }
            }
        }
    }
}

impl fmt::Display for ThetaMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ThetaMode::Fixed(theta) => write!(f, "fixed{theta}"),
            ThetaMode::Prior(p) => write!(f, "prior({p})"),
        }
    }
}

impl FromStr for ThetaMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "0" | "fixed0" => Ok(ThetaMode::Fixed(StateOfNature::Zero)),
            "1" | "fixed1" => Ok(ThetaMode::Fixed(StateOfNature::One)),
            "prior" => Ok(ThetaMode::Prior(0.5)),
            other => {
                let p = other
                    .strip_prefix("prior:")
                    .and_then(|p| p.parse::<f64>().ok())
                    .ok_or_else(|| {
                        format!("unknown theta mode `{other}` (expected 0, 1, prior or prior:<p>)")
                    })?;
                if p.is_finite() && (0.0..=1.0).contains(&p) {
                    Ok(ThetaMode::Prior(p))
                } else {
                    Err(format!("prior {p} is outside [0, 1]"))
                }
            }
        }
    }
}

/// Everything a Monte Carlo run depends on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub protocol: ProtocolKind,
    pub params: SignalParams,
    /// Common prior `P[θ = 1]` the herding agents reason with.
    pub prior: f64,
    pub theta_mode: ThetaMode,
    pub n: u128,
    pub trials: u64,
    pub seed: u64,
    pub probes: Vec<u128>,
}

/// Powers of two up to `n`, plus `n` itself.
pub fn default_probes(n: u128) -> Vec<u128> {
    let mut probes: Vec<u128> = (0..128)
        .map(|k| 1u128 << k)
        .take_while(|&p| p <= n)
        .collect();
    if probes.last() != Some(&n) && n > 0 {
        probes.push(n);
    }
    probes
}

/// Per-probe correctness and reveal estimates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateSeries {
    pub protocol: ProtocolKind,
    pub theta_mode: ThetaMode,
    pub indices: Vec<u128>,
    pub correct: Vec<u64>,
    pub reveals: Vec<u64>,
    pub p_hat: Vec<f64>,
    pub reveal_hat: Vec<f64>,
    pub ci_low: Vec<f64>,
    pub ci_high: Vec<f64>,
    /// Half-width of the 95% Wilson interval around `p_hat`.
    pub ci_half_width: Vec<f64>,
    pub trials: u64,
    pub seed: u64,
}

pub const CONFIDENCE: f64 = 0.95;
/// Agents beyond this cannot be simulated (stream slots run out).
pub const MAX_SIMULATED_INDEX: u128 = 1 << 60;
const BATCH: u64 = 1024;

/// Wilson score interval for `successes` out of `trials` at `confidence`.
pub fn wilson_interval(successes: u64, trials: u64, confidence: f64) -> (f64, f64) {
    assert!(
        trials >= 1 && successes <= trials,
        "need 0 <= successes <= trials, trials >= 1"
    );
    let z = Normal::new(0.0, 1.0)
        .expect("standard normal")
        .inverse_cdf(1.0 - (1.0 - confidence) / 2.0);
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    let low = if successes == 0 {
        0.0
    } else {
        (center - half).max(0.0)
    };
    let high = if successes == trials {
        1.0
    } else {
        (center + half).min(1.0)
    };
    (low, high)
}

#[derive(Clone, Debug, Default)]
struct Tally {
    correct: Vec<u64>,
    reveals: Vec<u64>,
}

impl Tally {
    fn new(len: usize) -> Self {
        Tally {
            correct: vec![0; len],
            reveals: vec![0; len],
        }
    }

    fn record(&mut self, slot: usize, step: Step, theta: StateOfNature) {
        self.correct[slot] += u64::from(step.action == theta.bit());
        self.reveals[slot] += u64::from(step.revealed);
    }

    fn merge(mut self, other: Tally) -> Tally {
        for (a, b) in self.correct.iter_mut().zip(other.correct) {
            *a += b;
        }
        for (a, b) in self.reveals.iter_mut().zip(other.reveals) {
            *a += b;
        }
        self
    }
}

/// Plays one tree-protocol trial at the probe indices only.
///
/// Only the revealing agents of levels below the deepest probe and the
/// probes themselves are evaluated; the returned transcript is the whole
/// per-trial state (one entry per level).
pub fn tree_probe_trial(
    params: &SignalParams,
    theta: StateOfNature,
    probes: &[u128],
    rng: &mut SeededRng,
) -> Result<(Vec<Step>, RevealTranscript)> {
    let q_bar = params.derived().q_bar;
    let deepest = probes.iter().copied().max().ok_or(Error::ZeroIndex)?;
    let top = level_of(deepest)?.level;
    let mut transcript = RevealTranscript::new();
    for level in 1..top {
        let t = crate::tree::reveal_index(level, &transcript)?;
        transcript.push(rng.signal(params, theta, t));
    }
    let steps = probes
        .iter()
        .map(|&i| act(i, &transcript, rng.signal(params, theta, i), q_bar))
        .collect::<Result<Vec<_>>>()?;
    Ok((steps, transcript))
}

/// Plays agents in order up to the deepest probe, recording probe steps.
/// Stops early once the protocol's public state freezes.
fn sequential_trial<P: Protocol>(
    protocol: &P,
    params: &SignalParams,
    theta: StateOfNature,
    probes: &[u128],
    rng: &mut SeededRng,
    tally: &mut Tally,
) {
    let deepest = *probes.last().expect("probes are non-empty");
    let mut state = protocol.start();
    let mut next = 0;
    let mut agent = 1u128;
    while agent <= deepest {
        if let Some(action) = protocol.frozen_action(&state) {
            let frozen = Step {
                action,
                revealed: false,
            };
            for slot in next..probes.len() {
                tally.record(slot, frozen, theta);
            }
            return;
        }
        let signal = rng.signal(params, theta, agent);
        let step = protocol.step(&mut state, agent, signal, rng);
        if probes[next] == agent {
            tally.record(next, step, theta);
            next += 1;
        }
        agent += 1;
    }
}

fn validate(config: &TrialConfig) -> Result<Vec<u128>> {
    if config.trials == 0 {
        return Err(Error::NoTrials);
    }
    check_probability("prior", config.prior)?;
    if let ThetaMode::Prior(p) = config.theta_mode {
        check_probability("prior", p)?;
    }
    if config.n == 0 {
        return Err(Error::ZeroIndex);
    }
    let mut probes = if config.probes.is_empty() {
        default_probes(config.n)
    } else {
        config.probes.clone()
    };
    probes.sort_unstable();
    probes.dedup();
    for &index in &probes {
        if index == 0 || index > config.n {
            return Err(Error::ProbeOutOfRange { index, n: config.n });
        }
        if index > MAX_SIMULATED_INDEX {
            return Err(Error::SimulationLimit(index));
        }
    }
    Ok(probes)
}

fn run_batches<F>(trials: u64, probes: usize, trial: F) -> Tally
where
    F: Fn(u64, &mut Tally) + Sync,
{
    let batches = trials.div_ceil(BATCH);
    (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut tally = Tally::new(probes);
            for t in b * BATCH..((b + 1) * BATCH).min(trials) {
                trial(t, &mut tally);
            }
            tally
        })
        .reduce(|| Tally::new(probes), Tally::merge)
}

/// Runs `config.trials` independent trials on `workers` threads (0 = all cores).
pub fn run_trials(config: &TrialConfig, workers: usize) -> Result<EstimateSeries> {
    let probes = validate(config)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::WorkerPool(e.to_string()))?;
    let params = config.params;
    let mode = config.theta_mode;
    let seed = config.seed;
    let tally = pool.install(|| match config.protocol {
        ProtocolKind::TreeDeterministic => {
            Ok(run_batches(config.trials, probes.len(), |t, tally| {
                let mut rng = SeededRng::new(seed, t);
                let theta = mode.draw(&mut rng);
                let (steps, _) =
                    tree_probe_trial(&params, theta, &probes, &mut rng).expect("probes validated");
                for (slot, step) in steps.into_iter().enumerate() {
                    tally.record(slot, step, theta);
                }
            }))
        }
        ProtocolKind::RandomizedReveal => {
            let protocol = RandomizedProtocol::new(&params);
            Ok(run_batches(config.trials, probes.len(), |t, tally| {
                let mut rng = SeededRng::new(seed, t);
                let theta = mode.draw(&mut rng);
                sequential_trial(&protocol, &params, theta, &probes, &mut rng, tally);
            }))
        }
        ProtocolKind::RationalHerding => {
            let protocol = HerdingProtocol::new(&params, config.prior)?;
            Ok(run_batches(config.trials, probes.len(), |t, tally| {
                let mut rng = SeededRng::new(seed, t);
                let theta = mode.draw(&mut rng);
                sequential_trial(&protocol, &params, theta, &probes, &mut rng, tally);
            }))
        }
    })?;
    Ok(summarize(config, probes, tally))
}

fn summarize(config: &TrialConfig, indices: Vec<u128>, tally: Tally) -> EstimateSeries {
    let trials = config.trials;
    let n = trials as f64;
    let intervals: Vec<(f64, f64)> = tally
        .correct
        .iter()
        .map(|&c| wilson_interval(c, trials, CONFIDENCE))
        .collect();
    EstimateSeries {
        protocol: config.protocol,
        theta_mode: config.theta_mode,
        indices,
        p_hat: tally.correct.iter().map(|&c| c as f64 / n).collect(),
        reveal_hat: tally.reveals.iter().map(|&r| r as f64 / n).collect(),
        ci_low: intervals.iter().map(|i| i.0).collect(),
        ci_high: intervals.iter().map(|i| i.1).collect(),
        ci_half_width: intervals.iter().map(|i| (i.1 - i.0) / 2.0).collect(),
        correct: tally.correct,
        reveals: tally.reveals,
        trials,
        seed: config.seed,
    }
}
