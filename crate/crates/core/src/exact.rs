//! Exact probabilities: closed forms for the tree protocol, brute-force
//! enumeration of signal vectors for any deterministic protocol, and a
//! forward chain over public beliefs for rational herding.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::baseline::{belief_update, BeliefState, HerdingProtocol};
use crate::error::{Error, Result};
use crate::protocol::{DeterministicProtocol, ProtocolKind};
use crate::signal::{SignalParams, StateOfNature};
use crate::tree::{level_of, threshold_vote, TreeProtocol};

/// Default limit on `n` for [`full_enumeration`].
pub const DEFAULT_ENUMERATION_CAP: u32 = 20;
/// Hard limit regardless of the configured cap.
pub const MAX_ENUMERATION_CAP: u32 = 30;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExactMethod {
    TreeClosedForm,
    FullEnumeration,
    CascadeChain,
}

impl ExactMethod {
    pub fn name(self) -> &'static str {
        match self {
            ExactMethod::TreeClosedForm => "tree-closed-form",
            ExactMethod::FullEnumeration => "full-enumeration",
            ExactMethod::CascadeChain => "cascade-chain",
        }
    }
}

/// Exact correctness and reveal probability of one agent, conditional on θ.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExactResult {
    pub n: u128,
    pub theta: StateOfNature,
    pub p_reveal: f64,
    pub p_correct: f64,
    pub method: ExactMethod,
}

/// Probability that agent `n` is the revealing agent of her level: the
/// revealed signals of levels `1..k` must spell her offset, LSB first.
pub fn tree_reveal_prob(n: u128, params: &SignalParams, theta: StateOfNature) -> Result<f64> {
    let at = level_of(n)?;
    Ok((0..at.level - 1)
        .map(|j| params.prob_of(((at.offset >> j) & 1) as u8, theta))
        .product())
}

/// `C(n, m) q^m (1-q)^(n-m)` for `m = 0..=n`.
pub(crate) fn binomial_pmf(n: u32, q: f64) -> Vec<f64> {
    let mut pmf = Vec::with_capacity(n as usize + 1);
    let mut coeff = 1.0f64;
    for m in 0..=n {
        pmf.push(coeff * q.powi(m as i32) * (1.0 - q).powi((n - m) as i32));
        coeff = coeff * f64::from(n - m) / f64::from(m + 1);
    }
    pmf
}

/// Probability that a non-revealing agent at level `level` is correct when
/// the revealed prefix holds `ones` 1s: her own signal is still random.
fn vote_correct_given_prefix(
    ones: usize,
    level: u32,
    params: &SignalParams,
    q_bar: f64,
    theta: StateOfNature,
) -> f64 {
    let total = level as usize;
    [0u8, 1]
        .iter()
        .filter(|&&s| threshold_vote(ones + usize::from(s), total, q_bar) == theta.bit())
        .map(|&s| params.prob_of(s, theta))
        .sum()
}

/// Exact `P[a_n = θ | θ]` under the tree protocol.
///
/// The revealed prefix of level `k` is `k-1` i.i.d. signals. A non-revealing
/// agent's vote depends on it only through its popcount, so the sum over all
/// prefixes collapses to a binomial sum. The single prefix that makes agent
/// `n` the revealer is swapped out for the probability her signal matches θ.
pub fn tree_correct_prob(n: u128, params: &SignalParams, theta: StateOfNature) -> Result<f64> {
    let at = level_of(n)?;
    let q_bar = params.derived().q_bar;
    let prefix_len = at.level - 1;
    let voting: f64 = binomial_pmf(prefix_len, params.q(theta))
        .iter()
        .enumerate()
        .map(|(ones, w)| w * vote_correct_given_prefix(ones, at.level, params, q_bar, theta))
        .sum();
    let own_prefix = tree_reveal_prob(n, params, theta)?;
    let own_ones = at.offset.count_ones() as usize;
    let own_vote = vote_correct_given_prefix(own_ones, at.level, params, q_bar, theta);
    let revealing = params.prob_of(theta.bit(), theta);
    Ok(voting - own_prefix * own_vote + own_prefix * revealing)
}

pub fn tree_exact(n: u128, params: &SignalParams, theta: StateOfNature) -> Result<ExactResult> {
    Ok(ExactResult {
        n,
        theta,
        p_reveal: tree_reveal_prob(n, params, theta)?,
        p_correct: tree_correct_prob(n, params, theta)?,
        method: ExactMethod::TreeClosedForm,
    })
}

/// Exact misclassification probability of the threshold vote over `k`
/// i.i.d. signals from `D_θ`: a binomial tail.
pub fn vote_error_prob(k: u32, params: &SignalParams, theta: StateOfNature) -> f64 {
    let q_bar = params.derived().q_bar;
    binomial_pmf(k, params.q(theta))
        .iter()
        .enumerate()
        .filter(|(ones, _)| threshold_vote(*ones, k as usize, q_bar) != theta.bit())
        .map(|(_, w)| w)
        .sum()
}

/// Enumerates all `2^n` signal vectors, replays `protocol` on each and
/// accumulates exact per-agent reveal and correctness probabilities.
pub fn full_enumeration<P: DeterministicProtocol>(
    protocol: &P,
    params: &SignalParams,
    theta: StateOfNature,
    n: u32,
    cap: u32,
) -> Result<Vec<ExactResult>> {
    let cap = cap.min(MAX_ENUMERATION_CAP);
    if n > cap {
        return Err(Error::EnumerationCap {
            n: u128::from(n),
            cap,
        });
    }
    if n == 0 {
        return Err(Error::ZeroIndex);
    }
    let mut acc = Accumulator {
        correct: vec![0.0; n as usize],
        reveal: vec![0.0; n as usize],
    };
    descend(
        protocol,
        params,
        theta,
        n,
        1,
        protocol.start(),
        1.0,
        &mut acc,
    );
    Ok((0..n as usize)
        .map(|i| ExactResult {
            n: i as u128 + 1,
            theta,
            p_reveal: acc.reveal[i],
            p_correct: acc.correct[i],
            method: ExactMethod::FullEnumeration,
        })
        .collect())
}

struct Accumulator {
    correct: Vec<f64>,
    reveal: Vec<f64>,
}

#[allow(clippy::too_many_arguments)]
fn descend<P: DeterministicProtocol>(
    protocol: &P,
    params: &SignalParams,
    theta: StateOfNature,
    n: u32,
    agent: u32,
    state: P::State,
    weight: f64,
    acc: &mut Accumulator,
) {
    for signal in [0u8, 1] {
        let w = weight * params.prob_of(signal, theta);
        let mut next = state.clone();
        let step = protocol.decide(&mut next, u128::from(agent), signal);
        let slot = (agent - 1) as usize;
        if step.action == theta.bit() {
            acc.correct[slot] += w;
        }
        if step.revealed {
            acc.reveal[slot] += w;
        }
        if agent < n {
            descend(protocol, params, theta, n, agent + 1, next, w, acc);
        }
    }
}

/// Full enumeration for a protocol chosen by kind.
pub fn full_enumeration_kind(
    kind: ProtocolKind,
    params: &SignalParams,
    prior: f64,
    theta: StateOfNature,
    n: u32,
    cap: u32,
) -> Result<Vec<ExactResult>> {
    match kind {
        ProtocolKind::TreeDeterministic => {
            full_enumeration(&TreeProtocol::new(params), params, theta, n, cap)
        }
        ProtocolKind::RationalHerding => {
            full_enumeration(&HerdingProtocol::new(params, prior)?, params, theta, n, cap)
        }
        ProtocolKind::RandomizedReveal => Err(Error::NoExactOracle("randomized")),
    }
}

/// `(1 − prior)·p0 + prior·p1`, the unconditional probability under `P[θ=1] = prior`.
pub fn prior_weighted(p0: f64, p1: f64, prior: f64) -> f64 {
    (1.0 - prior) * p0 + prior * p1
}

/// Mass left outside a cascade below which the herding chain stops.
pub const CHAIN_RESIDUAL: f64 = 1e-18;
const CHAIN_MAX_STEPS: usize = 1_000_000;

/// Exact per-agent probabilities for rational herding, computed by pushing
/// probability mass forward over public beliefs.
///
/// Outside a cascade every action reveals a signal, so the public belief is
/// fixed by the counts of revealed 1s and 0s. Once both signals lead to the
/// same action the belief never moves again and the mass is absorbed. After
/// the non-absorbed mass falls below [`CHAIN_RESIDUAL`] every later agent
/// shares the final values.
#[derive(Clone, Debug)]
pub struct HerdingChain {
    theta: StateOfNature,
    p_correct: Vec<f64>,
    p_reveal: Vec<f64>,
    limit_correct: f64,
    residual: f64,
}

impl HerdingChain {
    pub fn new(params: &SignalParams, prior: f64, theta: StateOfNature) -> Result<Self> {
        let herding = HerdingProtocol::new(params, prior)?;
        let q = params.q(theta);
        let matching = params.prob_of(theta.bit(), theta);
        // (revealed ones, revealed zeros) -> mass
        let mut open: BTreeMap<(u32, u32), f64> = BTreeMap::new();
        open.insert((0, 0), 1.0);
        let mut absorbed = [0.0f64; 2];
        let mut p_correct = Vec::new();
        let mut p_reveal = Vec::new();
        let mut residual = 1.0;
        while residual >= CHAIN_RESIDUAL && p_correct.len() < CHAIN_MAX_STEPS {
            open.retain(|&(ones, zeros), mass| {
                let belief = belief_of(ones, zeros, params);
                match herding.cascade_action(&belief) {
                    Some(a) => {
                        absorbed[a as usize] += *mass;
                        false
                    }
                    None => true,
                }
            });
            residual = open.values().sum();
            p_correct.push(absorbed[theta.bit() as usize] + residual * matching);
            p_reveal.push(residual);
            let mut next = BTreeMap::new();
            for (&(ones, zeros), &mass) in &open {
                *next.entry((ones + 1, zeros)).or_insert(0.0) += mass * q;
                *next.entry((ones, zeros + 1)).or_insert(0.0) += mass * (1.0 - q);
            }
            open = next;
        }
        let limit_correct = *p_correct.last().expect("chain runs at least one step");
        Ok(HerdingChain {
            theta,
            p_correct,
            p_reveal,
            limit_correct,
            residual,
        })
    }

    /// Agents covered explicitly; later agents share the last values.
    pub fn horizon(&self) -> usize {
        self.p_correct.len()
    }

    /// Non-absorbed mass at the horizon.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn limit_correct(&self) -> f64 {
        self.limit_correct
    }

    pub fn at(&self, n: u128) -> Result<ExactResult> {
        if n == 0 {
            return Err(Error::ZeroIndex);
        }
        if n > self.p_correct.len() as u128 && self.residual >= CHAIN_RESIDUAL {
            return Err(Error::ChainNotConverged {
                steps: self.p_correct.len(),
            });
        }
        let i = usize::try_from(n - 1)
            .unwrap_or(usize::MAX)
            .min(self.p_correct.len() - 1);
        Ok(ExactResult {
            n,
            theta: self.theta,
            p_reveal: if (n as usize) <= self.p_reveal.len() {
                self.p_reveal[i]
            } else {
                0.0
            },
            p_correct: self.p_correct[i],
            method: ExactMethod::CascadeChain,
        })
    }
}

fn belief_of(ones: u32, zeros: u32, params: &SignalParams) -> BeliefState {
    // Fold order differs from a trace's; ties are detected with a tolerance.
    let mut belief = BeliefState::default();
    for _ in 0..ones {
        belief = belief_update(belief, 1, params);
    }
    for _ in 0..zeros {
        belief = belief_update(belief, 0, params);
    }
    belief
}
