//! The contract shared by every strategy family: agents act one at a time,
//! each seeing the full action history plus her own signal.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{SeededRng, SignalParams, StateOfNature};

/// Which strategy family governs the agents.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ProtocolKind {
    #[value(name = "tree")]
    #[serde(rename = "tree")]
    TreeDeterministic,
    #[value(name = "randomized")]
    #[serde(rename = "randomized")]
    RandomizedReveal,
    #[value(name = "herding")]
    #[serde(rename = "herding")]
    RationalHerding,
}

impl ProtocolKind {
    pub const ALL: [ProtocolKind; 3] = [
        ProtocolKind::TreeDeterministic,
        ProtocolKind::RandomizedReveal,
        ProtocolKind::RationalHerding,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProtocolKind::TreeDeterministic => "tree",
            ProtocolKind::RandomizedReveal => "randomized",
            ProtocolKind::RationalHerding => "herding",
        }
    }

    /// Whether actions are a function of the signals alone.
    pub fn is_deterministic(self) -> bool {
        !matches!(self, ProtocolKind::RandomizedReveal)
    }
}

impl fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProtocolKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        ProtocolKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown protocol `{s}` (expected tree, randomized or herding)"))
    }
}

/// What one agent did.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Step {
    pub action: u8,
    /// The action is the agent's private signal and successors know it.
    pub revealed: bool,
}

/// A strategy profile run agent by agent.
///
/// `State` is the public information successors need; it must be derivable
/// from the action history alone.
pub trait Protocol: Sync {
    type State: Clone + Send;

    fn kind(&self) -> ProtocolKind;

    fn start(&self) -> Self::State;

    /// Agent `agent` (1-based) acts on `signal`. Randomized protocols may read
    /// the agent's coin from `rng`; deterministic ones ignore it.
    fn step(&self, state: &mut Self::State, agent: u128, signal: u8, rng: &mut SeededRng) -> Step;

    /// The action every later agent will take regardless of her signal, if
    /// the public state has frozen. Lets the engine stop a trial early.
    fn frozen_action(&self, _state: &Self::State) -> Option<u8> {
        None
    }
}

/// A protocol whose actions depend on the signals only.
pub trait DeterministicProtocol: Protocol {
    fn decide(&self, state: &mut Self::State, agent: u128, signal: u8) -> Step;
}

/// One full realization of the first `n` agents.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trace {
    pub theta: StateOfNature,
    pub signals: Vec<u8>,
    pub actions: Vec<u8>,
    pub revealed: Vec<bool>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    /// Indices (1-based) of agents whose actions revealed their signals.
    pub fn revealing_agents(&self) -> Vec<u128> {
        self.revealed
            .iter()
            .enumerate()
            .filter(|(_, &r)| r)
            .map(|(i, _)| i as u128 + 1)
            .collect()
    }
}

/// Largest `n` a full trace may be materialized for.
pub const MAX_TRACE_LEN: u128 = 1 << 32;

/// Runs `protocol` for agents `1..=n`, drawing every signal from `rng`.
pub fn run_protocol<P: Protocol>(
    protocol: &P,
    params: &SignalParams,
    theta: StateOfNature,
    n: u128,
    rng: &mut SeededRng,
) -> Result<Trace> {
    if n == 0 {
        return Err(Error::ZeroIndex);
    }
    if n > MAX_TRACE_LEN {
        return Err(Error::SimulationLimit(n));
    }
    let len = n as usize;
    let mut trace = Trace {
        theta,
        signals: Vec::with_capacity(len),
        actions: Vec::with_capacity(len),
        revealed: Vec::with_capacity(len),
    };
    let mut state = protocol.start();
    for agent in 1..=n {
        let signal = rng.signal(params, theta, agent);
        let step = protocol.step(&mut state, agent, signal, rng);
        trace.signals.push(signal);
        trace.actions.push(step.action);
        trace.revealed.push(step.revealed);
    }
    Ok(trace)
}

pub(crate) fn check_bit(bit: u8) -> Result<u8> {
    if bit <= 1 {
        Ok(bit)
    } else {
        Err(Error::NotBinary(bit))
    }
}

pub(crate) fn check_probability(name: &'static str, value: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(Error::InvalidProbability { name, value })
    }
}
