//! The deterministic tree-reveal protocol.
//!
//! Agents are laid out level by level on a complete binary tree: level `k`
//! holds indices `2^{k-1} ..= 2^k - 1`. Exactly one agent per level, `t_k`,
//! plays her signal. The signals revealed at levels `1..k` spell out, least
//! significant bit first, the offset of `t_k` inside level `k`:
//!
//! ```text
//! t_k = Σ_{j=1}^{k-1} a_{t_j} · 2^{j-1} + 2^{k-1}
//! ```
//!
//! Everyone else at level `k` votes with the threshold rule over the `k-1`
//! revealed signals plus her own.

use crate::error::{Error, Result};
use crate::protocol::{
    check_bit, run_protocol, DeterministicProtocol, Protocol, ProtocolKind, Step, Trace,
};
use crate::signal::{SeededRng, SignalParams, StateOfNature};

/// Largest level representable with `u128` agent indices.
pub const MAX_LEVEL: u32 = 128;

/// An agent index split into its tree level and the offset within it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AgentIndex {
    pub index: u128,
    /// `k` with `2^{k-1} <= index < 2^k`.
    pub level: u32,
    /// `index - 2^{k-1}`.
    pub offset: u128,
}

impl AgentIndex {
    /// First index of the level.
    pub fn level_start(&self) -> u128 {
        1u128 << (self.level - 1)
    }
}

pub fn level_of(index: u128) -> Result<AgentIndex> {
    if index == 0 {
        return Err(Error::ZeroIndex);
    }
    let level = u128::BITS - index.leading_zeros();
    Ok(AgentIndex {
        index,
        level,
        offset: index - (1u128 << (level - 1)),
    })
}

/// The actions of the revealing agents, in order: entry `j` (0-based) is the
/// signal revealed at level `j + 1`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct RevealTranscript {
    actions: Vec<u8>,
}

impl RevealTranscript {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_actions(actions: Vec<u8>) -> Result<Self> {
        for &a in &actions {
            check_bit(a)?;
        }
        Ok(RevealTranscript { actions })
    }

    pub fn push(&mut self, action: u8) {
        debug_assert!(action <= 1);
        self.actions.push(action);
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn actions(&self) -> &[u8] {
        &self.actions
    }

    /// Number of 1s among the first `len` entries.
    pub fn ones_in_prefix(&self, len: usize) -> usize {
        self.actions[..len].iter().filter(|&&a| a == 1).count()
    }

    fn require(&self, level: u32) -> Result<()> {
        let need = (level - 1) as usize;
        if self.actions.len() < need {
            Err(Error::TranscriptTooShort {
                level,
                have: self.actions.len(),
                need,
            })
        } else {
            Ok(())
        }
    }

    /// Reads the transcript back out of a full action history: agent 1 is
    /// always revealing, and each revealed action points to the next revealer.
    pub fn from_history(history: &[u8]) -> Result<Self> {
        let mut transcript = RevealTranscript::new();
        let mut level = 1u32;
        loop {
            let t = reveal_index(level, &transcript)?;
            if t > history.len() as u128 {
                return Ok(transcript);
            }
            transcript.push(check_bit(history[(t - 1) as usize])?);
            level += 1;
        }
    }
}

/// `t_k`, the revealing agent of level `level`. Reads only the first `level - 1` entries.
pub fn reveal_index(level: u32, transcript: &RevealTranscript) -> Result<u128> {
    if level == 0 {
        return Err(Error::ZeroIndex);
    }
    assert!(
        level <= MAX_LEVEL,
        "level {level} exceeds u128 agent indices"
    );
    transcript.require(level)?;
    let offset = transcript.actions[..(level - 1) as usize]
        .iter()
        .enumerate()
        .fold(0u128, |acc, (j, &bit)| acc | (u128::from(bit) << j));
    Ok(offset + (1u128 << (level - 1)))
}

pub fn is_revealing(index: u128, transcript: &RevealTranscript) -> Result<bool> {
    let at = level_of(index)?;
    Ok(reveal_index(at.level, transcript)? == index)
}

/// The vote `g_k` on counts: 0 iff `ones / total <= q_bar`.
pub fn threshold_vote(ones: usize, total: usize, q_bar: f64) -> u8 {
    debug_assert!(total > 0 && ones <= total);
    u8::from(ones as f64 / total as f64 > q_bar)
}

/// `g_k`: 0 if the empirical mean of `observed` is at most `q_bar`, else 1.
pub fn threshold_rule(observed: &[u8], q_bar: f64) -> Result<u8> {
    if observed.is_empty() {
        return Err(Error::EmptyObservation);
    }
    let mut ones = 0;
    for &bit in observed {
        ones += usize::from(check_bit(bit)?);
    }
    Ok(threshold_vote(ones, observed.len(), q_bar))
}

/// The strategy `f_i`: reveal if `index = t_k`, otherwise vote on the
/// first `k - 1` revealed signals plus the own signal.
pub fn act(index: u128, transcript: &RevealTranscript, own_signal: u8, q_bar: f64) -> Result<Step> {
    check_bit(own_signal)?;
    let at = level_of(index)?;
    let prefix = (at.level - 1) as usize;
    if reveal_index(at.level, transcript)? == index {
        return Ok(Step {
            action: own_signal,
            revealed: true,
        });
    }
    let ones = transcript.ones_in_prefix(prefix) + usize::from(own_signal);
    Ok(Step {
        action: threshold_vote(ones, prefix + 1, q_bar),
        revealed: false,
    })
}

/// The tree protocol as a [`Protocol`]; its public state is the transcript.
#[derive(Clone, Copy, Debug)]
pub struct TreeProtocol {
    q_bar: f64,
}

impl TreeProtocol {
    pub fn new(params: &SignalParams) -> Self {
        TreeProtocol {
            q_bar: params.derived().q_bar,
        }
    }

    pub fn q_bar(&self) -> f64 {
        self.q_bar
    }
}

impl Protocol for TreeProtocol {
    type State = RevealTranscript;

    fn kind(&self) -> ProtocolKind {
        ProtocolKind::TreeDeterministic
    }

    fn start(&self) -> RevealTranscript {
        RevealTranscript::new()
    }

    fn step(
        &self,
        state: &mut RevealTranscript,
        agent: u128,
        signal: u8,
        _rng: &mut SeededRng,
    ) -> Step {
        self.decide(state, agent, signal)
    }
}

impl DeterministicProtocol for TreeProtocol {
    fn decide(&self, state: &mut RevealTranscript, agent: u128, signal: u8) -> Step {
        // Agents run in order, so the transcript always covers earlier levels.
        let step = act(agent, state, signal, self.q_bar).expect("agents act in index order");
        if step.revealed {
            state.push(step.action);
        }
        step
    }
}

/// Draws `n` signals from `D_θ` and plays the tree protocol on them.
pub fn run_trace(
    params: &SignalParams,
    theta: StateOfNature,
    n: u128,
    rng: &mut SeededRng,
) -> Result<Trace> {
    run_protocol(&TreeProtocol::new(params), params, theta, n, rng)
}
