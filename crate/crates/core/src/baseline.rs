//! Contrast protocols: the randomized `1/i` reveal scheme and rational
//! Bayesian herding.

use crate::error::{Error, Result};
use crate::protocol::{
    check_bit, check_probability, DeterministicProtocol, Protocol, ProtocolKind, Step,
};
use crate::signal::{SeededRng, SignalParams};
use crate::tree::threshold_vote;

/// Agent `i` reveals when `reveal_coin < 1/i`; otherwise she votes on the
/// publicly revealed signals plus her own.
pub fn randomized_act(
    index: u128,
    revealed_so_far: &[u8],
    own_signal: u8,
    reveal_coin: f64,
    q_bar: f64,
) -> Result<Step> {
    let mut ones = 0;
    for &bit in revealed_so_far {
        ones += usize::from(check_bit(bit)?);
    }
    randomized_step(
        index,
        ones,
        revealed_so_far.len(),
        check_bit(own_signal)?,
        reveal_coin,
        q_bar,
    )
}

fn randomized_step(
    index: u128,
    ones: usize,
    count: usize,
    own_signal: u8,
    reveal_coin: f64,
    q_bar: f64,
) -> Result<Step> {
    if index == 0 {
        return Err(Error::ZeroIndex);
    }
    if reveal_coin < 1.0 / index as f64 {
        Ok(Step {
            action: own_signal,
            revealed: true,
        })
    } else {
        Ok(Step {
            action: threshold_vote(ones + usize::from(own_signal), count + 1, q_bar),
            revealed: false,
        })
    }
}

/// Public tally of revealed signals.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RevealTally {
    pub ones: usize,
    pub count: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct RandomizedProtocol {
    q_bar: f64,
}

impl RandomizedProtocol {
    pub fn new(params: &SignalParams) -> Self {
        RandomizedProtocol {
            q_bar: params.derived().q_bar,
        }
    }
}

impl Protocol for RandomizedProtocol {
    type State = RevealTally;

    fn kind(&self) -> ProtocolKind {
        ProtocolKind::RandomizedReveal
    }

    fn start(&self) -> RevealTally {
        RevealTally::default()
    }

    fn step(&self, state: &mut RevealTally, agent: u128, signal: u8, rng: &mut SeededRng) -> Step {
        let coin = rng.coin_unit(agent);
        let step = randomized_step(agent, state.ones, state.count, signal, coin, self.q_bar)
            .expect("agent indices start at 1");
        if step.revealed {
            state.ones += usize::from(step.action);
            state.count += 1;
        }
        step
    }
}

/// Public belief of the rational-herding baseline.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct BeliefState {
    /// `log P[history | θ=1] − log P[history | θ=0]`.
    pub log_likelihood_ratio: f64,
    /// Actions so far that revealed the acting agent's signal.
    pub informative_count: u32,
}

/// Folds one informative action (equal to the actor's signal) into the belief.
pub fn belief_update(state: BeliefState, observation: u8, params: &SignalParams) -> BeliefState {
    BeliefState {
        log_likelihood_ratio: state.log_likelihood_ratio + signal_llr(observation, params),
        informative_count: state.informative_count + 1,
    }
}

fn signal_llr(signal: u8, params: &SignalParams) -> f64 {
    if signal == 1 {
        (params.q1() / params.q0()).ln()
    } else {
        ((1.0 - params.q1()) / (1.0 - params.q0())).ln()
    }
}

/// Posterior log-odds closer to zero than this count as indifference.
const TIE_TOLERANCE: f64 = 1e-9;

/// Rational agents with a common prior who each maximize the chance of matching θ.
#[derive(Clone, Copy, Debug)]
pub struct HerdingProtocol {
    params: SignalParams,
    prior_log_odds: f64,
    llr_one: f64,
    llr_zero: f64,
}

impl HerdingProtocol {
    /// `prior` is `P[θ = 1]`; it must lie strictly inside `(0, 1)`.
    pub fn new(params: &SignalParams, prior: f64) -> Result<Self> {
        if !(prior > 0.0 && prior < 1.0) {
            return Err(Error::InvalidProbability {
                name: "prior",
                value: prior,
            });
        }
        Ok(HerdingProtocol {
            params: *params,
            prior_log_odds: (prior / (1.0 - prior)).ln(),
            llr_one: signal_llr(1, params),
            llr_zero: signal_llr(0, params),
        })
    }

    pub fn params(&self) -> &SignalParams {
        &self.params
    }

    /// Best action for a given public belief and private signal; ties follow the signal.
    pub fn best_action(&self, belief: &BeliefState, signal: u8) -> u8 {
        let own = if signal == 1 {
            self.llr_one
        } else {
            self.llr_zero
        };
        let log_odds = self.prior_log_odds + belief.log_likelihood_ratio + own;
        if log_odds > TIE_TOLERANCE {
            1
        } else if log_odds < -TIE_TOLERANCE {
            0
        } else {
            signal
        }
    }

    /// `Some(a)` when both signals lead to action `a`: a cascade.
    pub fn cascade_action(&self, belief: &BeliefState) -> Option<u8> {
        let low = self.best_action(belief, 0);
        let high = self.best_action(belief, 1);
        (low == high).then_some(low)
    }
}

impl Protocol for HerdingProtocol {
    type State = BeliefState;

    fn kind(&self) -> ProtocolKind {
        ProtocolKind::RationalHerding
    }

    fn start(&self) -> BeliefState {
        BeliefState::default()
    }

    fn step(&self, state: &mut BeliefState, agent: u128, signal: u8, _rng: &mut SeededRng) -> Step {
        self.decide(state, agent, signal)
    }

    fn frozen_action(&self, state: &BeliefState) -> Option<u8> {
        self.cascade_action(state)
    }
}

impl DeterministicProtocol for HerdingProtocol {
    fn decide(&self, state: &mut BeliefState, _agent: u128, signal: u8) -> Step {
        match self.cascade_action(state) {
            Some(action) => Step {
                action,
                revealed: false,
            },
            None => {
                // Outside a cascade the best action is monotone in the signal,
                // so it equals the signal and successors can invert it.
                let action = self.best_action(state, signal);
                debug_assert_eq!(action, signal);
                *state = belief_update(*state, action, &self.params);
                Step {
                    action,
                    revealed: true,
                }
            }
        }
    }
}

/// The rational action of agent `index` given the actions of agents
/// `1..index`, assuming all of them played rationally.
pub fn rational_act(
    index: u128,
    history: &[u8],
    own_signal: u8,
    params: &SignalParams,
    prior: f64,
) -> Result<u8> {
    check_bit(own_signal)?;
    check_probability("prior", prior)?;
    if index == 0 {
        return Err(Error::ZeroIndex);
    }
    if history.len() as u128 != index - 1 {
        return Err(Error::HistoryLength {
            agent: index,
            have: history.len(),
        });
    }
    let herding = HerdingProtocol::new(params, prior)?;
    let belief = public_belief(&herding, history)?;
    Ok(herding.best_action(&belief, own_signal))
}

/// Replays a history under the rational profile and returns the public belief.
pub fn public_belief(herding: &HerdingProtocol, history: &[u8]) -> Result<BeliefState> {
    let mut belief = BeliefState::default();
    for (position, &action) in history.iter().enumerate() {
        check_bit(action)?;
        match herding.cascade_action(&belief) {
            Some(forced) if forced != action => {
                return Err(Error::InconsistentHistory { position })
            }
            Some(_) => {}
            None => belief = belief_update(belief, action, herding.params()),
        }
    }
    Ok(belief)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::run_protocol;
    use crate::signal::StateOfNature;

    fn sym() -> SignalParams {
        SignalParams::new(0.4, 0.6).unwrap()
    }

    #[test]
    fn randomized_first_agent_always_reveals() {
        for coin in [0.0, 0.3, 0.999_999] {
            let step = randomized_act(1, &[], 0, coin, 0.5).unwrap();
            assert!(step.revealed);
            assert_eq!(step.action, 0);
        }
    }

    #[test]
    fn randomized_without_reveals_votes_own_signal() {
        for s in [0, 1] {
            let step = randomized_act(10, &[], s, 0.9, 0.5).unwrap();
            assert!(!step.revealed);
            assert_eq!(step.action, s);
        }
    }

    #[test]
    fn randomized_aggregates_revealed_signals() {
        let step = randomized_act(4, &[1, 1, 0], 0, 0.5, 0.5).unwrap();
        assert_eq!((step.action, step.revealed), (0, false));
        let step = randomized_act(4, &[1, 1, 1], 0, 0.5, 0.5).unwrap();
        assert_eq!((step.action, step.revealed), (1, false));
        let step = randomized_act(4, &[1, 1, 1], 0, 0.2, 0.5).unwrap();
        assert_eq!((step.action, step.revealed), (0, true));
    }

    #[test]
    fn belief_update_examples() {
        let p = sym();
        let b = belief_update(BeliefState::default(), 1, &p);
        assert!((b.log_likelihood_ratio - 1.5f64.ln()).abs() < 1e-15);
        let b = belief_update(b, 0, &p);
        assert!(b.log_likelihood_ratio.abs() < 1e-12);
        assert_eq!(b.informative_count, 2);
        let mut b = BeliefState::default();
        for _ in 0..7 {
            b = belief_update(b, 1, &p);
        }
        assert!((b.log_likelihood_ratio - 7.0 * 1.5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn first_agent_follows_signal() {
        for s in [0, 1] {
            assert_eq!(rational_act(1, &[], s, &sym(), 0.5).unwrap(), s);
        }
    }

    #[test]
    fn two_agreeing_actions_start_a_cascade() {
        for s in [0, 1] {
            assert_eq!(rational_act(3, &[1, 1], s, &sym(), 0.5).unwrap(), 1);
            assert_eq!(rational_act(3, &[0, 0], s, &sym(), 0.5).unwrap(), 0);
        }
        // Disagreeing pair cancels out and agent 3 is back to her own signal.
        for s in [0, 1] {
            assert_eq!(rational_act(3, &[1, 0], s, &sym(), 0.5).unwrap(), s);
        }
    }

    #[test]
    fn second_agent_indifferent_follows_signal() {
        assert_eq!(rational_act(2, &[1], 0, &sym(), 0.5).unwrap(), 0);
        assert_eq!(rational_act(2, &[0], 1, &sym(), 0.5).unwrap(), 1);
    }

    #[test]
    fn inconsistent_history_rejected() {
        // After 1,1 everyone plays 1.
        assert_eq!(
            rational_act(4, &[1, 1, 0], 1, &sym(), 0.5),
            Err(Error::InconsistentHistory { position: 2 })
        );
        assert!(matches!(
            rational_act(3, &[1], 1, &sym(), 0.5),
            Err(Error::HistoryLength { .. })
        ));
    }

    #[test]
    fn strong_prior_cascades_immediately() {
        let p = SignalParams::new(0.25, 0.75).unwrap();
        for s in [0, 1] {
            assert_eq!(rational_act(1, &[], s, &p, 0.9).unwrap(), 1);
        }
    }

    #[test]
    fn traces_freeze_after_cascade() {
        let p = sym();
        let herding = HerdingProtocol::new(&p, 0.5).unwrap();
        for seed in 0..50 {
            let trace = run_protocol(
                &herding,
                &p,
                StateOfNature::One,
                60,
                &mut SeededRng::new(seed, 0),
            )
            .unwrap();
            if let Some(last) = trace.revealed.iter().rposition(|&r| r) {
                let tail = &trace.actions[last + 1..];
                assert!(tail.windows(2).all(|w| w[0] == w[1]));
            }
            for i in 0..trace.len() {
                if trace.revealed[i] {
                    assert_eq!(trace.actions[i], trace.signals[i]);
                }
            }
        }
    }
}
