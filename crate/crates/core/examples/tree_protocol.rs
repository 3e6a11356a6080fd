//! Play the tree protocol for 31 agents and print who revealed what.
//!
//! cargo run --example tree_protocol

use herdsim::tree::{act, level_of, run_trace, RevealTranscript};
use herdsim::{SeededRng, SignalParams, StateOfNature};

fn main() -> herdsim::Result<()> {
    let params = SignalParams::new(0.3, 0.7)?;
    let mut rng = SeededRng::new(42, 0);
    let trace = run_trace(&params, StateOfNature::One, 31, &mut rng)?;

    println!("agent level signal action");
    for i in 0..trace.len() {
        let index = i as u128 + 1;
        let mark = if trace.revealed[i] {
            "  <- reveals"
        } else {
            ""
        };
        println!(
            "{index:>5} {:>5} {:>6} {:>6}{mark}",
            level_of(index)?.level,
            trace.signals[i],
            trace.actions[i]
        );
    }
    println!("revealing agents: {:?}", trace.revealing_agents());

    // The same decision, one agent at a time: agent 12 sees the transcript
    // of levels 1..3 and her own signal.
    let transcript = RevealTranscript::from_actions(vec![1, 0, 1])?;
    let q_bar = params.derived().q_bar;
    for signal in [0, 1] {
        let step = act(12, &transcript, signal, q_bar)?;
        println!(
            "agent 12, signal {signal}: action {} revealed {}",
            step.action, step.revealed
        );
    }
    Ok(())
}
