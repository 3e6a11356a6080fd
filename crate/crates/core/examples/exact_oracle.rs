//! Exact correctness and reveal probabilities: the closed form for the tree
//! protocol, checked against brute force, and far-out indices.
//!
//! cargo run --example exact_oracle

use herdsim::exact::{full_enumeration_kind, tree_exact, vote_error_prob, DEFAULT_ENUMERATION_CAP};
use herdsim::{ProtocolKind, SignalParams, StateOfNature};

fn main() -> herdsim::Result<()> {
    let params = SignalParams::new(0.4, 0.6)?;
    let theta = StateOfNature::One;

    let brute = full_enumeration_kind(
        ProtocolKind::TreeDeterministic,
        &params,
        0.5,
        theta,
        12,
        DEFAULT_ENUMERATION_CAP,
    )?;
    let mut worst: f64 = 0.0;
    for row in &brute {
        let closed = tree_exact(row.n, &params, theta)?;
        worst = worst.max((closed.p_correct - row.p_correct).abs());
    }
    println!("closed form vs enumeration, n <= 12: max diff {worst:.1e}");

    println!("{:>6} {:>12} {:>12}", "n", "p_correct", "p_reveal");
    for k in [4, 8, 16, 32, 64, 100, 127] {
        let r = tree_exact(1u128 << k, &params, theta)?;
        println!(
            "{:>6} {:>12.6} {:>12.3e}",
            format!("2^{k}"),
            r.p_correct,
            r.p_reveal
        );
    }

    println!(
        "level vote error at k = 10, 50, 100: {:.4e} {:.4e} {:.4e}",
        vote_error_prob(10, &params, theta),
        vote_error_prob(50, &params, theta),
        vote_error_prob(100, &params, theta)
    );
    Ok(())
}
