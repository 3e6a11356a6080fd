//! Rational agents herd: their accuracy stalls below 1, while the tree
//! protocol keeps improving.
//!
//! cargo run --example herding_contrast

use herdsim::exact::{tree_correct_prob, HerdingChain};
use herdsim::{SignalParams, StateOfNature};

fn main() -> herdsim::Result<()> {
    let params = SignalParams::new(0.25, 0.75)?;
    let theta = StateOfNature::One;
    let chain = HerdingChain::new(&params, 0.5, theta)?;

    println!("herding limit {:.6}", chain.limit_correct());
    println!("{:>8} {:>10} {:>10}", "n", "herding", "tree");
    for k in [0, 1, 2, 4, 8, 16, 32, 64, 100] {
        let n = 1u128 << k;
        println!(
            "{:>8} {:>10.6} {:>10.6}",
            format!("2^{k}"),
            chain.at(n)?.p_correct,
            tree_correct_prob(n, &params, theta)?
        );
    }
    Ok(())
}
