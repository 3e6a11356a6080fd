//! Check the finite-n bounds for the tree protocol out to n = 2^120.
//!
//! cargo run --example verify_bounds

use herdsim::bounds::{
    chernoff_check, liminf_threshold, verify, VerifyConfig, VerifyMode, VerifySummary,
};
use herdsim::{ProtocolKind, SignalParams};

fn main() -> herdsim::Result<()> {
    let params = SignalParams::new(0.3, 0.7)?;
    let eps = params.derived().epsilon_star;

    let config = VerifyConfig::new(
        ProtocolKind::TreeDeterministic,
        params,
        1 << 120,
        VerifyMode::Exact,
    );
    let reports = verify(&config, 0)?;
    let summary = VerifySummary::new(&reports);
    println!(
        "{} checks, {} non-vacuous, {} violations",
        summary.total,
        summary.non_vacuous,
        summary.violations.len()
    );
    if let Some(first) = reports.iter().find(|r| !r.vacuous) {
        println!(
            "first non-vacuous check: n={} {:?} value={:.6} reveal bound={:.6}",
            first.n, first.check, first.value, first.reveal_bound
        );
    }

    for k in [10, 40, 120] {
        let c = chernoff_check(k, eps);
        println!(
            "k={k}: exp(-2kε²)={:.3e} <= (2^k-1)^(-ε²)={:.3e}: {}",
            c.bound, c.polynomial, c.holds
        );
    }
    for delta in [0.5, 0.1, 0.01] {
        println!(
            "p_n >= 1 - {delta} once n >= {:.3e}",
            liminf_threshold(delta, eps)
        );
    }
    Ok(())
}
