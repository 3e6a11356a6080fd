//! Seeded, parallel Monte Carlo estimate of p_n for the tree protocol,
//! compared with the exact value.
//!
//! cargo run --release --example monte_carlo

use herdsim::exact::tree_correct_prob;
use herdsim::montecarlo::{default_probes, run_trials, ThetaMode, TrialConfig};
use herdsim::report::{estimate_rows, write_rows, OutputFormat};
use herdsim::{ProtocolKind, SignalParams, StateOfNature};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = SignalParams::new(0.4, 0.6)?;
    let config = TrialConfig {
        protocol: ProtocolKind::TreeDeterministic,
        params,
        prior: 0.5,
        theta_mode: ThetaMode::Fixed(StateOfNature::Zero),
        n: 1 << 14,
        trials: 50_000,
        seed: 2024,
        probes: default_probes(1 << 14),
    };
    // 0 workers = every core; the numbers do not depend on it.
    let series = run_trials(&config, 0)?;

    for (i, &n) in series.indices.iter().enumerate() {
        let exact = tree_correct_prob(n, &params, StateOfNature::Zero)?;
        println!(
            "n={n:>6} p_hat={:.4} ±{:.4} exact={exact:.4}",
            series.p_hat[i], series.ci_half_width[i]
        );
    }

    println!();
    write_rows(
        &estimate_rows(&series, &params),
        OutputFormat::Csv,
        std::io::stdout().lock(),
    )?;
    Ok(())
}
