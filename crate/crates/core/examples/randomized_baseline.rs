//! The 1/i randomized reveal scheme: reveal rates and accuracy.
//!
//! cargo run --release --example randomized_baseline

use herdsim::montecarlo::{run_trials, ThetaMode, TrialConfig};
use herdsim::{ProtocolKind, SignalParams};

fn main() -> herdsim::Result<()> {
    let params = SignalParams::new(0.4, 0.6)?;
    let config = TrialConfig {
        protocol: ProtocolKind::RandomizedReveal,
        params,
        prior: 0.5,
        theta_mode: ThetaMode::Prior(0.5),
        n: 2000,
        trials: 20_000,
        seed: 1,
        probes: vec![1, 2, 10, 100, 1000, 2000],
    };
    let series = run_trials(&config, 0)?;
    println!("{:>5} {:>10} {:>8} {:>8}", "i", "reveal", "1/i", "p_hat");
    for (j, &i) in series.indices.iter().enumerate() {
        println!(
            "{i:>5} {:>10.5} {:>8.5} {:>8.4}",
            series.reveal_hat[j],
            1.0 / i as f64,
            series.p_hat[j]
        );
    }
    Ok(())
}
