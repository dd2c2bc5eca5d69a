//! See-saw search for a three-qubit state whose pair marginals are PPT
//! while a marginal witness detects it. Pass a seed and optionally a number
//! of post-measurement directions.
//!
//! `cargo run --release --example seesaw_search -- 7 1000`

use marginal_gme::iterate::{run_seesaw, SearchConfig};
use marginal_gme::operators::QuditRegister;
use marginal_gme::statesearch::DEFAULT_EPSILON;

fn main() -> marginal_gme::Result<()> {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(1);
    let directions: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(0);

    let mut config = SearchConfig::all_pairs(QuditRegister::qubits(3), seed);
    if directions > 0 {
        config.constraints = config
            .constraints
            .with_post_measurement(directions, DEFAULT_EPSILON)?;
    }
    let outcome = run_seesaw(&config)?;
    for r in &outcome.history {
        let tag = if r.polishing { " (polish)" } else { "" };
        println!(
            "round {:>2}: step 1 {:+.6}  step 2 {:+.6}{tag}",
            r.round, r.step1, r.step2
        );
    }
    println!(
        "{:?} at round {:?}, best value {:+.6}",
        outcome.status, outcome.success_round, outcome.best_value
    );
    if let Some(v) = &outcome.verification {
        println!("independent verification passed: {}", v.passed);
    }
    for (pair, spectrum) in &outcome.fingerprint {
        println!("  marginal {pair:?}: {spectrum:.4?}");
    }
    Ok(())
}
