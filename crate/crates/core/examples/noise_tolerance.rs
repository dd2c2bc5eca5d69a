//! Detection value along the white-noise line and the tolerated noise level.
//!
//! `cargo run --release --example noise_tolerance -- appA`

use marginal_gme::analysis::{detection_curve, noise_tolerance, ToleranceMode};
use marginal_gme::catalog;
use marginal_gme::witness::MarginalPattern;

fn main() -> marginal_gme::Result<()> {
    let id = std::env::args().nth(1).unwrap_or_else(|| "eq5".into());
    let entry = catalog::build(&id)?;
    let pattern = MarginalPattern::parse(entry.state.register().clone(), &entry.expected.pattern)?;
    let mode = ToleranceMode::MarginalRestricted;

    let ps: Vec<f64> = (0..=6).map(|k| 0.05 * k as f64).collect();
    for (p, v) in detection_curve(&entry.state, &pattern, mode, &ps)? {
        println!("p = {p:.2}  V = {v:+.6}");
    }
    let t = noise_tolerance(&entry.state, &pattern, mode)?;
    println!(
        "tolerance {:.4} in [{:.5}, {:.5}] after {} evaluations (reference {:?})",
        t.p_star, t.bracket[0], t.bracket[1], t.evaluations, entry.expected.marginal_tolerance
    );
    Ok(())
}
