//! Post-measurement PPT sweep: measure one qubit along every Bloch direction
//! and record the smallest partial-transpose eigenvalue left behind.
//!
//! `cargo run --release --example localizable -- appG`

use marginal_gme::analysis::{localizable_sweep, DEFAULT_GRID};
use marginal_gme::catalog;

fn main() -> marginal_gme::Result<()> {
    let id = std::env::args().nth(1).unwrap_or_else(|| "appG".into());
    let entry = catalog::build(&id)?;
    let reg = entry.state.register().clone();
    for party in (0..reg.num_parties()).filter(|&p| reg.dim_of(p) == 2) {
        let s = localizable_sweep(&entry.state, party, DEFAULT_GRID)?;
        println!(
            "party {party}: grid minimum {:+.3e}, refined {:+.3e} at θ = {:.4}, φ = {:.4} ({} refinement evaluations)",
            s.grid_minimum, s.minimum, s.worst.theta, s.worst.phi, s.refine_evaluations
        );
    }
    Ok(())
}
