//! Finds the optimal marginal-supported witness for a catalog state,
//! re-checks its certificates and evaluates it from the marginals alone.
//!
//! `cargo run --release --example witness_certificate -- eq6`

use marginal_gme::catalog;
use marginal_gme::witness::{
    min_witness_value, min_witness_value_unrestricted, validate_witness, witness_value,
    MarginalPattern, MarginalSet,
};

fn main() -> marginal_gme::Result<()> {
    let id = std::env::args().nth(1).unwrap_or_else(|| "eq5".into());
    let entry = catalog::build(&id)?;
    let pattern = MarginalPattern::parse(entry.state.register().clone(), &entry.expected.pattern)?;

    let outcome = min_witness_value(&entry.state, &pattern)?;
    println!(
        "{id}: min tr(Wρ) over {} witnesses = {:.6}",
        pattern.label(),
        outcome.value
    );
    println!(
        "  detection {:?}, dual bound {:?}",
        outcome.detection, outcome.dual_bound
    );

    let check = validate_witness(&outcome.witness);
    println!(
        "  tr W = {:.10}, projection residual {:.1e}",
        check.trace, check.projection_residual
    );
    for c in &check.certificates {
        println!(
            "  {:>6}: ‖W − P − Q^T‖ = {:.1e}, min eig P {:+.1e}, Q {:+.1e}",
            c.bipartition, c.decomposition_residual, c.p_min_eigenvalue, c.q_min_eigenvalue
        );
    }

    let marginals = MarginalSet::from_state(&entry.state, &pattern)?;
    println!(
        "  value from marginals only: {:.6}",
        witness_value(&outcome.witness, &marginals)?
    );

    let full = min_witness_value_unrestricted(&entry.state)?;
    println!("  unrestricted witness value: {:.6}", full.value);
    Ok(())
}
