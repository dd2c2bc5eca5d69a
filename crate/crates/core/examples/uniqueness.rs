//! Whether pair marginals pin down the global state.
//!
//! `cargo run --release --example uniqueness`

use marginal_gme::analysis::{compatibility_range, range_along};
use marginal_gme::catalog::{self, eq8_partner_state, eq8_phase, eq8_state};
use marginal_gme::witness::{MarginalPattern, MarginalSet};

fn main() -> marginal_gme::Result<()> {
    for id in ["appA", "eq5", "eq8", "ghz3"] {
        let entry = catalog::build(id)?;
        let pattern = MarginalPattern::all_pairs(entry.state.register().clone());
        let marginals = MarginalSet::from_state(&entry.state, &pattern)?;
        let r = compatibility_range(&marginals)?;
        println!(
            "{id:<5} {:?}: largest range {:.3e} along {:?} (face rank {}, hull dimension {})",
            r.verdict, r.max_range, r.direction, r.face_rank, r.hull_dimension
        );
    }

    let phi = eq8_phase();
    let a = eq8_state(phi).density();
    let b = eq8_partner_state(phi).density();
    let x = a.as_hermitian().sub(b.as_hermitian())?;
    let pattern = MarginalPattern::all_pairs(a.register().clone());
    let r = range_along(&MarginalSet::from_state(&a, &pattern)?, &x)?;
    println!(
        "eq8 along the partner difference: [{:.4}, {:.4}]",
        r.min, r.max
    );
    Ok(())
}
