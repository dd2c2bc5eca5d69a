//! Lists the catalog and audits the pair marginals of every entry.
//!
//! Run with `cargo run --release --example catalog_audit`.

use marginal_gme::analysis::marginal_audit;
use marginal_gme::catalog;
use marginal_gme::witness::MarginalPattern;

fn main() -> marginal_gme::Result<()> {
    println!(
        "{:<6} {:<10} {:<9} {:>10} {:>9}",
        "id", "register", "pattern", "min PT eig", "all PPT"
    );
    for entry in catalog::all() {
        let reg = entry.state.register().clone();
        let pattern = MarginalPattern::parse(reg.clone(), &entry.expected.pattern)?;
        let audit = marginal_audit(&entry.state, &pattern, entry.expected.triples)?;
        let min = audit
            .pairs
            .iter()
            .map(|p| p.pt_min_eigenvalue)
            .chain(audit.triples.iter().map(|t| t.pt_min_eigenvalue))
            .fold(f64::INFINITY, f64::min);
        println!(
            "{:<6} {:<10} {:<9} {:>10.2e} {:>9}",
            entry.id,
            reg.label(),
            pattern.label(),
            min,
            audit.all_ppt
        );
    }
    Ok(())
}
