//! Copies of the four-qubit state spread over a ring of parties. Every pair
//! marginal is assembled from copy marginals without the global state.
//!
//! `cargo run --release --example many_party -- 8`

use marginal_gme::catalog::{compose_many_party, composed_pair_marginal};

fn main() -> marginal_gme::Result<()> {
    let n: usize = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(5);
    let desc = compose_many_party(n)?;
    println!(
        "{n} parties, {} copies, {} qubits",
        desc.windows.len(),
        desc.total_qubits()
    );
    for w in &desc.windows {
        println!("  copy on parties {w:?}");
    }
    let mut worst = f64::INFINITY;
    for a in 0..n {
        for b in a + 1..n {
            let m = composed_pair_marginal(&desc, (a, b))?;
            worst = worst.min(m.pt_min_eigenvalue(&[0])?);
        }
    }
    println!("smallest pair partial-transpose eigenvalue: {worst:.3e}");
    Ok(())
}
