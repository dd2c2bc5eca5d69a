use serde::Serialize;

use crate::error::Result;
use crate::operators::{party_name, DensityOperator};
use crate::statesearch::STATE_VERIFY_TOLERANCE;
use crate::witness::MarginalPattern;

#[derive(Clone, Debug, Serialize)]
pub struct PairAudit {
    pub pair: (usize, usize),
    pub label: String,
    pub pt_min_eigenvalue: f64,
    pub ppt: bool,
    /// Known only when PPT is equivalent to separability (2⊗2, 2⊗3).
    pub separable: Option<bool>,
}

#[derive(Clone, Debug, Serialize)]
pub struct TripleAudit {
    pub triple: [usize; 3],
    pub label: String,
    /// Minimum over the three single-party cuts.
    pub pt_min_eigenvalue: f64,
    pub ppt: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct AuditReport {
    pub pairs: Vec<PairAudit>,
    pub triples: Vec<TripleAudit>,
    pub all_ppt: bool,
}

/// PT spectra of the pattern's pair marginals and, if asked, of every triple.
pub fn marginal_audit(
    rho: &DensityOperator,
    pattern: &MarginalPattern,
    include_triples: bool,
) -> Result<AuditReport> {
    let reg = rho.register();
    let mut pairs = Vec::new();
    for &(a, b) in pattern.pairs() {
        let m = rho.marginal(&[a, b])?;
        let ev = m.pt_min_eigenvalue(&[0])?;
        let ppt = ev >= -STATE_VERIFY_TOLERANCE;
        let small = reg.dim_of(a) * reg.dim_of(b) <= 6;
        pairs.push(PairAudit {
            pair: (a, b),
            label: format!("{}{}", party_name(a), party_name(b)),
            pt_min_eigenvalue: ev,
            ppt,
            separable: small.then_some(ppt),
        });
    }
    let mut triples = Vec::new();
    if include_triples {
        let n = reg.num_parties();
        for a in 0..n {
            for b in a + 1..n {
                for c in b + 1..n {
                    let m = rho.marginal(&[a, b, c])?;
                    let mut ev = f64::INFINITY;
                    for k in 0..3 {
                        ev = ev.min(m.pt_min_eigenvalue(&[k])?);
                    }
                    triples.push(TripleAudit {
                        triple: [a, b, c],
                        label: [a, b, c].iter().map(|&p| party_name(p)).collect(),
                        pt_min_eigenvalue: ev,
                        ppt: ev >= -STATE_VERIFY_TOLERANCE,
                    });
                }
            }
        }
    }
    let all_ppt = pairs.iter().all(|p| p.ppt) && triples.iter().all(|t| t.ppt);
    Ok(AuditReport {
        pairs,
        triples,
        all_ppt,
    })
}
