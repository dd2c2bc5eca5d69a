use std::collections::BTreeSet;

use super::{CMatrix, HermitianOperator, QuditRegister, SparseCMatrix, C64};
use crate::error::{Error, Result};

/// Identity followed by `d² - 1` traceless, trace-orthogonal Hermitian
/// matrices. For `d = 2` these are the Pauli matrices X, Y, Z; for larger `d`
/// the generalized Gell-Mann matrices (symmetric and antisymmetric pairs for
/// every `j < k`, then the diagonal family).
#[derive(Clone, Debug)]
pub struct OperatorBasis {
    dim: usize,
    elements: Vec<SparseCMatrix>,
}

pub fn operator_basis(d: usize) -> Result<OperatorBasis> {
    if d < 2 {
        return Err(Error::OutOfRange(format!("local dimension {d} < 2")));
    }
    let one = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    let mut elements = vec![SparseCMatrix::from_entries(
        d,
        (0..d).map(|k| (k, k, one)).collect(),
    )];
    for j in 0..d {
        for k in j + 1..d {
            elements.push(SparseCMatrix::from_entries(
                d,
                vec![(j, k, one), (k, j, one)],
            ));
            elements.push(SparseCMatrix::from_entries(d, vec![(j, k, -i), (k, j, i)]));
        }
    }
    for l in 1..d {
        let s = (2.0 / (l * (l + 1)) as f64).sqrt();
        let mut entries: Vec<_> = (0..l).map(|j| (j, j, C64::new(s, 0.0))).collect();
        entries.push((l, l, C64::new(-(l as f64) * s, 0.0)));
        elements.push(SparseCMatrix::from_entries(d, entries));
    }
    Ok(OperatorBasis { dim: d, elements })
}

impl OperatorBasis {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn element(&self, k: usize) -> &SparseCMatrix {
        &self.elements[k]
    }

    pub fn dense(&self, k: usize) -> CMatrix {
        self.elements[k].to_dense()
    }

    /// `tr(B_k²)`: `d` for the identity, `2` otherwise.
    pub fn norm_sq(&self, k: usize) -> f64 {
        if k == 0 {
            self.dim as f64
        } else {
            2.0
        }
    }

    /// Real coefficients `c_k = tr(B_k H) / tr(B_k²)` of a Hermitian matrix.
    pub fn expand(&self, h: &CMatrix) -> Vec<f64> {
        (0..self.len())
            .map(|k| self.elements[k].trace_with(h) / self.norm_sq(k))
            .collect()
    }

    pub fn synthesize(&self, coeffs: &[f64]) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim, self.dim);
        for (k, &c) in coeffs.iter().enumerate() {
            self.elements[k].add_scaled_to(&mut m, C64::new(c, 0.0));
        }
        m
    }

    fn label(&self, k: usize) -> String {
        if self.dim == 2 {
            ["I", "X", "Y", "Z"][k].to_string()
        } else if k == 0 {
            "I".to_string()
        } else {
            format!("G{k}")
        }
    }
}

/// Tensor product of local basis elements, one index per party (0 = identity).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OperatorString {
    pub factors: Vec<usize>,
}

impl OperatorString {
    pub fn identity(n: usize) -> Self {
        Self {
            factors: vec![0; n],
        }
    }

    pub fn support(&self) -> Vec<usize> {
        self.factors
            .iter()
            .enumerate()
            .filter(|(_, &f)| f != 0)
            .map(|(p, _)| p)
            .collect()
    }

    pub fn weight(&self) -> usize {
        self.factors.iter().filter(|&&f| f != 0).count()
    }
}

/// Trace-orthogonal family of operator strings on a register.
#[derive(Clone, Debug)]
pub struct OperatorSubspace {
    register: QuditRegister,
    bases: Vec<OperatorBasis>,
    strings: Vec<OperatorString>,
}

fn local_bases(register: &QuditRegister) -> Result<Vec<OperatorBasis>> {
    register.dims().iter().map(|&d| operator_basis(d)).collect()
}

fn validate_pairs(register: &QuditRegister, pairs: &[(usize, usize)]) -> Result<()> {
    if pairs.is_empty() {
        return Err(Error::Pattern("empty pattern".into()));
    }
    for &(a, b) in pairs {
        if a == b || a >= register.num_parties() || b >= register.num_parties() {
            return Err(Error::Pattern(format!(
                "invalid pair ({a}, {b}) for {} parties",
                register.num_parties()
            )));
        }
    }
    Ok(())
}

/// All operators acting non-trivially on at most two parties whose support
/// lies inside some pair of the pattern. The identity comes first, then
/// single-party terms on covered parties, then genuine two-party terms.
pub fn two_body_subspace(
    register: &QuditRegister,
    pairs: &[(usize, usize)],
) -> Result<OperatorSubspace> {
    validate_pairs(register, pairs)?;
    let bases = local_bases(register)?;
    let n = register.num_parties();
    let mut norm_pairs: Vec<(usize, usize)> =
        pairs.iter().map(|&(a, b)| (a.min(b), a.max(b))).collect();
    norm_pairs.sort_unstable();
    norm_pairs.dedup();

    let mut strings = vec![OperatorString::identity(n)];
    let covered: BTreeSet<usize> = norm_pairs.iter().flat_map(|&(a, b)| [a, b]).collect();
    for &p in &covered {
        for k in 1..bases[p].len() {
            let mut s = OperatorString::identity(n);
            s.factors[p] = k;
            strings.push(s);
        }
    }
    for &(a, b) in &norm_pairs {
        for i in 1..bases[a].len() {
            for j in 1..bases[b].len() {
                let mut s = OperatorString::identity(n);
                s.factors[a] = i;
                s.factors[b] = j;
                strings.push(s);
            }
        }
    }
    Ok(OperatorSubspace {
        register: register.clone(),
        bases,
        strings,
    })
}

fn all_strings(register: &QuditRegister, bases: &[OperatorBasis]) -> Vec<OperatorString> {
    let n = register.num_parties();
    let mut out = vec![OperatorString::identity(n)];
    for p in 0..n {
        let mut next = Vec::with_capacity(out.len() * bases[p].len());
        for s in &out {
            for k in 0..bases[p].len() {
                let mut t = s.clone();
                t.factors[p] = k;
                next.push(t);
            }
        }
        out = next;
    }
    out
}

/// Every operator string: a basis of all Hermitian operators on the register.
pub fn full_operator_space(register: &QuditRegister) -> Result<OperatorSubspace> {
    let bases = local_bases(register)?;
    let strings = all_strings(register, &bases);
    Ok(OperatorSubspace {
        register: register.clone(),
        bases,
        strings,
    })
}

/// Operator strings orthogonal to [`two_body_subspace`] for the same pattern.
pub fn complement_subspace(
    register: &QuditRegister,
    pairs: &[(usize, usize)],
) -> Result<OperatorSubspace> {
    let inside: BTreeSet<OperatorString> = two_body_subspace(register, pairs)?
        .strings
        .into_iter()
        .collect();
    let bases = local_bases(register)?;
    let strings = all_strings(register, &bases)
        .into_iter()
        .filter(|s| !inside.contains(s))
        .collect();
    Ok(OperatorSubspace {
        register: register.clone(),
        bases,
        strings,
    })
}

impl OperatorSubspace {
    pub fn register(&self) -> &QuditRegister {
        &self.register
    }

    pub fn len(&self) -> usize {
        self.strings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strings.is_empty()
    }

    pub fn strings(&self) -> &[OperatorString] {
        &self.strings
    }

    pub fn string(&self, k: usize) -> &OperatorString {
        &self.strings[k]
    }

    pub fn local_basis(&self, party: usize) -> &OperatorBasis {
        &self.bases[party]
    }

    pub fn label(&self, k: usize) -> String {
        let s = &self.strings[k];
        if self.register.is_qubits() {
            s.factors
                .iter()
                .enumerate()
                .map(|(p, &f)| self.bases[p].label(f))
                .collect()
        } else {
            s.factors
                .iter()
                .enumerate()
                .map(|(p, &f)| self.bases[p].label(f))
                .collect::<Vec<_>>()
                .join(".")
        }
    }

    /// `tr(S_k²)`.
    pub fn norm_sq(&self, k: usize) -> f64 {
        self.strings[k]
            .factors
            .iter()
            .enumerate()
            .map(|(p, &f)| self.bases[p].norm_sq(f))
            .product()
    }

    /// Sparse matrix of the `k`-th string on the full register.
    pub fn sparse(&self, k: usize) -> SparseCMatrix {
        self.sparse_on(
            &self.strings[k].factors,
            &(0..self.register.num_parties()).collect::<Vec<_>>(),
        )
    }

    /// The `k`-th string restricted to `parties` (which must contain its support).
    pub fn sparse_restricted(&self, k: usize, parties: &[usize]) -> SparseCMatrix {
        self.sparse_on(&self.strings[k].factors, parties)
    }

    fn sparse_on(&self, factors: &[usize], parties: &[usize]) -> SparseCMatrix {
        let mut acc = SparseCMatrix::from_entries(1, vec![(0, 0, C64::new(1.0, 0.0))]);
        for &p in parties {
            acc = acc.kronecker(self.bases[p].element(factors[p]));
        }
        acc
    }

    pub fn dense(&self, k: usize) -> CMatrix {
        self.sparse(k).to_dense()
    }

    pub fn hermitian(&self, k: usize) -> HermitianOperator {
        HermitianOperator::from_hermitian_part(self.register.clone(), &self.dense(k))
            .expect("operator strings match their register")
    }

    pub fn hermitians(&self) -> Vec<HermitianOperator> {
        (0..self.len()).map(|k| self.hermitian(k)).collect()
    }

    /// Expansion coefficients `tr(S_k H) / tr(S_k²)`.
    pub fn coefficients(&self, h: &CMatrix) -> Vec<f64> {
        (0..self.len())
            .map(|k| self.sparse(k).trace_with(h) / self.norm_sq(k))
            .collect()
    }

    pub fn synthesize(&self, coeffs: &[f64]) -> CMatrix {
        let d = self.register.total_dim();
        let mut m = CMatrix::zeros(d, d);
        for (k, &c) in coeffs.iter().enumerate() {
            if c != 0.0 {
                self.sparse(k).add_scaled_to(&mut m, C64::new(c, 0.0));
            }
        }
        m
    }

    /// Frobenius norm of the part of `h` outside the span.
    pub fn projection_residual(&self, h: &CMatrix) -> f64 {
        let proj = self.synthesize(&self.coefficients(h));
        (h - proj).norm()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::trace_product;
    use nalgebra::DMatrix;

    #[test]
    fn qubit_basis_is_pauli() {
        let b = operator_basis(2).unwrap();
        assert_eq!(b.len(), 4);
        let y = b.dense(2);
        assert_eq!(y[(0, 1)], C64::new(0.0, -1.0));
        assert_eq!(y[(1, 0)], C64::new(0.0, 1.0));
        let z = b.dense(3);
        assert_eq!(z[(1, 1)], C64::new(-1.0, 0.0));
    }

    #[test]
    fn bases_are_trace_orthogonal() {
        for d in 2..=5 {
            let b = operator_basis(d).unwrap();
            assert_eq!(b.len(), d * d);
            for i in 0..b.len() {
                let bi = b.dense(i);
                if i > 0 {
                    assert!(bi.trace().norm() < 1e-14);
                }
                for j in 0..b.len() {
                    let t = trace_product(&bi, &b.dense(j));
                    let expect = if i == j { b.norm_sq(i) } else { 0.0 };
                    assert!((t - expect).abs() < 1e-12, "d={d} i={i} j={j} t={t}");
                }
            }
        }
        assert!(operator_basis(1).is_err());
    }

    #[test]
    fn subspace_dimensions() {
        let all3: Vec<_> = vec![(0, 1), (0, 2), (1, 2)];
        assert_eq!(
            two_body_subspace(&QuditRegister::qubits(3), &all3)
                .unwrap()
                .len(),
            37
        );
        assert_eq!(
            two_body_subspace(&QuditRegister::qubits(3), &[(0, 1)])
                .unwrap()
                .len(),
            16
        );
        let all4: Vec<_> = (0..4)
            .flat_map(|a| (a + 1..4).map(move |b| (a, b)))
            .collect();
        assert_eq!(
            two_body_subspace(&QuditRegister::qubits(4), &all4)
                .unwrap()
                .len(),
            67
        );
        assert_eq!(
            two_body_subspace(&QuditRegister::uniform(3, 3), &all3)
                .unwrap()
                .len(),
            217
        );
        assert!(two_body_subspace(&QuditRegister::qubits(3), &[]).is_err());
        assert!(two_body_subspace(&QuditRegister::qubits(3), &[(0, 0)]).is_err());
    }

    #[test]
    fn complement_completes_the_space() {
        let reg = QuditRegister::qubits(4);
        let pairs = [(0, 1), (1, 2), (2, 3)];
        let s = two_body_subspace(&reg, &pairs).unwrap();
        let c = complement_subspace(&reg, &pairs).unwrap();
        assert_eq!(s.len() + c.len(), 256);
        assert_eq!(full_operator_space(&reg).unwrap().len(), 256);
    }

    #[test]
    fn labels() {
        let s = two_body_subspace(&QuditRegister::qubits(3), &[(0, 2)]).unwrap();
        assert_eq!(s.label(0), "III");
        assert_eq!(s.label(s.len() - 1), "ZIZ");
    }

    #[test]
    fn expansion_resynthesis() {
        let reg = QuditRegister::new(vec![2, 3]).unwrap();
        let full = full_operator_space(&reg).unwrap();
        let d = 6;
        let a = DMatrix::from_fn(d, d, |i, j| {
            C64::new((i * 7 + j * 3) as f64 % 5.0, (i as f64) - (j as f64))
        });
        let h = (&a + a.adjoint()).scale(0.5);
        let back = full.synthesize(&full.coefficients(&h));
        assert!((back - &h).norm() < 1e-12);
        assert!(full.projection_residual(&h) < 1e-12);
    }
}
