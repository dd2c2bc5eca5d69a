use super::{CMatrix, DensityOperator, HermitianOperator, QuditRegister, C64};
use crate::error::{Error, Result};

/// Splits global basis indices into a part on a chosen party set and a part on
/// the remaining parties: `global = inner[a] + outer[r]`.
#[derive(Clone, Debug)]
pub struct IndexSplit {
    inner: Vec<usize>,
    outer: Vec<usize>,
}

fn offsets(dims: &[usize], strides: &[usize], parties: &[usize]) -> Vec<usize> {
    let mut out = vec![0usize];
    for &p in parties {
        let mut next = Vec::with_capacity(out.len() * dims[p]);
        for &base in &out {
            for x in 0..dims[p] {
                next.push(base + x * strides[p]);
            }
        }
        out = next;
    }
    out
}

pub(crate) fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1usize; dims.len()];
    for p in (0..dims.len().saturating_sub(1)).rev() {
        s[p] = s[p + 1] * dims[p + 1];
    }
    s
}

impl IndexSplit {
    /// `parties` must be sorted and valid for `register`.
    pub fn new(register: &QuditRegister, parties: &[usize]) -> Result<Self> {
        let parties = register.check_parties(parties)?;
        let rest = register.complement(&parties);
        let st = strides(register.dims());
        Ok(Self {
            inner: offsets(register.dims(), &st, &parties),
            outer: offsets(register.dims(), &st, &rest),
        })
    }

    pub fn inner_dim(&self) -> usize {
        self.inner.len()
    }

    pub fn outer_dim(&self) -> usize {
        self.outer.len()
    }

    pub fn global(&self, a: usize, r: usize) -> usize {
        self.inner[a] + self.outer[r]
    }

    /// Inverse of [`global`](Self::global), computed by table lookup.
    pub fn decompose_table(&self) -> Vec<(usize, usize)> {
        let n = self.inner.len() * self.outer.len();
        let mut table = vec![(0, 0); n];
        for (a, &i) in self.inner.iter().enumerate() {
            for (r, &o) in self.outer.iter().enumerate() {
                table[i + o] = (a, r);
            }
        }
        table
    }
}

/// Kronecker product in party order.
pub fn tensor_product(factors: &[HermitianOperator]) -> Result<HermitianOperator> {
    let (first, rest) = factors
        .split_first()
        .ok_or_else(|| Error::InvalidParties("empty tensor product".into()))?;
    let mut register = first.register().clone();
    let mut m = first.matrix().clone();
    for f in rest {
        register = register.concat(f.register());
        m = m.kronecker(f.matrix());
    }
    HermitianOperator::from_hermitian_part(register, &m)
}

pub(crate) fn partial_trace_matrix(
    m: &CMatrix,
    register: &QuditRegister,
    keep: &[usize],
) -> Result<CMatrix> {
    let split = IndexSplit::new(register, keep)?;
    let dk = split.inner_dim();
    let mut out = CMatrix::zeros(dk, dk);
    for a in 0..dk {
        for b in 0..dk {
            let mut acc = C64::new(0.0, 0.0);
            for r in 0..split.outer_dim() {
                acc += m[(split.global(a, r), split.global(b, r))];
            }
            out[(a, b)] = acc;
        }
    }
    Ok(out)
}

/// Reduced operator on `keep`; trace is preserved.
pub fn partial_trace(op: &HermitianOperator, keep: &[usize]) -> Result<HermitianOperator> {
    if keep.is_empty() {
        return Err(Error::InvalidParties(
            "cannot keep an empty party set".into(),
        ));
    }
    let keep = op.register().check_parties(keep)?;
    let reg = op.register().subregister(&keep)?;
    let m = partial_trace_matrix(op.matrix(), op.register(), &keep)?;
    HermitianOperator::from_hermitian_part(reg, &m)
}

pub(crate) fn partial_transpose_matrix(
    m: &CMatrix,
    register: &QuditRegister,
    parties: &[usize],
) -> Result<CMatrix> {
    let split = IndexSplit::new(register, parties)?;
    let n = m.nrows();
    let mut out = CMatrix::zeros(n, n);
    let (di, dout) = (split.inner_dim(), split.outer_dim());
    for a in 0..di {
        for b in 0..di {
            for r in 0..dout {
                for s in 0..dout {
                    out[(split.global(a, r), split.global(b, s))] =
                        m[(split.global(b, r), split.global(a, s))];
                }
            }
        }
    }
    Ok(out)
}

/// Transposes the tensor factors of the parties in `parties`; the empty set
/// is the identity map.
pub fn partial_transpose(op: &HermitianOperator, parties: &[usize]) -> Result<HermitianOperator> {
    let parties = op.register().check_parties(parties)?;
    if parties.is_empty() {
        return Ok(op.clone());
    }
    let m = partial_transpose_matrix(op.matrix(), op.register(), &parties)?;
    HermitianOperator::from_hermitian_part(op.register().clone(), &m)
}

pub(crate) fn project_party_matrix(
    m: &CMatrix,
    register: &QuditRegister,
    party: usize,
    vector: &[C64],
) -> Result<CMatrix> {
    if party >= register.num_parties() {
        return Err(Error::InvalidParties(format!("party {party} out of range")));
    }
    if vector.len() != register.dim_of(party) {
        return Err(Error::DimensionMismatch {
            expected: register.dim_of(party),
            found: vector.len(),
        });
    }
    let split = IndexSplit::new(register, &[party])?;
    let dr = split.outer_dim();
    let mut out = CMatrix::zeros(dr, dr);
    for r in 0..dr {
        for s in 0..dr {
            let mut acc = C64::new(0.0, 0.0);
            for (a, ca) in vector.iter().enumerate() {
                for (b, cb) in vector.iter().enumerate() {
                    acc += ca.conj() * m[(split.global(a, r), split.global(b, s))] * cb;
                }
            }
            out[(r, s)] = acc;
        }
    }
    Ok(out)
}

/// `⟨c| op |c⟩` with `|c⟩` acting on `party`; the result lives on the
/// remaining parties. `vector` need not be normalized.
pub fn project_party(
    op: &HermitianOperator,
    party: usize,
    vector: &[C64],
) -> Result<HermitianOperator> {
    if op.register().num_parties() < 2 {
        return Err(Error::InvalidParties(
            "cannot project the only party".into(),
        ));
    }
    let rest = op.register().complement(&[party]);
    let m = project_party_matrix(op.matrix(), op.register(), party, vector)?;
    HermitianOperator::from_hermitian_part(op.register().subregister(&rest)?, &m)
}

/// `(1 - p) ρ + p 1/D`.
pub fn mix_with_white_noise(rho: &DensityOperator, p: f64) -> Result<DensityOperator> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::OutOfRange(format!("noise level {p} outside [0, 1]")));
    }
    let d = rho.dim();
    let mut m = rho.matrix().map(|z| z * (1.0 - p));
    for i in 0..d {
        m[(i, i)] += C64::new(p / d as f64, 0.0);
    }
    DensityOperator::new(rho.register().clone(), m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{CVector, PureState};

    fn ket(bits: &str) -> PureState {
        let reg = QuditRegister::qubits(bits.len());
        let digits: Vec<usize> = bits.bytes().map(|b| (b - b'0') as usize).collect();
        PureState::basis(reg, &digits).unwrap()
    }

    fn ghz3() -> DensityOperator {
        let v = ket("000").amplitudes() + ket("111").amplitudes();
        PureState::normalized(QuditRegister::qubits(3), v)
            .unwrap()
            .density()
    }

    fn pauli_z() -> HermitianOperator {
        let mut m = CMatrix::zeros(2, 2);
        m[(0, 0)] = C64::new(1.0, 0.0);
        m[(1, 1)] = C64::new(-1.0, 0.0);
        HermitianOperator::new(QuditRegister::qubits(1), m).unwrap()
    }

    #[test]
    fn identity_tensor_identity() {
        let i2 = HermitianOperator::identity(QuditRegister::qubits(1));
        let i4 = tensor_product(&[i2.clone(), i2]).unwrap();
        assert_eq!(i4.matrix(), &CMatrix::identity(4, 4));
        assert_eq!(i4.register(), &QuditRegister::qubits(2));
    }

    #[test]
    fn zz_on_00_is_one() {
        let zz = tensor_product(&[pauli_z(), pauli_z()]).unwrap();
        assert!((ket("00").density().expectation(&zz) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn product_projector() {
        let p0 = ket("0").density().into_hermitian();
        let p1 = ket("1").density().into_hermitian();
        let prod = tensor_product(&[p0, p1]).unwrap();
        assert!(prod.max_abs_diff(ket("01").density().as_hermitian()) < 1e-15);
    }

    #[test]
    fn ghz_pair_marginal() {
        let ab = ghz3().marginal(&[0, 1]).unwrap();
        let mut expect = CMatrix::zeros(4, 4);
        expect[(0, 0)] = C64::new(0.5, 0.0);
        expect[(3, 3)] = C64::new(0.5, 0.0);
        assert!(crate::operators::max_abs_diff(ab.matrix(), &expect) < 1e-15);
        let all = ghz3().marginal(&[0, 1, 2]).unwrap();
        assert!(all.as_hermitian().max_abs_diff(ghz3().as_hermitian()) < 1e-15);
        assert!(partial_trace(ghz3().as_hermitian(), &[]).is_err());
    }

    #[test]
    fn bell_partial_transpose_spectrum() {
        let v = ket("00").amplitudes() + ket("11").amplitudes();
        let bell = PureState::normalized(QuditRegister::qubits(2), v)
            .unwrap()
            .density();
        let ev = bell.partial_transpose(&[0]).unwrap().eigenvalues();
        let expect = [-0.5, 0.5, 0.5, 0.5];
        for (a, b) in ev.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn partial_transpose_involution_and_empty() {
        let rho = ghz3();
        let once = rho.partial_transpose(&[0, 2]).unwrap();
        let twice = partial_transpose(&once, &[0, 2]).unwrap();
        assert!(twice.max_abs_diff(rho.as_hermitian()) < 1e-15);
        let none = rho.partial_transpose(&[]).unwrap();
        assert_eq!(&none, rho.as_hermitian());
    }

    #[test]
    fn partial_trace_of_unequal_dims() {
        // qubit ⊗ qutrit product, trace out the qutrit
        let a = ket("1").density().into_hermitian();
        let mut v = CVector::zeros(3);
        v[2] = C64::new(1.0, 0.0);
        let b = PureState::new(QuditRegister::new(vec![3]).unwrap(), v)
            .unwrap()
            .density()
            .into_hermitian();
        let ab = tensor_product(&[a.clone(), b.clone()]).unwrap();
        assert!(partial_trace(&ab, &[0]).unwrap().max_abs_diff(&a) < 1e-15);
        assert!(partial_trace(&ab, &[1]).unwrap().max_abs_diff(&b) < 1e-15);
    }

    #[test]
    fn noise_endpoints() {
        let rho = ghz3();
        assert_eq!(mix_with_white_noise(&rho, 0.0).unwrap(), rho);
        let full = mix_with_white_noise(&rho, 1.0).unwrap();
        let mm = DensityOperator::maximally_mixed(QuditRegister::qubits(3));
        assert!(full.as_hermitian().max_abs_diff(mm.as_hermitian()) < 1e-15);
        assert!(mix_with_white_noise(&rho, 1.5).is_err());
        assert!(mix_with_white_noise(&rho, -0.1).is_err());
    }
}
