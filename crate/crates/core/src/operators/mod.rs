//! Multi-qudit registers and the operator algebra used by every other module.
//!
//! Parties are labelled `0..N` in register order and the tensor factors of a
//! global matrix follow that order (party 0 is the most significant digit of a
//! basis index). Party sets are always handled as sorted index lists.

mod algebra;
mod basis;
mod sparse;

pub use algebra::{
    mix_with_white_noise, partial_trace, partial_transpose, project_party, tensor_product,
    IndexSplit,
};
pub(crate) use algebra::{partial_trace_matrix, partial_transpose_matrix, project_party_matrix};
pub use basis::{
    complement_subspace, full_operator_space, operator_basis, two_body_subspace, OperatorBasis,
    OperatorString, OperatorSubspace,
};
pub use sparse::SparseCMatrix;

use nalgebra::{Complex, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Asymmetry above this is rejected; below it is projected away.
pub const HERMITIAN_TOLERANCE: f64 = 1e-9;
/// Smallest eigenvalue a density operator may have.
pub const DENSITY_EIGEN_TOLERANCE: f64 = 1e-9;
/// Allowed deviation of a density operator's trace from one.
pub const DENSITY_TRACE_TOLERANCE: f64 = 1e-10;
/// Allowed deviation of a pure state's squared norm from one.
pub const PURE_NORM_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct QuditRegister {
    dims: Vec<usize>,
}

impl TryFrom<Vec<usize>> for QuditRegister {
    type Error = Error;
    fn try_from(dims: Vec<usize>) -> Result<Self> {
        Self::new(dims)
    }
}

impl From<QuditRegister> for Vec<usize> {
    fn from(r: QuditRegister) -> Self {
        r.dims
    }
}

impl QuditRegister {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidRegister("register has no parties".into()));
        }
        if let Some(d) = dims.iter().find(|&&d| d < 2) {
            return Err(Error::InvalidRegister(format!("local dimension {d} < 2")));
        }
        Ok(Self { dims })
    }

    pub fn qubits(n: usize) -> Self {
        Self::uniform(n, 2)
    }

    /// `n` parties of local dimension `d`. Panics if `n == 0` or `d < 2`.
    pub fn uniform(n: usize, d: usize) -> Self {
        Self::new(vec![d; n]).expect("uniform register needs n >= 1 and d >= 2")
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn num_parties(&self) -> usize {
        self.dims.len()
    }

    pub fn dim_of(&self, party: usize) -> usize {
        self.dims[party]
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_qubits(&self) -> bool {
        self.dims.iter().all(|&d| d == 2)
    }

    /// Validates a party list and returns it sorted and deduplicated.
    pub fn check_parties(&self, parties: &[usize]) -> Result<Vec<usize>> {
        let mut out = parties.to_vec();
        out.sort_unstable();
        out.dedup();
        if out.len() != parties.len() {
            return Err(Error::InvalidParties(format!(
                "repeated party in {parties:?}"
            )));
        }
        if let Some(&p) = out.iter().find(|&&p| p >= self.num_parties()) {
            return Err(Error::InvalidParties(format!(
                "party {p} outside register of {} parties",
                self.num_parties()
            )));
        }
        Ok(out)
    }

    /// Register made of the given parties, in sorted order.
    pub fn subregister(&self, parties: &[usize]) -> Result<Self> {
        let parties = self.check_parties(parties)?;
        Self::new(parties.iter().map(|&p| self.dims[p]).collect())
    }

    pub fn concat(&self, other: &QuditRegister) -> Self {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        Self { dims }
    }

    pub fn complement(&self, parties: &[usize]) -> Vec<usize> {
        (0..self.num_parties())
            .filter(|p| !parties.contains(p))
            .collect()
    }

    /// Short human label, e.g. `2x2x2`.
    pub fn label(&self) -> String {
        self.dims
            .iter()
            .map(|d| d.to_string())
            .collect::<Vec<_>>()
            .join("x")
    }
}

/// A Hermitian matrix acting on a register.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOperator {
    register: QuditRegister,
    matrix: CMatrix,
}

pub(crate) fn max_asymmetry(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub(crate) fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

impl HermitianOperator {
    /// Validates shape and Hermiticity; round-off asymmetry up to
    /// [`HERMITIAN_TOLERANCE`] is projected away.
    pub fn new(register: QuditRegister, matrix: CMatrix) -> Result<Self> {
        let d = register.total_dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: matrix.nrows().max(matrix.ncols()),
            });
        }
        let asym = max_asymmetry(&matrix);
        if asym > HERMITIAN_TOLERANCE * (1.0 + matrix.norm()) {
            return Err(Error::NotHermitian(asym));
        }
        Ok(Self {
            register,
            matrix: hermitian_part(&matrix),
        })
    }

    /// Projects `matrix` onto its Hermitian part without the asymmetry check.
    pub fn from_hermitian_part(register: QuditRegister, matrix: &CMatrix) -> Result<Self> {
        let d = register.total_dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: matrix.nrows(),
            });
        }
        Ok(Self {
            register,
            matrix: hermitian_part(matrix),
        })
    }

    pub fn identity(register: QuditRegister) -> Self {
        let d = register.total_dim();
        Self {
            register,
            matrix: CMatrix::identity(d, d),
        }
    }

    pub fn zero(register: QuditRegister) -> Self {
        let d = register.total_dim();
        Self {
            register,
            matrix: CMatrix::zeros(d, d),
        }
    }

    pub fn register(&self) -> &QuditRegister {
        &self.register
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    /// `Re tr(self · other)`; both operators are Hermitian so the trace is real.
    pub fn inner(&self, other: &HermitianOperator) -> f64 {
        trace_product(&self.matrix, &other.matrix)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.matrix)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            register: self.register.clone(),
            matrix: self.matrix.map(|z| z * s),
        }
    }

    pub fn add(&self, other: &HermitianOperator) -> Result<Self> {
        self.same_register(other)?;
        Ok(Self {
            register: self.register.clone(),
            matrix: &self.matrix + &other.matrix,
        })
    }

    pub fn sub(&self, other: &HermitianOperator) -> Result<Self> {
        self.same_register(other)?;
        Ok(Self {
            register: self.register.clone(),
            matrix: &self.matrix - &other.matrix,
        })
    }

    fn same_register(&self, other: &HermitianOperator) -> Result<()> {
        if self.register != other.register {
            return Err(Error::InvalidRegister(format!(
                "{} vs {}",
                self.register.label(),
                other.register.label()
            )));
        }
        Ok(())
    }

    /// Largest absolute entry difference.
    pub fn max_abs_diff(&self, other: &HermitianOperator) -> f64 {
        max_abs_diff(&self.matrix, &other.matrix)
    }
}

pub(crate) fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// `Re tr(a b)` without forming the product.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for k in 0..n {
            let x = a[(i, k)];
            let y = b[(k, i)];
            acc += x.re * y.re - x.im * y.im;
        }
    }
    acc
}

/// Ascending eigenvalues of a Hermitian matrix.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let mut ev: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Hermitian, positive semidefinite, unit trace.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator(HermitianOperator);

impl DensityOperator {
    pub fn new(register: QuditRegister, matrix: CMatrix) -> Result<Self> {
        Self::from_hermitian(HermitianOperator::new(register, matrix)?)
    }

    pub fn from_hermitian(op: HermitianOperator) -> Result<Self> {
        let tr = op.trace();
        if (tr - 1.0).abs() > DENSITY_TRACE_TOLERANCE {
            return Err(Error::NotDensity(format!("trace {tr}")));
        }
        let min = op.min_eigenvalue();
        if min < -DENSITY_EIGEN_TOLERANCE {
            return Err(Error::NotDensity(format!("minimum eigenvalue {min:e}")));
        }
        Ok(Self(op))
    }

    /// Nearest density operator to a numerically computed matrix: negative
    /// eigenvalues are clipped and the trace renormalized. Fails if the input
    /// is further than `tolerance` from being a state.
    pub fn from_approximate(op: HermitianOperator, tolerance: f64) -> Result<Self> {
        let eig = op.matrix.clone().symmetric_eigen();
        let min = eig
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        if min < -tolerance {
            return Err(Error::NotDensity(format!("minimum eigenvalue {min:e}")));
        }
        let tr = op.trace();
        if (tr - 1.0).abs() > tolerance.max(DENSITY_TRACE_TOLERANCE) {
            return Err(Error::NotDensity(format!("trace {tr}")));
        }
        let clipped = eig.eigenvalues.map(|l| l.max(0.0));
        let total: f64 = clipped.iter().sum();
        let diag = CMatrix::from_diagonal(&clipped.map(|l| C64::new(l / total, 0.0)));
        let m = &eig.eigenvectors * diag * eig.eigenvectors.adjoint();
        Ok(Self(HermitianOperator::from_hermitian_part(
            op.register,
            &m,
        )?))
    }

    pub fn from_pure(state: &PureState) -> Self {
        let v = &state.amplitudes;
        let m = v * v.adjoint();
        Self(HermitianOperator {
            register: state.register.clone(),
            matrix: hermitian_part(&m),
        })
    }

    pub fn maximally_mixed(register: QuditRegister) -> Self {
        let d = register.total_dim() as f64;
        Self(HermitianOperator::identity(register).scaled(1.0 / d))
    }

    /// Convex combination; weights must be non-negative and sum to one.
    pub fn mixture(parts: &[(f64, &DensityOperator)]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::NotDensity("empty mixture".into()))?;
        let register = first.1.register().clone();
        let d = register.total_dim();
        let mut acc = CMatrix::zeros(d, d);
        let mut total = 0.0;
        for (w, rho) in parts {
            if *w < 0.0 {
                return Err(Error::OutOfRange(format!("negative mixture weight {w}")));
            }
            if rho.register() != &register {
                return Err(Error::InvalidRegister(
                    "mixture of different registers".into(),
                ));
            }
            acc += rho.matrix().map(|z| z * *w);
            total += w;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::OutOfRange(format!("mixture weights sum to {total}")));
        }
        Self::new(register, acc)
    }

    pub fn as_hermitian(&self) -> &HermitianOperator {
        &self.0
    }

    pub fn into_hermitian(self) -> HermitianOperator {
        self.0
    }

    pub fn register(&self) -> &QuditRegister {
        &self.0.register
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0.matrix
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.0.eigenvalues()
    }

    pub fn purity(&self) -> f64 {
        trace_product(self.matrix(), self.matrix())
    }

    /// `tr(O ρ)` for a Hermitian observable.
    pub fn expectation(&self, observable: &HermitianOperator) -> f64 {
        trace_product(observable.matrix(), self.matrix())
    }

    /// Numerical rank: eigenvalues above `tol`.
    pub fn rank(&self, tol: f64) -> usize {
        self.eigenvalues().iter().filter(|&&l| l > tol).count()
    }

    /// Reduced state on `keep`.
    pub fn marginal(&self, keep: &[usize]) -> Result<DensityOperator> {
        let reduced = partial_trace(&self.0, keep)?;
        Ok(DensityOperator(reduced))
    }

    pub fn partial_transpose(&self, parties: &[usize]) -> Result<HermitianOperator> {
        partial_transpose(&self.0, parties)
    }

    /// Smallest eigenvalue of the partial transpose across `parties`.
    pub fn pt_min_eigenvalue(&self, parties: &[usize]) -> Result<f64> {
        Ok(self.partial_transpose(parties)?.min_eigenvalue())
    }

    /// Applies `U_0 ⊗ U_1 ⊗ …` to the state.
    pub fn apply_local_unitaries(&self, unitaries: &[CMatrix]) -> Result<DensityOperator> {
        if unitaries.len() != self.register().num_parties() {
            return Err(Error::DimensionMismatch {
                expected: self.register().num_parties(),
                found: unitaries.len(),
            });
        }
        let mut u = CMatrix::identity(1, 1);
        for (p, ui) in unitaries.iter().enumerate() {
            if ui.nrows() != self.register().dim_of(p) {
                return Err(Error::DimensionMismatch {
                    expected: self.register().dim_of(p),
                    found: ui.nrows(),
                });
            }
            u = u.kronecker(ui);
        }
        let m = &u * self.matrix() * u.adjoint();
        DensityOperator::from_approximate(
            HermitianOperator::from_hermitian_part(self.register().clone(), &m)?,
            1e-9,
        )
    }
}

/// Normalized state vector.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    register: QuditRegister,
    amplitudes: CVector,
}

impl PureState {
    pub fn new(register: QuditRegister, amplitudes: CVector) -> Result<Self> {
        if amplitudes.len() != register.total_dim() {
            return Err(Error::DimensionMismatch {
                expected: register.total_dim(),
                found: amplitudes.len(),
            });
        }
        let n2 = amplitudes.norm_squared();
        if (n2 - 1.0).abs() > PURE_NORM_TOLERANCE {
            return Err(Error::NotNormalized(n2));
        }
        Ok(Self {
            register,
            amplitudes,
        })
    }

    /// Normalizes `amplitudes` first.
    pub fn normalized(register: QuditRegister, amplitudes: CVector) -> Result<Self> {
        let n = amplitudes.norm();
        if n == 0.0 {
            return Err(Error::NotNormalized(0.0));
        }
        Self::new(register, amplitudes.unscale(n))
    }

    /// Computational basis state from per-party digits.
    pub fn basis(register: QuditRegister, digits: &[usize]) -> Result<Self> {
        if digits.len() != register.num_parties() {
            return Err(Error::DimensionMismatch {
                expected: register.num_parties(),
                found: digits.len(),
            });
        }
        let mut idx = 0;
        for (p, &x) in digits.iter().enumerate() {
            if x >= register.dim_of(p) {
                return Err(Error::OutOfRange(format!("digit {x} for party {p}")));
            }
            idx = idx * register.dim_of(p) + x;
        }
        let mut v = CVector::zeros(register.total_dim());
        v[idx] = C64::new(1.0, 0.0);
        Self::new(register, v)
    }

    pub fn register(&self) -> &QuditRegister {
        &self.register
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    /// Amplitude of the basis state with the given digits.
    pub fn amplitude(&self, digits: &[usize]) -> C64 {
        let mut idx = 0;
        for (p, &x) in digits.iter().enumerate() {
            idx = idx * self.register.dim_of(p) + x;
        }
        self.amplitudes[idx]
    }

    pub fn density(&self) -> DensityOperator {
        DensityOperator::from_pure(self)
    }

    /// `|⟨self|other⟩|²`.
    pub fn fidelity(&self, other: &PureState) -> f64 {
        self.amplitudes.dotc(&other.amplitudes).norm_sqr()
    }

    /// Schmidt rank across the split `parties | rest`, counting singular values above `tol`.
    pub fn schmidt_rank(&self, parties: &[usize], tol: f64) -> Result<usize> {
        let parties = self.register.check_parties(parties)?;
        let split = IndexSplit::new(&self.register, &parties)?;
        let mut m = CMatrix::zeros(split.inner_dim(), split.outer_dim());
        for a in 0..split.inner_dim() {
            for r in 0..split.outer_dim() {
                m[(a, r)] = self.amplitudes[split.global(a, r)];
            }
        }
        Ok(m.singular_values().iter().filter(|&&s| s > tol).count())
    }
}

/// A split `M | M̄` of the parties, stored in canonical form (party 0 ∈ M).
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Bipartition {
    num_parties: usize,
    side: Vec<usize>,
}

impl Bipartition {
    /// Any nonempty proper subset; the canonical side containing party 0 is kept.
    pub fn new(num_parties: usize, parties: &[usize]) -> Result<Self> {
        let mut side: Vec<usize> = parties.to_vec();
        side.sort_unstable();
        side.dedup();
        if side.is_empty() || side.len() >= num_parties {
            return Err(Error::InvalidParties(format!(
                "{parties:?} is not a proper nonempty subset of {num_parties} parties"
            )));
        }
        if side.iter().any(|&p| p >= num_parties) {
            return Err(Error::InvalidParties(format!("{parties:?} out of range")));
        }
        if side[0] != 0 {
            side = (0..num_parties).filter(|p| !side.contains(p)).collect();
        }
        Ok(Self { num_parties, side })
    }

    /// All `2^(N-1) - 1` bipartitions, ordered by the bitmask of the side
    /// containing party 0.
    pub fn all(num_parties: usize) -> Vec<Bipartition> {
        if num_parties < 2 {
            return Vec::new();
        }
        let rest = num_parties - 1;
        (0..(1usize << rest) - 1)
            .map(|mask| {
                let mut side = vec![0];
                side.extend((0..rest).filter(|b| mask >> b & 1 == 1).map(|b| b + 1));
                Bipartition { num_parties, side }
            })
            .collect()
    }

    pub fn side(&self) -> &[usize] {
        &self.side
    }

    pub fn other_side(&self) -> Vec<usize> {
        (0..self.num_parties)
            .filter(|p| !self.side.contains(p))
            .collect()
    }

    pub fn num_parties(&self) -> usize {
        self.num_parties
    }

    pub fn label(&self) -> String {
        let name = |ps: &[usize]| ps.iter().map(|&p| party_name(p)).collect::<String>();
        format!("{}|{}", name(&self.side), name(&self.other_side()))
    }
}

/// `A`, `B`, … for the first 26 parties, `P26`, … afterwards.
pub fn party_name(p: usize) -> String {
    if p < 26 {
        ((b'A' + p as u8) as char).to_string()
    } else {
        format!("P{p}")
    }
}

/// Parses `A`, `b`, or a decimal index.
pub fn parse_party(s: &str) -> Option<usize> {
    let s = s.trim();
    if let Ok(n) = s.parse::<usize>() {
        return Some(n);
    }
    let mut chars = s.chars();
    match (chars.next(), chars.next()) {
        (Some(c), None) if c.is_ascii_alphabetic() => {
            Some((c.to_ascii_uppercase() as u8 - b'A') as usize)
        }
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn register_rejects_small_dims() {
        assert!(QuditRegister::new(vec![2, 1]).is_err());
        assert!(QuditRegister::new(vec![]).is_err());
        assert_eq!(QuditRegister::new(vec![2, 3, 2]).unwrap().total_dim(), 12);
    }

    #[test]
    fn hermitian_projection_and_rejection() {
        let r = QuditRegister::qubits(1);
        let mut m = CMatrix::identity(2, 2);
        m[(0, 1)] = C64::new(0.0, 1e-12);
        let h = HermitianOperator::new(r.clone(), m.clone()).unwrap();
        assert!(max_asymmetry(h.matrix()) == 0.0);
        m[(0, 1)] = C64::new(0.5, 0.0);
        assert!(matches!(
            HermitianOperator::new(r, m),
            Err(Error::NotHermitian(_))
        ));
    }

    #[test]
    fn bipartitions_are_canonical() {
        let all = Bipartition::all(3);
        assert_eq!(all.len(), 3);
        assert!(all.iter().all(|b| b.side()[0] == 0));
        assert_eq!(Bipartition::all(5).len(), 15);
        let b = Bipartition::new(3, &[1, 2]).unwrap();
        assert_eq!(b.side(), &[0]);
        assert_eq!(b.label(), "A|BC");
        assert!(Bipartition::new(3, &[0, 1, 2]).is_err());
    }

    #[test]
    fn density_checks() {
        let r = QuditRegister::qubits(1);
        let mut m = CMatrix::zeros(2, 2);
        m[(0, 0)] = C64::new(1.2, 0.0);
        m[(1, 1)] = C64::new(-0.2, 0.0);
        assert!(DensityOperator::new(r.clone(), m).is_err());
        let mixed = DensityOperator::maximally_mixed(r);
        assert!((mixed.purity() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn pure_state_norm_is_enforced() {
        let r = QuditRegister::qubits(1);
        let v = CVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(1.0, 0.0)]);
        assert!(PureState::new(r.clone(), v.clone()).is_err());
        let s = PureState::normalized(r, v).unwrap();
        assert!((s.amplitudes().norm_squared() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn party_names_round_trip() {
        for p in 0..10 {
            assert_eq!(parse_party(&party_name(p)), Some(p));
        }
        assert_eq!(parse_party("3"), Some(3));
    }
}
