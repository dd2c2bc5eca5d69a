//! The marginal-restricted witness program: minimize `tr(Wϱ)` over
//! `W = I/d + Σ_k w_k S_k` with `tr W = 1`, `S_k` ranging over traceless
//! strings supported inside pattern pairs, and `W` decomposable across every
//! bipartition.

mod pattern;

pub use pattern::{MarginalPattern, MarginalSet, MARGINAL_CONSISTENCY_TOLERANCE};

use serde::{Deserialize, Serialize};

use crate::conic::{
    self, ConicProgram, LinearFunctional, MapStep, MatrixExpr, SdpSolution, SolveStatus,
    Tolerances, NEGATIVITY_THRESHOLD,
};
use crate::error::{Error, Result};
use crate::io::MatrixJson;
use crate::operators::{
    full_operator_space, partial_transpose, Bipartition, CMatrix, DensityOperator,
    HermitianOperator, OperatorSubspace, QuditRegister,
};

/// Trace and subspace tolerance for witness validation.
pub const WITNESS_TRACE_TOLERANCE: f64 = 1e-8;
/// Allowed `‖W − P − Q^{T_M}‖` and negative eigenvalue of `P`, `Q`.
pub const CERTIFICATE_TOLERANCE: f64 = 1e-7;

/// Decomposition `W = P + Q^{T_M}` for one bipartition.
#[derive(Clone, Debug)]
pub struct Certificate {
    pub bipartition: Bipartition,
    pub p: HermitianOperator,
    pub q: HermitianOperator,
}

/// A decomposable witness with its support and certificates.
#[derive(Clone, Debug)]
pub struct Witness {
    register: QuditRegister,
    /// `None` means the full operator space.
    pattern: Option<MarginalPattern>,
    coefficients: Vec<f64>,
    operator: HermitianOperator,
    certificates: Vec<Certificate>,
}

impl Witness {
    /// Assembles `W` from coefficients over the support basis
    /// (index 0 is the identity).
    pub fn new(
        register: QuditRegister,
        pattern: Option<MarginalPattern>,
        coefficients: Vec<f64>,
        certificates: Vec<Certificate>,
    ) -> Result<Self> {
        if let Some(p) = &pattern {
            if p.register() != &register {
                return Err(Error::Pattern(
                    "pattern register differs from witness register".into(),
                ));
            }
        }
        let basis = support_basis(&register, pattern.as_ref())?;
        if coefficients.len() != basis.len() {
            return Err(Error::DimensionMismatch {
                expected: basis.len(),
                found: coefficients.len(),
            });
        }
        let operator = HermitianOperator::from_hermitian_part(
            register.clone(),
            &basis.synthesize(&coefficients),
        )?;
        for c in &certificates {
            if c.p.register() != &register || c.q.register() != &register {
                return Err(Error::InvalidRegister(
                    "certificate on the wrong register".into(),
                ));
            }
        }
        Ok(Self {
            register,
            pattern,
            coefficients,
            operator,
            certificates,
        })
    }

    pub fn register(&self) -> &QuditRegister {
        &self.register
    }

    pub fn pattern(&self) -> Option<&MarginalPattern> {
        self.pattern.as_ref()
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn operator(&self) -> &HermitianOperator {
        &self.operator
    }

    pub fn certificates(&self) -> &[Certificate] {
        &self.certificates
    }

    /// Basis the coefficients refer to.
    pub fn basis(&self) -> OperatorSubspace {
        support_basis(&self.register, self.pattern.as_ref()).expect("validated at construction")
    }

    /// `tr(Wϱ)`.
    pub fn evaluate(&self, rho: &DensityOperator) -> f64 {
        rho.expectation(&self.operator)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn support_basis(
    register: &QuditRegister,
    pattern: Option<&MarginalPattern>,
) -> Result<OperatorSubspace> {
    match pattern {
        Some(p) => Ok(p.subspace()),
        None => full_operator_space(register),
    }
}

#[derive(Serialize, Deserialize)]
struct CertificateJson {
    bipartition: Vec<usize>,
    p: MatrixJson,
    q: MatrixJson,
}

#[derive(Serialize, Deserialize)]
struct WitnessJson {
    dims: Vec<usize>,
    pattern: Option<MarginalPattern>,
    labels: Vec<String>,
    coefficients: Vec<f64>,
    certificates: Vec<CertificateJson>,
}

impl Serialize for Witness {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let basis = self.basis();
        WitnessJson {
            dims: self.register.dims().to_vec(),
            pattern: self.pattern.clone(),
            labels: (0..basis.len()).map(|k| basis.label(k)).collect(),
            coefficients: self.coefficients.clone(),
            certificates: self
                .certificates
                .iter()
                .map(|c| CertificateJson {
                    bipartition: c.bipartition.side().to_vec(),
                    p: (&c.p).into(),
                    q: (&c.q).into(),
                })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Witness {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let j = WitnessJson::deserialize(d)?;
        let register = QuditRegister::new(j.dims).map_err(D::Error::custom)?;
        let n = register.num_parties();
        let certificates = j
            .certificates
            .into_iter()
            .map(|c| {
                Ok(Certificate {
                    bipartition: Bipartition::new(n, &c.bipartition)?,
                    p: c.p.to_hermitian()?,
                    q: c.q.to_hermitian()?,
                })
            })
            .collect::<Result<Vec<_>>>()
            .map_err(D::Error::custom)?;
        Witness::new(register, j.pattern, j.coefficients, certificates).map_err(D::Error::custom)
    }
}

/// Sign classification of a witness value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Detection {
    /// Below the negativity threshold: genuine multiparticle entanglement.
    Detected,
    /// In `[threshold, 0)`.
    Undecided,
    NotDetected,
}

impl Detection {
    pub fn classify(value: f64) -> Self {
        if value < NEGATIVITY_THRESHOLD {
            Detection::Detected
        } else if value < 0.0 {
            Detection::Undecided
        } else {
            Detection::NotDetected
        }
    }
}

/// Result of a witness optimization.
#[derive(Clone, Debug, Serialize)]
pub struct WitnessOutcome {
    pub value: f64,
    pub detection: Detection,
    pub witness: Witness,
    /// Lower bound certified by the dual solution.
    pub dual_bound: Option<f64>,
    pub iterations: usize,
    pub backend: String,
}

/// Target of a witness optimization.
#[derive(Clone, Copy, Debug)]
pub enum WitnessTarget<'a> {
    State(&'a DensityOperator),
    Marginals(&'a MarginalSet),
}

impl<'a> From<&'a DensityOperator> for WitnessTarget<'a> {
    fn from(r: &'a DensityOperator) -> Self {
        WitnessTarget::State(r)
    }
}

impl<'a> From<&'a MarginalSet> for WitnessTarget<'a> {
    fn from(m: &'a MarginalSet) -> Self {
        WitnessTarget::Marginals(m)
    }
}

/// Expectations `tr(S_k ϱ)` of every support string.
fn expectations(target: WitnessTarget<'_>, basis: &OperatorSubspace) -> Result<Vec<f64>> {
    match target {
        WitnessTarget::State(rho) => {
            if rho.register() != basis.register() {
                return Err(Error::InvalidRegister(format!(
                    "state on {} but witness on {}",
                    rho.register().label(),
                    basis.register().label()
                )));
            }
            Ok((0..basis.len())
                .map(|k| basis.sparse(k).trace_with(rho.matrix()))
                .collect())
        }
        WitnessTarget::Marginals(m) => {
            if m.pattern().register() != basis.register() {
                return Err(Error::InvalidRegister(
                    "marginals on a different register".into(),
                ));
            }
            (0..basis.len()).map(|k| m.expectation(basis, k)).collect()
        }
    }
}

/// Handles to the variables of a witness program.
#[derive(Clone, Debug)]
pub struct WitnessProgram {
    pub program: ConicProgram,
    pub basis: OperatorSubspace,
    pub bipartitions: Vec<Bipartition>,
    pattern: Option<MarginalPattern>,
    w: conic::VarId,
    qs: Vec<conic::VarId>,
}

impl WitnessProgram {
    /// The program minimizing `Σ_k w_k e_k` for the given string expectations
    /// (`e_0` is the expectation of the identity, normally 1).
    pub fn build(
        register: &QuditRegister,
        pattern: Option<&MarginalPattern>,
        expectations: &[f64],
    ) -> Result<Self> {
        if register.num_parties() < 2 {
            return Err(Error::InvalidRegister(
                "a witness needs at least two parties".into(),
            ));
        }
        let basis = support_basis(register, pattern)?;
        if expectations.len() != basis.len() {
            return Err(Error::DimensionMismatch {
                expected: basis.len(),
                found: expectations.len(),
            });
        }
        let d = register.total_dim();
        let inv_d = 1.0 / d as f64;
        let mut program = ConicProgram::new("marginal witness");
        let w = program.add_real("w", basis.len() - 1);
        let mut objective = LinearFunctional::new().constant(expectations[0] * inv_d);
        for (k, &e) in expectations.iter().enumerate().skip(1) {
            objective = objective.real(w, k - 1, e);
        }
        program.set_objective(objective);

        let mut w_expr = MatrixExpr::new(d).constant(&CMatrix::identity(d, d).scale(inv_d));
        for k in 1..basis.len() {
            w_expr = w_expr.scalar(w, k - 1, basis.sparse(k));
        }
        let bipartitions = Bipartition::all(register.num_parties());
        let mut qs = Vec::with_capacity(bipartitions.len());
        for m in &bipartitions {
            let q = program.add_hermitian(format!("Q[{}]", m.label()), d);
            qs.push(q);
            program.add_psd(
                format!("Q[{}]", m.label()),
                MatrixExpr::new(d).mapped(q, 1.0, register.clone(), vec![]),
            );
            program.add_psd(
                format!("P[{}]", m.label()),
                w_expr.clone().mapped(
                    q,
                    -1.0,
                    register.clone(),
                    vec![MapStep::PartialTranspose {
                        parties: m.side().to_vec(),
                    }],
                ),
            );
        }
        Ok(Self {
            program,
            basis,
            bipartitions,
            pattern: pattern.cloned(),
            w,
            qs,
        })
    }

    /// Witness and certificates from a solution of this program.
    pub fn extract(&self, solution: &SdpSolution) -> Result<Witness> {
        let register = self.basis.register().clone();
        let d = register.total_dim();
        let mut coefficients = Vec::with_capacity(self.basis.len());
        coefficients.push(1.0 / d as f64);
        coefficients.extend_from_slice(solution.real(self.w));
        let wmat = self.basis.synthesize(&coefficients);
        let wop = HermitianOperator::from_hermitian_part(register.clone(), &wmat)?;
        let certificates = self
            .bipartitions
            .iter()
            .zip(&self.qs)
            .map(|(m, &q)| {
                let q = HermitianOperator::from_hermitian_part(
                    register.clone(),
                    solution.hermitian(q),
                )?;
                let p = wop.sub(&partial_transpose(&q, m.side())?)?;
                Ok(Certificate {
                    bipartition: m.clone(),
                    p,
                    q,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Witness::new(register, self.pattern.clone(), coefficients, certificates)
    }
}

fn optimize(
    register: &QuditRegister,
    pattern: Option<&MarginalPattern>,
    target: WitnessTarget<'_>,
) -> Result<WitnessOutcome> {
    let basis = support_basis(register, pattern)?;
    let e = expectations(target, &basis)?;
    let wp = WitnessProgram::build(register, pattern, &e)?;
    let solution = conic::solve(&wp.program, &Tolerances::default())?;
    if solution.status != SolveStatus::Optimal {
        return Err(Error::Solver(format!(
            "witness program ended with status {:?}: {}",
            solution.status, solution.message
        )));
    }
    let witness = wp.extract(&solution)?;
    Ok(WitnessOutcome {
        value: solution.objective,
        detection: Detection::classify(solution.objective),
        witness,
        dual_bound: solution.dual_objective,
        iterations: solution.iterations,
        backend: solution.backend,
    })
}

/// Most negative value of a pattern-supported decomposable witness on the
/// target. Only expectations of pattern-supported operators enter.
pub fn min_witness_value<'a>(
    target: impl Into<WitnessTarget<'a>>,
    pattern: &MarginalPattern,
) -> Result<WitnessOutcome> {
    let target = target.into();
    match target {
        WitnessTarget::State(rho) if rho.register() != pattern.register() => {
            return Err(Error::Pattern(
                "state register differs from pattern register".into(),
            ));
        }
        WitnessTarget::Marginals(m) if !m.pattern().covers(pattern) => {
            return Err(Error::Pattern(format!(
                "marginals for {} do not cover {}",
                m.pattern().label(),
                pattern.label()
            )));
        }
        _ => {}
    }
    optimize(pattern.register(), Some(pattern), target)
}

/// The same program over the full operator space.
pub fn min_witness_value_unrestricted(rho: &DensityOperator) -> Result<WitnessOutcome> {
    optimize(rho.register(), None, WitnessTarget::State(rho))
}

/// `Σ_k w_k ⟨S_k⟩`, each expectation read off a pair marginal.
pub fn witness_value(witness: &Witness, marginals: &MarginalSet) -> Result<f64> {
    let pattern = witness
        .pattern()
        .ok_or_else(|| Error::Pattern("an unrestricted witness needs the global state".into()))?;
    if !marginals.pattern().covers(pattern) {
        return Err(Error::Pattern(format!(
            "marginals for {} do not cover {}",
            marginals.pattern().label(),
            pattern.label()
        )));
    }
    let basis = witness.basis();
    let mut total = 0.0;
    for (k, &c) in witness.coefficients().iter().enumerate() {
        if c != 0.0 {
            total += c * marginals.expectation(&basis, k)?;
        }
    }
    Ok(total)
}

/// Residuals of one bipartition certificate.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CertificateCheck {
    pub bipartition: String,
    /// Frobenius norm of `W − P − Q^{T_M}`.
    pub decomposition_residual: f64,
    pub p_min_eigenvalue: f64,
    pub q_min_eigenvalue: f64,
    pub passed: bool,
}

/// Independent re-verification of every witness invariant.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WitnessValidation {
    pub trace: f64,
    pub trace_ok: bool,
    pub projection_residual: f64,
    pub projection_ok: bool,
    pub certificates: Vec<CertificateCheck>,
    /// Bipartitions without a certificate.
    pub missing: Vec<String>,
    pub passed: bool,
}

pub fn validate_witness(witness: &Witness) -> WitnessValidation {
    let w = witness.operator();
    let trace = w.trace();
    let trace_ok = (trace - 1.0).abs() <= WITNESS_TRACE_TOLERANCE;
    let projection_residual = witness.basis().projection_residual(w.matrix());
    let projection_ok = projection_residual < WITNESS_TRACE_TOLERANCE;
    let bipartitions = Bipartition::all(witness.register().num_parties());
    let mut certificates = Vec::new();
    let mut missing = Vec::new();
    for m in &bipartitions {
        let Some(c) = witness.certificates().iter().find(|c| &c.bipartition == m) else {
            missing.push(m.label());
            continue;
        };
        let decomposition_residual = match partial_transpose(&c.q, m.side()) {
            Ok(qt) => (w.matrix() - c.p.matrix() - qt.matrix()).norm(),
            Err(_) => f64::INFINITY,
        };
        let p_min_eigenvalue = c.p.min_eigenvalue();
        let q_min_eigenvalue = c.q.min_eigenvalue();
        let passed = decomposition_residual <= CERTIFICATE_TOLERANCE
            && p_min_eigenvalue >= -CERTIFICATE_TOLERANCE
            && q_min_eigenvalue >= -CERTIFICATE_TOLERANCE;
        certificates.push(CertificateCheck {
            bipartition: m.label(),
            decomposition_residual,
            p_min_eigenvalue,
            q_min_eigenvalue,
            passed,
        });
    }
    let passed =
        trace_ok && projection_ok && missing.is_empty() && certificates.iter().all(|c| c.passed);
    WitnessValidation {
        trace,
        trace_ok,
        projection_residual,
        projection_ok,
        certificates,
        missing,
        passed,
    }
}

/// `I/d` with trivial certificates `P = W`, `Q = 0`.
pub fn trivial_witness(pattern: &MarginalPattern) -> Witness {
    let reg = pattern.register().clone();
    let d = reg.total_dim();
    let mut coefficients = vec![0.0; pattern.subspace().len()];
    coefficients[0] = 1.0 / d as f64;
    let w = HermitianOperator::identity(reg.clone()).scaled(1.0 / d as f64);
    let certificates = Bipartition::all(reg.num_parties())
        .into_iter()
        .map(|m| Certificate {
            bipartition: m,
            p: w.clone(),
            q: HermitianOperator::zero(reg.clone()),
        })
        .collect();
    Witness::new(reg, Some(pattern.clone()), coefficients, certificates)
        .expect("identity witness is well formed")
}
