//! Semidefinite programs over complex Hermitian matrix variables.
//!
//! A [`ConicProgram`] is built from declared variables, linear equalities,
//! Hermitian matrix expressions that must be positive semidefinite, and a
//! linear objective to minimize. [`solve`] lowers it to a linear matrix
//! inequality in free real coordinates, hands it to a [`Backend`], and then
//! re-checks the returned point against the original program.

mod embed;
mod ipm;
mod lower;
mod toy;

pub use embed::{real_embedding, real_embedding_matrix, structured_dual};
pub use ipm::InteriorPoint;
pub use lower::{lower, LoweredBlock, LoweredProgram};
pub use toy::ToyBackend;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::{
    hermitian_eigenvalues, max_asymmetry, partial_trace_matrix, partial_transpose_matrix,
    project_party_matrix, trace_product, CMatrix, QuditRegister, SparseCMatrix, C64,
};

/// Environment variable selecting the backend used by [`solve`].
pub const BACKEND_ENV: &str = "MARGINAL_GME_BACKEND";
/// Values below this count as negative.
pub const NEGATIVITY_THRESHOLD: f64 = -1e-7;
/// Residual bound an optimal solution must meet after re-verification.
pub const RESIDUAL_TOLERANCE: f64 = 1e-7;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VarId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariableKind {
    /// A vector of free real scalars.
    Real { len: usize },
    /// A `dim × dim` complex Hermitian matrix.
    Hermitian { dim: usize },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub kind: VariableKind,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctionalTerm {
    /// `coeff · x[index]`
    Real {
        var: VarId,
        index: usize,
        coeff: f64,
    },
    /// `Re tr(matrix · X)`
    Hermitian {
        var: VarId,
        #[serde(with = "crate::io::cmatrix")]
        matrix: CMatrix,
    },
}

/// `constant + Σ terms`.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct LinearFunctional {
    pub constant: f64,
    pub terms: Vec<FunctionalTerm>,
}

impl LinearFunctional {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn constant(mut self, c: f64) -> Self {
        self.constant += c;
        self
    }

    pub fn real(mut self, var: VarId, index: usize, coeff: f64) -> Self {
        self.terms.push(FunctionalTerm::Real { var, index, coeff });
        self
    }

    pub fn hermitian(mut self, var: VarId, matrix: CMatrix) -> Self {
        self.terms.push(FunctionalTerm::Hermitian { var, matrix });
        self
    }
}

/// One step of a linear map applied to a Hermitian variable. Party indices
/// refer to the register as it stands before the step.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapStep {
    PartialTrace {
        keep: Vec<usize>,
    },
    PartialTranspose {
        parties: Vec<usize>,
    },
    /// `⟨c| · |c⟩` on one party, which is removed from the register.
    Project {
        party: usize,
        vector: Vec<C64>,
    },
}

impl MapStep {
    pub(crate) fn output_register(&self, reg: &QuditRegister) -> Result<QuditRegister> {
        match self {
            MapStep::PartialTrace { keep } => reg.subregister(keep),
            MapStep::PartialTranspose { parties } => {
                reg.check_parties(parties)?;
                Ok(reg.clone())
            }
            MapStep::Project { party, vector } => {
                if *party >= reg.num_parties() || reg.num_parties() < 2 {
                    return Err(Error::Program(format!("cannot project party {party}")));
                }
                if vector.len() != reg.dim_of(*party) {
                    return Err(Error::DimensionMismatch {
                        expected: reg.dim_of(*party),
                        found: vector.len(),
                    });
                }
                reg.subregister(&reg.complement(&[*party]))
            }
        }
    }

    fn apply_dense(&self, m: &CMatrix, reg: &QuditRegister) -> Result<CMatrix> {
        match self {
            MapStep::PartialTrace { keep } => partial_trace_matrix(m, reg, keep),
            MapStep::PartialTranspose { parties } => {
                if parties.is_empty() {
                    Ok(m.clone())
                } else {
                    partial_transpose_matrix(m, reg, parties)
                }
            }
            MapStep::Project { party, vector } => project_party_matrix(m, reg, *party, vector),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixTerm {
    /// `x[index] · matrix` for a real variable.
    Scalar {
        var: VarId,
        index: usize,
        matrix: SparseCMatrix,
    },
    /// `coeff · (steps applied to X)` for a Hermitian variable on `register`.
    Mapped {
        var: VarId,
        coeff: f64,
        register: QuditRegister,
        steps: Vec<MapStep>,
    },
}

/// A Hermitian matrix affine in the program variables.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MatrixExpr {
    pub dim: usize,
    #[serde(with = "crate::io::cmatrix")]
    pub constant: CMatrix,
    pub terms: Vec<MatrixTerm>,
}

impl MatrixExpr {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            constant: CMatrix::zeros(dim, dim),
            terms: Vec::new(),
        }
    }

    pub fn constant(mut self, m: &CMatrix) -> Self {
        self.constant += m;
        self
    }

    pub fn scalar(mut self, var: VarId, index: usize, matrix: SparseCMatrix) -> Self {
        self.terms.push(MatrixTerm::Scalar { var, index, matrix });
        self
    }

    pub fn mapped(
        mut self,
        var: VarId,
        coeff: f64,
        register: QuditRegister,
        steps: Vec<MapStep>,
    ) -> Self {
        self.terms.push(MatrixTerm::Mapped {
            var,
            coeff,
            register,
            steps,
        });
        self
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Equality {
    pub lhs: LinearFunctional,
    pub rhs: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PsdConstraint {
    pub name: String,
    pub expr: MatrixExpr,
}

/// Minimize a linear objective subject to linear equalities and PSD
/// memberships of affine Hermitian matrix expressions.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConicProgram {
    pub name: String,
    pub variables: Vec<Variable>,
    pub equalities: Vec<Equality>,
    pub psd_constraints: Vec<PsdConstraint>,
    pub objective: LinearFunctional,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariableValue {
    Real(Vec<f64>),
    Hermitian(#[serde(with = "crate::io::cmatrix")] CMatrix),
}

impl ConicProgram {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            variables: Vec::new(),
            equalities: Vec::new(),
            psd_constraints: Vec::new(),
            objective: LinearFunctional::new(),
        }
    }

    pub fn add_real(&mut self, name: impl Into<String>, len: usize) -> VarId {
        self.variables.push(Variable {
            name: name.into(),
            kind: VariableKind::Real { len },
        });
        VarId(self.variables.len() - 1)
    }

    pub fn add_hermitian(&mut self, name: impl Into<String>, dim: usize) -> VarId {
        self.variables.push(Variable {
            name: name.into(),
            kind: VariableKind::Hermitian { dim },
        });
        VarId(self.variables.len() - 1)
    }

    pub fn add_equality(&mut self, lhs: LinearFunctional, rhs: f64) {
        self.equalities.push(Equality { lhs, rhs });
    }

    pub fn add_psd(&mut self, name: impl Into<String>, expr: MatrixExpr) {
        self.psd_constraints.push(PsdConstraint {
            name: name.into(),
            expr,
        });
    }

    pub fn set_objective(&mut self, objective: LinearFunctional) {
        self.objective = objective;
    }

    /// Self-describing JSON dump for debugging.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    fn var(&self, id: VarId) -> Result<&Variable> {
        self.variables
            .get(id.0)
            .ok_or_else(|| Error::Program(format!("undeclared variable {}", id.0)))
    }

    fn check_functional(&self, f: &LinearFunctional) -> Result<()> {
        for t in &f.terms {
            match t {
                FunctionalTerm::Real { var, index, .. } => match self.var(*var)?.kind {
                    VariableKind::Real { len } if *index < len => {}
                    _ => return Err(Error::Program(format!("bad real term on {}", var.0))),
                },
                FunctionalTerm::Hermitian { var, matrix } => match self.var(*var)?.kind {
                    VariableKind::Hermitian { dim }
                        if matrix.nrows() == dim && matrix.ncols() == dim => {}
                    _ => return Err(Error::Program(format!("bad matrix term on {}", var.0))),
                },
            }
        }
        Ok(())
    }

    /// Checks that every expression refers to declared variables with
    /// matching shapes and is Hermitian.
    pub fn validate(&self) -> Result<()> {
        self.check_functional(&self.objective)?;
        for e in &self.equalities {
            self.check_functional(&e.lhs)?;
        }
        for c in &self.psd_constraints {
            let e = &c.expr;
            let herm_tol = 1e-10 * (1.0 + e.constant.norm());
            if e.constant.nrows() != e.dim || max_asymmetry(&e.constant) > herm_tol {
                return Err(Error::Program(format!(
                    "constant of `{}` malformed",
                    c.name
                )));
            }
            for t in &e.terms {
                match t {
                    MatrixTerm::Scalar { var, index, matrix } => {
                        match self.var(*var)?.kind {
                            VariableKind::Real { len } if *index < len => {}
                            _ => {
                                return Err(Error::Program(format!(
                                    "bad scalar term in `{}`",
                                    c.name
                                )))
                            }
                        }
                        if matrix.dim() != e.dim || matrix.max_asymmetry() > 1e-12 {
                            return Err(Error::Program(format!(
                                "scalar coefficient in `{}` is not a Hermitian {}×{} matrix",
                                c.name, e.dim, e.dim
                            )));
                        }
                    }
                    MatrixTerm::Mapped {
                        var,
                        register,
                        steps,
                        ..
                    } => {
                        let dim = match self.var(*var)?.kind {
                            VariableKind::Hermitian { dim } => dim,
                            _ => {
                                return Err(Error::Program(format!(
                                    "mapped term in `{}` needs a Hermitian variable",
                                    c.name
                                )))
                            }
                        };
                        if register.total_dim() != dim {
                            return Err(Error::Program(format!(
                                "register {} does not match variable dimension {dim}",
                                register.label()
                            )));
                        }
                        let mut reg = register.clone();
                        for s in steps {
                            reg = s.output_register(&reg)?;
                        }
                        if reg.total_dim() != e.dim {
                            return Err(Error::Program(format!(
                                "mapped term in `{}` has output dimension {}",
                                c.name,
                                reg.total_dim()
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Evaluates a functional at given variable values.
    pub fn evaluate_functional(&self, f: &LinearFunctional, values: &[VariableValue]) -> f64 {
        let mut acc = f.constant;
        for t in &f.terms {
            match t {
                FunctionalTerm::Real { var, index, coeff } => {
                    if let VariableValue::Real(v) = &values[var.0] {
                        acc += coeff * v[*index];
                    }
                }
                FunctionalTerm::Hermitian { var, matrix } => {
                    if let VariableValue::Hermitian(x) = &values[var.0] {
                        acc += trace_product(matrix, x);
                    }
                }
            }
        }
        acc
    }

    /// Evaluates a matrix expression densely, independent of the lowering.
    pub fn evaluate_expr(&self, e: &MatrixExpr, values: &[VariableValue]) -> Result<CMatrix> {
        let mut m = e.constant.clone();
        for t in &e.terms {
            match t {
                MatrixTerm::Scalar { var, index, matrix } => {
                    if let VariableValue::Real(v) = &values[var.0] {
                        matrix.add_scaled_to(&mut m, C64::new(v[*index], 0.0));
                    }
                }
                MatrixTerm::Mapped {
                    var,
                    coeff,
                    register,
                    steps,
                } => {
                    if let VariableValue::Hermitian(x) = &values[var.0] {
                        let mut reg = register.clone();
                        let mut cur = x.clone();
                        for s in steps {
                            cur = s.apply_dense(&cur, &reg)?;
                            reg = s.output_register(&reg)?;
                        }
                        m += cur.map(|z| z * *coeff);
                    }
                }
            }
        }
        Ok(m)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Relative primal and dual infeasibility.
    pub feasibility: f64,
    /// Relative duality gap.
    pub gap: f64,
    pub max_iterations: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            feasibility: 1e-8,
            gap: 1e-8,
            max_iterations: 120,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NumericalFailure,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    pub max_equality_violation: f64,
    pub min_psd_eigenvalue: f64,
    /// Smallest eigenvalue of each PSD constraint, in declaration order.
    pub psd_min_eigenvalues: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SdpSolution {
    pub status: SolveStatus,
    pub objective: f64,
    /// Lower bound from the dual certificate, when one is available.
    pub dual_objective: Option<f64>,
    pub values: Vec<VariableValue>,
    pub residuals: Residuals,
    /// Dual matrices (one per PSD constraint) when the backend provides them.
    #[serde(with = "crate::io::cmatrix_vec")]
    pub duals: Option<Vec<CMatrix>>,
    pub iterations: usize,
    pub backend: String,
    pub message: String,
}

impl SdpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    pub fn real(&self, id: VarId) -> &[f64] {
        match &self.values[id.0] {
            VariableValue::Real(v) => v,
            VariableValue::Hermitian(_) => panic!("variable {} is Hermitian", id.0),
        }
    }

    pub fn hermitian(&self, id: VarId) -> &CMatrix {
        match &self.values[id.0] {
            VariableValue::Hermitian(m) => m,
            VariableValue::Real(_) => panic!("variable {} is real", id.0),
        }
    }

    /// Converts a non-optimal status into an error.
    pub fn require_optimal(self) -> Result<Self> {
        match self.status {
            SolveStatus::Optimal => Ok(self),
            SolveStatus::Infeasible => Err(Error::Infeasible(self.message)),
            SolveStatus::Unbounded => Err(Error::Solver(format!("unbounded: {}", self.message))),
            SolveStatus::NumericalFailure => Err(Error::Solver(self.message)),
        }
    }
}

/// What a backend returns for a lowered program.
#[derive(Clone, Debug)]
pub struct BackendResult {
    pub status: SolveStatus,
    /// Free coordinates of the lowered program.
    pub y: Vec<f64>,
    /// Complex dual matrix per lowered block.
    pub duals: Option<Vec<CMatrix>>,
    pub iterations: usize,
    pub message: String,
}

/// A solver for lowered programs: minimize `c·y` subject to
/// `F_k(y) = F_k0 + Σ y_l F_kl ⪰ 0` for every block `k`.
pub trait Backend: Send + Sync {
    fn name(&self) -> &'static str;
    fn solve_lowered(&self, problem: &LoweredProgram, tol: &Tolerances) -> BackendResult;
}

/// Backend named by [`BACKEND_ENV`] (`ipm` or `toy`); defaults to the
/// interior-point solver.
pub fn default_backend() -> Result<Box<dyn Backend>> {
    match std::env::var(BACKEND_ENV).ok().as_deref() {
        None | Some("") | Some("ipm") => Ok(Box::new(InteriorPoint)),
        Some("toy") => Ok(Box::new(ToyBackend::default())),
        Some(other) => Err(Error::Config(format!("unknown backend `{other}`"))),
    }
}

/// Solves with the default backend.
pub fn solve(program: &ConicProgram, tol: &Tolerances) -> Result<SdpSolution> {
    let backend = default_backend()?;
    solve_with(program, tol, backend.as_ref())
}

/// Lowers, solves, and re-verifies. Solver breakdowns surface as a status,
/// only malformed programs are errors.
pub fn solve_with(
    program: &ConicProgram,
    tol: &Tolerances,
    backend: &dyn Backend,
) -> Result<SdpSolution> {
    program.validate()?;
    let lowered = lower(program)?;
    let result = match lowered.trivial_status() {
        Some((status, message)) => BackendResult {
            status,
            y: vec![0.0; lowered.num_vars()],
            duals: None,
            iterations: 0,
            message,
        },
        None => backend.solve_lowered(&lowered, tol),
    };
    let values = lowered.recover(&result.y);
    let objective = program.evaluate_functional(&program.objective, &values);
    let residuals = residuals(program, &values)?;
    let (duals, dual_objective) = match &result.duals {
        Some(d) if result.status == SolveStatus::Optimal => {
            let full = lowered.expand_duals(d, program.psd_constraints.len());
            let dobj = lowered.dual_objective(d);
            (Some(full), Some(dobj))
        }
        _ => (None, None),
    };
    let mut status = result.status;
    let mut message = result.message;
    if status == SolveStatus::Optimal
        && (residuals.max_equality_violation > RESIDUAL_TOLERANCE
            || residuals.min_psd_eigenvalue < -RESIDUAL_TOLERANCE)
    {
        status = SolveStatus::NumericalFailure;
        message = format!(
            "re-verification failed: equality violation {:.2e}, min eigenvalue {:.2e}",
            residuals.max_equality_violation, residuals.min_psd_eigenvalue
        );
    }
    Ok(SdpSolution {
        status,
        objective,
        dual_objective,
        values,
        residuals,
        duals,
        iterations: result.iterations,
        backend: backend.name().to_string(),
        message,
    })
}

/// Equality violations and PSD eigenvalues recomputed from the values.
pub fn residuals(program: &ConicProgram, values: &[VariableValue]) -> Result<Residuals> {
    let max_equality_violation = program
        .equalities
        .iter()
        .map(|e| (program.evaluate_functional(&e.lhs, values) - e.rhs).abs())
        .fold(0.0, f64::max);
    let psd_min_eigenvalues = program
        .psd_constraints
        .iter()
        .map(|c| {
            let m = program.evaluate_expr(&c.expr, values)?;
            Ok(hermitian_eigenvalues(&m).first().copied().unwrap_or(0.0))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(Residuals {
        max_equality_violation,
        min_psd_eigenvalue: psd_min_eigenvalues
            .iter()
            .copied()
            .reduce(f64::min)
            .unwrap_or(0.0),
        psd_min_eigenvalues,
    })
}

#[cfg(test)]
mod tests;
