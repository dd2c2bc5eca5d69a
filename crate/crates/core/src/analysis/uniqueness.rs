use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conic::{self, ConicProgram, LinearFunctional, MatrixExpr, SolveStatus, Tolerances};
use crate::error::{Error, Result};
use crate::operators::{
    complement_subspace, trace_product, CMatrix, HermitianOperator, OperatorSubspace,
    SparseCMatrix, C64,
};
use crate::witness::MarginalSet;

/// Ranges below this count as zero.
pub const UNIQUE_THRESHOLD: f64 = 1e-6;
/// Ranges at or above this are genuine; in between the verdict is inconclusive.
pub const NON_UNIQUE_THRESHOLD: f64 = 1e-4;
/// Eigenvalues of the central compatible state above this span its face.
const FACE_EIGEN_TOLERANCE: f64 = 1e-7;
/// Relative eigenvalue cutoff for the null space of the constraint map.
const RANK_TOLERANCE: f64 = 1e-10;
/// Gap tolerance of the zero-objective program for the central state.
const CENTRAL_GAP: f64 = 1e-6;
/// Directions whose normalized overlap with the hull is below this are skipped.
const OVERLAP_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Unique,
    Inconclusive,
    NonUnique,
}

impl Verdict {
    fn of(range: f64) -> Self {
        if range < UNIQUE_THRESHOLD {
            Verdict::Unique
        } else if range < NON_UNIQUE_THRESHOLD {
            Verdict::Inconclusive
        } else {
            Verdict::NonUnique
        }
    }
}

/// `min` and `max` of `tr(Xϱ)` over compatible states.
#[derive(Clone, Debug, Serialize)]
pub struct DirectionRange {
    pub label: String,
    pub min: f64,
    pub max: f64,
    pub range: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct UniquenessReport {
    pub max_range: f64,
    pub verdict: Verdict,
    /// Direction attaining `max_range`.
    pub direction: Option<String>,
    pub complement_dimension: usize,
    /// Rank of the central compatible state.
    pub face_rank: usize,
    /// Dimension of the affine hull of the compatible set.
    pub hull_dimension: usize,
    /// Largest deviation of the central state from the given marginals.
    pub central_residual: f64,
    pub solved: Vec<DirectionRange>,
}

/// The compatible set as `V (M_c + Σ_i t_i N_i) V†` with
/// `M_c + Σ_i t_i N_i ⪰ 0`: `M_c` is a central compatible state in the
/// coordinates of its support `V`, and the `N_i` span the directions that
/// keep every pattern expectation fixed.
struct CompatibleSet {
    v: CMatrix,
    central: CMatrix,
    face_central: CMatrix,
    face_dirs: Vec<CMatrix>,
    residual: f64,
}

impl CompatibleSet {
    fn new(marginals: &MarginalSet, basis: &OperatorSubspace) -> Result<Self> {
        let central = central_state(marginals, basis)?;
        let mut residual: f64 = 0.0;
        for k in 0..basis.len() {
            let e = marginals.expectation(basis, k)?;
            residual = residual.max((basis.sparse(k).trace_with(&central) - e).abs());
        }
        let eig = central.clone().symmetric_eigen();
        let cols: Vec<usize> = (0..eig.eigenvalues.len())
            .filter(|&i| eig.eigenvalues[i] > FACE_EIGEN_TOLERANCE)
            .collect();
        let d = central.nrows();
        let r = cols.len();
        let v = CMatrix::from_fn(d, r, |i, j| eig.eigenvectors[(i, cols[j])]);
        let face_central = v.adjoint() * &central * &v;
        let e = face_basis(r);
        let lifted: Vec<CMatrix> = e.iter().map(|m| &v * m * v.adjoint()).collect();
        let a = DMatrix::<f64>::from_fn(basis.len(), e.len(), |k, p| {
            basis.sparse(k).trace_with(&lifted[p])
        });
        let es = (a.transpose() * &a).symmetric_eigen();
        let top = es.eigenvalues.iter().cloned().fold(0.0, f64::max).max(1.0);
        let face_dirs = (0..es.eigenvalues.len())
            .filter(|&i| es.eigenvalues[i] <= RANK_TOLERANCE * top)
            .map(|i| {
                let n = es.eigenvectors.column(i);
                e.iter()
                    .enumerate()
                    .fold(CMatrix::zeros(r, r), |acc, (p, ep)| {
                        acc + ep * C64::new(n[p], 0.0)
                    })
            })
            .collect();
        Ok(Self {
            v,
            central,
            face_central,
            face_dirs,
            residual,
        })
    }

    fn rank(&self) -> usize {
        self.v.ncols()
    }

    /// `tr(X V N_i V†)` for every hull direction.
    fn overlaps(&self, x: &CMatrix) -> Vec<f64> {
        let xf = self.v.adjoint() * x * &self.v;
        self.face_dirs
            .iter()
            .map(|n| trace_product(&xf, n))
            .collect()
    }

    fn range(&self, label: String, x: &CMatrix) -> Result<DirectionRange> {
        let base = trace_product(x, &self.central);
        let c = self.overlaps(x);
        if c.iter().all(|ci| ci.abs() <= OVERLAP_TOLERANCE * 1e-3) {
            return Ok(DirectionRange {
                label,
                min: base,
                max: base,
                range: 0.0,
            });
        }
        let min = self.extreme(&c, 1.0)?;
        let max = -self.extreme(&c, -1.0)?;
        Ok(DirectionRange {
            label,
            min: base + min,
            max: base + max,
            range: max - min,
        })
    }

    /// `min Σ_i s·c_i t_i` over the face.
    fn extreme(&self, c: &[f64], s: f64) -> Result<f64> {
        let r = self.rank();
        let mut program = ConicProgram::new("compatible face");
        let t = program.add_real("t", self.face_dirs.len());
        let mut objective = LinearFunctional::new();
        let mut expr = MatrixExpr::new(r).constant(&self.face_central);
        for (i, n) in self.face_dirs.iter().enumerate() {
            objective = objective.real(t, i, s * c[i]);
            expr = expr.scalar(t, i, sparse(n));
        }
        program.set_objective(objective);
        program.add_psd("face", expr);
        let sol = conic::solve(&program, &Tolerances::default())?;
        match sol.status {
            SolveStatus::Optimal => Ok(sol.objective),
            st => Err(Error::Solver(format!(
                "compatible face program: {st:?}: {}",
                sol.message
            ))),
        }
    }
}

fn sparse(m: &CMatrix) -> SparseCMatrix {
    let mut entries = Vec::new();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if m[(i, j)] != C64::new(0.0, 0.0) {
                entries.push((i, j, m[(i, j)]));
            }
        }
    }
    SparseCMatrix::from_entries(m.nrows(), entries)
}

/// A compatible state in the relative interior of the compatible set: the
/// interior-point iterate for a zero objective.
fn central_state(marginals: &MarginalSet, basis: &OperatorSubspace) -> Result<CMatrix> {
    let reg = marginals.pattern().register();
    let d = reg.total_dim();
    let mut program = ConicProgram::new("compatible states");
    let rho = program.add_hermitian("rho", d);
    for k in 0..basis.len() {
        let e = marginals.expectation(basis, k)?;
        program.add_equality(LinearFunctional::new().hermitian(rho, basis.dense(k)), e);
    }
    program.add_psd(
        "rho",
        MatrixExpr::new(d).mapped(rho, 1.0, reg.clone(), vec![]),
    );
    program.set_objective(LinearFunctional::new());
    // The objective is zero, so the gap only measures centering.
    let tol = Tolerances {
        gap: CENTRAL_GAP,
        ..Tolerances::default()
    };
    let sol = conic::solve(&program, &tol)?;
    match sol.status {
        SolveStatus::Optimal => Ok(sol.hermitian(rho).clone()),
        SolveStatus::Infeasible => Err(Error::Infeasible(format!(
            "no global state has these marginals: {}",
            sol.message
        ))),
        s => Err(Error::Solver(format!(
            "compatibility program: {s:?}: {}",
            sol.message
        ))),
    }
}

/// Hilbert–Schmidt orthonormal basis of `r × r` Hermitian matrices.
fn face_basis(r: usize) -> Vec<CMatrix> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let unit = |i: usize, j: usize, z: C64| {
        let mut m = CMatrix::zeros(r, r);
        m[(i, j)] = z;
        m
    };
    let mut out = Vec::with_capacity(r * r);
    for i in 0..r {
        out.push(unit(i, i, C64::new(1.0, 0.0)));
        for j in i + 1..r {
            out.push(unit(i, j, C64::new(s, 0.0)) + unit(j, i, C64::new(s, 0.0)));
            out.push(unit(i, j, C64::new(0.0, s)) + unit(j, i, C64::new(0.0, -s)));
        }
    }
    out
}

/// Range of `tr(Xϱ)` over states compatible with `marginals`.
pub fn range_along(marginals: &MarginalSet, x: &HermitianOperator) -> Result<DirectionRange> {
    if x.register() != marginals.pattern().register() {
        return Err(Error::InvalidRegister(
            "direction on a different register".into(),
        ));
    }
    let basis = marginals.pattern().subspace();
    CompatibleSet::new(marginals, &basis)?.range("custom".into(), x.matrix())
}

/// Largest spread of `tr(Xϱ)` over compatible states, `X` ranging over the
/// normalized operator strings outside the pattern. Strings orthogonal to
/// the affine hull of the compatible set are constant on it and skipped.
pub fn compatibility_range(marginals: &MarginalSet) -> Result<UniquenessReport> {
    let pattern = marginals.pattern();
    let basis = pattern.subspace();
    let complement = complement_subspace(pattern.register(), pattern.pairs())?;
    let set = CompatibleSet::new(marginals, &basis)?;
    let normalized =
        |j: usize| complement.dense(j) * C64::new(1.0 / complement.norm_sq(j).sqrt(), 0.0);
    let candidates: Vec<usize> = (0..complement.len())
        .filter(|&j| {
            let overlap: f64 = set.overlaps(&normalized(j)).iter().map(|c| c * c).sum();
            overlap.sqrt() > OVERLAP_TOLERANCE
        })
        .collect();
    let solved = candidates
        .par_iter()
        .map(|&j| set.range(complement.label(j), &normalized(j)))
        .collect::<Result<Vec<_>>>()?;
    let best = solved.iter().max_by(|a, b| a.range.total_cmp(&b.range));
    let max_range = best.map_or(0.0, |b| b.range.max(0.0));
    Ok(UniquenessReport {
        max_range,
        verdict: Verdict::of(max_range),
        direction: best.map(|b| b.label.clone()),
        complement_dimension: complement.len(),
        face_rank: set.rank(),
        hull_dimension: set.face_dirs.len(),
        central_residual: set.residual,
        solved,
    })
}
