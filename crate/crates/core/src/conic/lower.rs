use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, DVector};

use super::{
    ConicProgram, FunctionalTerm, MapStep, MatrixTerm, SolveStatus, VariableKind, VariableValue,
};
use crate::error::Result;
use crate::operators::{
    hermitian_eigenvalues, trace_product, CMatrix, IndexSplit, QuditRegister, SparseCMatrix, C64,
};

type Entry = (usize, usize, C64);

/// Orthonormal coordinates of `d × d` Hermitian matrices under `Re tr(A B)`:
/// the `d` diagonal units, then for every `a < b` the pair
/// `(E_ab + E_ba)/√2`, `(−i E_ab + i E_ba)/√2`.
pub(crate) fn hermitian_coordinate(d: usize, k: usize) -> Vec<Entry> {
    if k < d {
        return vec![(k, k, C64::new(1.0, 0.0))];
    }
    let (a, b, imag) = offdiag_pair(d, k - d);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    if imag {
        vec![(a, b, C64::new(0.0, -s)), (b, a, C64::new(0.0, s))]
    } else {
        vec![(a, b, C64::new(s, 0.0)), (b, a, C64::new(s, 0.0))]
    }
}

fn offdiag_pair(d: usize, idx: usize) -> (usize, usize, bool) {
    let pair = idx / 2;
    let mut a = 0;
    let mut remaining = pair;
    while remaining >= d - 1 - a {
        remaining -= d - 1 - a;
        a += 1;
    }
    (a, a + 1 + remaining, idx % 2 == 1)
}

pub(crate) fn hermitian_from_coordinates(d: usize, x: &[f64]) -> CMatrix {
    let mut m = CMatrix::zeros(d, d);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for a in 0..d {
        m[(a, a)] = C64::new(x[a], 0.0);
    }
    let mut k = d;
    for a in 0..d {
        for b in a + 1..d {
            let (re, im) = (x[k] * s, x[k + 1] * s);
            m[(a, b)] = C64::new(re, -im);
            m[(b, a)] = C64::new(re, im);
            k += 2;
        }
    }
    m
}

enum CompiledStep {
    Trace {
        table: Vec<(usize, usize)>,
    },
    Transpose {
        split: IndexSplit,
        table: Vec<(usize, usize)>,
    },
    Project {
        table: Vec<(usize, usize)>,
        vector: Vec<C64>,
    },
}

impl CompiledStep {
    fn new(step: &MapStep, reg: &QuditRegister) -> Result<Self> {
        Ok(match step {
            MapStep::PartialTrace { keep } => CompiledStep::Trace {
                table: IndexSplit::new(reg, keep)?.decompose_table(),
            },
            MapStep::PartialTranspose { parties } => {
                let split = IndexSplit::new(reg, parties)?;
                let table = split.decompose_table();
                CompiledStep::Transpose { split, table }
            }
            MapStep::Project { party, vector } => {
                let split = IndexSplit::new(reg, &[*party])?;
                CompiledStep::Project {
                    table: split.decompose_table(),
                    vector: vector.clone(),
                }
            }
        })
    }

    fn apply(&self, input: &[Entry], out: &mut Vec<Entry>) {
        out.clear();
        for &(r, c, v) in input {
            match self {
                CompiledStep::Trace { table } => {
                    let (a, x) = table[r];
                    let (b, y) = table[c];
                    if x == y {
                        out.push((a, b, v));
                    }
                }
                CompiledStep::Transpose { split, table } => {
                    let (a, x) = table[r];
                    let (b, y) = table[c];
                    out.push((split.global(b, x), split.global(a, y), v));
                }
                CompiledStep::Project { table, vector } => {
                    let (a, x) = table[r];
                    let (b, y) = table[c];
                    let w = vector[a].conj() * v * vector[b];
                    if w.re != 0.0 || w.im != 0.0 {
                        out.push((x, y, w));
                    }
                }
            }
        }
    }
}

/// Affine matrix inequality `constant + Σ_l y_l F_l ⪰ 0` on one block.
#[derive(Clone, Debug)]
pub struct LoweredBlock {
    pub dim: usize,
    pub constant: CMatrix,
    /// `(reduced variable, F_l)`, sorted by variable.
    pub terms: Vec<(usize, SparseCMatrix)>,
}

/// Minimize `objective · y + objective_constant` over free `y` subject to
/// every block's matrix inequality. Produced by [`lower`].
#[derive(Clone, Debug)]
pub struct LoweredProgram {
    pub objective: Vec<f64>,
    pub objective_constant: f64,
    pub blocks: Vec<LoweredBlock>,
    /// Index of the PSD constraint each block came from.
    pub block_origin: Vec<usize>,
    layout: Vec<(usize, VariableKind)>,
    x0: Vec<f64>,
    columns: Vec<Vec<(usize, f64)>>,
    trivial: Option<(SolveStatus, String)>,
    /// Dimensions of constant constraints removed during lowering.
    constant_dims: BTreeMap<usize, usize>,
}

impl LoweredProgram {
    pub fn num_vars(&self) -> usize {
        self.columns.len()
    }

    /// Status decided during lowering (no free variables, constant blocks
    /// that fail, inconsistent equalities, or an unconstrained descent direction).
    pub fn trivial_status(&self) -> Option<(SolveStatus, String)> {
        self.trivial.clone()
    }

    /// Value of `F_k(y)` for block `k`.
    pub fn block_value(&self, k: usize, y: &[f64]) -> CMatrix {
        let b = &self.blocks[k];
        let mut m = b.constant.clone();
        for (l, f) in &b.terms {
            f.add_scaled_to(&mut m, C64::new(y[*l], 0.0));
        }
        m
    }

    pub fn objective_value(&self, y: &[f64]) -> f64 {
        self.objective_constant
            + self
                .objective
                .iter()
                .zip(y)
                .map(|(c, v)| c * v)
                .sum::<f64>()
    }

    /// Variable values of the original program for reduced coordinates `y`.
    pub fn recover(&self, y: &[f64]) -> Vec<VariableValue> {
        let mut x = self.x0.clone();
        for (col, &v) in self.columns.iter().zip(y) {
            for &(j, a) in col {
                x[j] += a * v;
            }
        }
        self.layout
            .iter()
            .map(|&(off, kind)| match kind {
                VariableKind::Real { len } => VariableValue::Real(x[off..off + len].to_vec()),
                VariableKind::Hermitian { dim } => {
                    VariableValue::Hermitian(hermitian_from_coordinates(dim, &x[off..]))
                }
            })
            .collect()
    }

    /// Dual matrices per original PSD constraint (zero where a constraint
    /// was constant and removed).
    pub(crate) fn expand_duals(&self, duals: &[CMatrix], num_constraints: usize) -> Vec<CMatrix> {
        let mut out: Vec<Option<CMatrix>> = vec![None; num_constraints];
        for (k, d) in duals.iter().enumerate() {
            out[self.block_origin[k]] = Some(d.clone());
        }
        out.into_iter()
            .enumerate()
            .map(|(i, d)| {
                d.unwrap_or_else(|| {
                    let n = self.constant_dims.get(&i).copied().unwrap_or(0);
                    CMatrix::zeros(n, n)
                })
            })
            .collect()
    }

    /// `c0 − Σ_k Re tr(Y_k F_k0)`, a lower bound on the optimum whenever
    /// the `Y_k` are PSD and satisfy `Σ_k Re tr(Y_k F_kl) = c_l`.
    pub fn dual_objective(&self, duals: &[CMatrix]) -> f64 {
        self.objective_constant
            - duals
                .iter()
                .zip(&self.blocks)
                .map(|(y, b)| trace_product(y, &b.constant))
                .sum::<f64>()
    }

    /// Largest violation of the dual equality constraints.
    pub fn dual_residual(&self, duals: &[CMatrix]) -> f64 {
        let mut acc = self.objective.clone();
        for (y, b) in duals.iter().zip(&self.blocks) {
            for (l, f) in &b.terms {
                acc[*l] -= f.trace_with(y);
            }
        }
        acc.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

struct Layout {
    offsets: Vec<usize>,
    total: usize,
}

fn layout(program: &ConicProgram) -> Layout {
    let mut offsets = Vec::with_capacity(program.variables.len());
    let mut total = 0;
    for v in &program.variables {
        offsets.push(total);
        total += match v.kind {
            VariableKind::Real { len } => len,
            VariableKind::Hermitian { dim } => dim * dim,
        };
    }
    Layout { offsets, total }
}

fn functional_coords(lay: &Layout, terms: &[FunctionalTerm]) -> BTreeMap<usize, f64> {
    let mut out = BTreeMap::new();
    for t in terms {
        match t {
            FunctionalTerm::Real { var, index, coeff } => {
                *out.entry(lay.offsets[var.0] + index).or_insert(0.0) += coeff;
            }
            FunctionalTerm::Hermitian { var, matrix } => {
                let d = matrix.nrows();
                for k in 0..d * d {
                    let v: f64 = hermitian_coordinate(d, k)
                        .iter()
                        .map(|&(r, c, z)| (z * matrix[(c, r)]).re)
                        .sum();
                    if v != 0.0 {
                        *out.entry(lay.offsets[var.0] + k).or_insert(0.0) += v;
                    }
                }
            }
        }
    }
    out
}

/// Coordinate-wise block contributions of one PSD constraint.
fn block_coords(
    program: &ConicProgram,
    lay: &Layout,
    terms: &[MatrixTerm],
) -> Result<BTreeMap<usize, Vec<Entry>>> {
    let mut out: BTreeMap<usize, Vec<Entry>> = BTreeMap::new();
    for t in terms {
        match t {
            MatrixTerm::Scalar { var, index, matrix } => {
                out.entry(lay.offsets[var.0] + index)
                    .or_default()
                    .extend_from_slice(matrix.entries());
            }
            MatrixTerm::Mapped {
                var,
                coeff,
                register,
                steps,
            } => {
                let d = match program.variables[var.0].kind {
                    VariableKind::Hermitian { dim } => dim,
                    VariableKind::Real { .. } => unreachable!("validated"),
                };
                let mut reg = register.clone();
                let mut compiled = Vec::with_capacity(steps.len());
                for s in steps {
                    compiled.push(CompiledStep::new(s, &reg)?);
                    reg = s.output_register(&reg)?;
                }
                let (mut cur, mut next) = (Vec::new(), Vec::new());
                for k in 0..d * d {
                    cur.clear();
                    cur.extend(hermitian_coordinate(d, k));
                    for c in &compiled {
                        c.apply(&cur, &mut next);
                        std::mem::swap(&mut cur, &mut next);
                    }
                    if !cur.is_empty() {
                        out.entry(lay.offsets[var.0] + k)
                            .or_default()
                            .extend(cur.iter().map(|&(r, c, v)| (r, c, v * *coeff)));
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Null-space elimination of the equalities over the coordinates they touch.
struct Elimination {
    involved: Vec<usize>,
    x0: Vec<f64>,
    null_basis: DMatrix<f64>,
}

fn eliminate(rows: &[(BTreeMap<usize, f64>, f64)]) -> std::result::Result<Elimination, String> {
    let involved: Vec<usize> = rows
        .iter()
        .flat_map(|(r, _)| r.keys().copied())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let pos: BTreeMap<usize, usize> = involved.iter().enumerate().map(|(i, &j)| (j, i)).collect();
    let n = involved.len();
    let k = rows.len();
    let mut a = DMatrix::<f64>::zeros(k, n);
    let mut b = DVector::<f64>::zeros(k);
    for (i, (row, rhs)) in rows.iter().enumerate() {
        for (j, v) in row {
            a[(i, pos[j])] += v;
        }
        b[i] = *rhs;
    }
    if n == 0 {
        if b.amax() > 1e-12 {
            return Err("equality with no variables and nonzero right-hand side".into());
        }
        return Ok(Elimination {
            involved,
            x0: Vec::new(),
            null_basis: DMatrix::zeros(0, 0),
        });
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let cut = 1e-12 * smax.max(1.0);
    let x0 = svd
        .solve(&b, cut)
        .map_err(|e| format!("equality solve failed: {e}"))?;
    let resid = (&a * &x0 - &b).amax();
    if resid > 1e-9 * (1.0 + b.amax()) {
        return Err(format!("inconsistent equalities (residual {resid:.2e})"));
    }
    let vt = svd.v_t.expect("requested");
    let mut proj = DMatrix::<f64>::identity(n, n);
    for (i, s) in svd.singular_values.iter().enumerate() {
        if *s > cut {
            let v = vt.row(i).transpose();
            proj -= &v * v.transpose();
        }
    }
    let eig = proj.symmetric_eigen();
    let keep: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i] > 0.5).collect();
    let null_basis = DMatrix::from_fn(n, keep.len(), |r, c| eig.eigenvectors[(r, keep[c])]);
    Ok(Elimination {
        involved,
        x0: x0.iter().copied().collect(),
        null_basis,
    })
}

/// Converts a validated program into free coordinates and per-block affine
/// matrix inequalities.
pub fn lower(program: &ConicProgram) -> Result<LoweredProgram> {
    let lay = layout(program);
    let objective_full = functional_coords(&lay, &program.objective.terms);
    let rows: Vec<(BTreeMap<usize, f64>, f64)> = program
        .equalities
        .iter()
        .map(|e| {
            (
                functional_coords(&lay, &e.lhs.terms),
                e.rhs - e.lhs.constant,
            )
        })
        .collect();
    let mut raw_blocks = Vec::with_capacity(program.psd_constraints.len());
    for c in &program.psd_constraints {
        raw_blocks.push(block_coords(program, &lay, &c.expr.terms)?);
    }

    let layout_kinds: Vec<(usize, VariableKind)> = lay
        .offsets
        .iter()
        .zip(&program.variables)
        .map(|(&o, v)| (o, v.kind))
        .collect();
    let mut lowered = LoweredProgram {
        objective: Vec::new(),
        objective_constant: program.objective.constant,
        blocks: Vec::new(),
        block_origin: Vec::new(),
        layout: layout_kinds,
        x0: vec![0.0; lay.total],
        columns: Vec::new(),
        trivial: None,
        constant_dims: BTreeMap::new(),
    };

    let elim = match eliminate(&rows) {
        Ok(e) => e,
        Err(msg) => {
            lowered.trivial = Some((SolveStatus::Infeasible, msg));
            return Ok(lowered);
        }
    };
    for (i, &j) in elim.involved.iter().enumerate() {
        lowered.x0[j] = elim.x0[i];
    }
    let involved: BTreeSet<usize> = elim.involved.iter().copied().collect();
    let mut columns: Vec<Vec<(usize, f64)>> = (0..lay.total)
        .filter(|j| !involved.contains(j))
        .map(|j| vec![(j, 1.0)])
        .collect();
    for c in 0..elim.null_basis.ncols() {
        columns.push(
            elim.involved
                .iter()
                .enumerate()
                .map(|(i, &j)| (j, elim.null_basis[(i, c)]))
                .filter(|(_, v)| v.abs() > 1e-15)
                .collect(),
        );
    }

    let c_of = |j: usize| objective_full.get(&j).copied().unwrap_or(0.0);
    lowered.objective_constant += elim
        .involved
        .iter()
        .enumerate()
        .map(|(i, &j)| elim.x0[i] * c_of(j))
        .sum::<f64>();

    // Block data per reduced column.
    let mut block_terms: Vec<BTreeMap<usize, Vec<Entry>>> = vec![BTreeMap::new(); raw_blocks.len()];
    let mut constants: Vec<CMatrix> = program
        .psd_constraints
        .iter()
        .map(|c| c.expr.constant.clone())
        .collect();
    for (k, raw) in raw_blocks.iter().enumerate() {
        for (i, &j) in elim.involved.iter().enumerate() {
            if let Some(ents) = raw.get(&j) {
                for &(r, c, v) in ents {
                    constants[k][(r, c)] += v * elim.x0[i];
                }
            }
        }
    }
    let mut used = vec![false; columns.len()];
    for (l, col) in columns.iter().enumerate() {
        for (k, raw) in raw_blocks.iter().enumerate() {
            let mut ents: Vec<Entry> = Vec::new();
            for &(j, a) in col {
                if let Some(e) = raw.get(&j) {
                    ents.extend(e.iter().map(|&(r, c, v)| (r, c, v * a)));
                }
            }
            if !ents.is_empty() {
                block_terms[k].insert(l, ents);
                used[l] = true;
            }
        }
    }

    // Drop columns that touch no block.
    let mut remap = vec![usize::MAX; columns.len()];
    let mut kept_columns = Vec::new();
    let mut objective = Vec::new();
    for (l, col) in columns.into_iter().enumerate() {
        let c: f64 = col.iter().map(|&(j, a)| a * c_of(j)).sum();
        if used[l] {
            remap[l] = kept_columns.len();
            kept_columns.push(col);
            objective.push(c);
        } else if c.abs() > 1e-14 {
            lowered.trivial = Some((
                SolveStatus::Unbounded,
                "objective depends on an unconstrained direction".into(),
            ));
        }
    }
    lowered.columns = kept_columns;
    lowered.objective = objective;

    for (k, terms) in block_terms.into_iter().enumerate() {
        let dim = program.psd_constraints[k].expr.dim;
        let terms: Vec<(usize, SparseCMatrix)> = terms
            .into_iter()
            .map(|(l, ents)| (remap[l], SparseCMatrix::from_entries(dim, ents)))
            .filter(|(_, f)| f.nnz() > 0)
            .collect();
        if terms.is_empty() {
            lowered.constant_dims.insert(k, dim);
            let min = hermitian_eigenvalues(&constants[k])
                .first()
                .copied()
                .unwrap_or(0.0);
            if min < -1e-12 && lowered.trivial.is_none() {
                lowered.trivial = Some((
                    SolveStatus::Infeasible,
                    format!(
                        "constant constraint `{}` has eigenvalue {min:.3e}",
                        program.psd_constraints[k].name
                    ),
                ));
            }
            continue;
        }
        lowered.blocks.push(LoweredBlock {
            dim,
            constant: constants[k].clone(),
            terms,
        });
        lowered.block_origin.push(k);
    }
    if lowered.trivial.is_none() && (lowered.columns.is_empty() || lowered.blocks.is_empty()) {
        lowered.trivial = Some((SolveStatus::Optimal, "no free variables".into()));
    }
    Ok(lowered)
}
