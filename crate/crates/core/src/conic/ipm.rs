//! Primal-dual interior-point method for block-diagonal real semidefinite
//! programs in the standard pair
//!
//! ```text
//! (P) min ⟨C, X⟩  s.t. ⟨A_l, X⟩ = b_l, X ⪰ 0
//! (D) max b·y     s.t. Z = C − Σ y_l A_l ⪰ 0
//! ```
//!
//! A lowered program is (D) after real embedding of every block. Search
//! directions are HKM with a Mehrotra predictor-corrector; the Schur
//! complement is assembled block by block and factored with a sparse
//! Cholesky whose pattern is the union of the per-block variable cliques.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Llt, SymbolicLlt};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMat};
use faer::{Mat, Side};
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::embed::{embed_unchecked, structured_dual};
use super::{Backend, BackendResult, LoweredProgram, SolveStatus, Tolerances};

/// Largest ratio of residual to tolerance for which a best iterate is still
/// returned as optimal after a breakdown.
const RELAXED_ACCURACY: f64 = 100.0;

/// The default backend.
#[derive(Clone, Copy, Debug, Default)]
pub struct InteriorPoint;

impl Backend for InteriorPoint {
    fn name(&self) -> &'static str {
        "ipm"
    }

    fn solve_lowered(&self, problem: &LoweredProgram, tol: &Tolerances) -> BackendResult {
        let sdp = RealSdp::from_lowered(problem);
        let out = sdp.solve(tol);
        let duals = out
            .x
            .as_ref()
            .map(|xs| xs.iter().map(structured_dual).collect());
        BackendResult {
            status: out.status,
            y: out.y,
            duals,
            iterations: out.iterations,
            message: out.message,
        }
    }
}

type SparseSym = Vec<(usize, usize, f64)>;

struct Block {
    n: usize,
    c: DMatrix<f64>,
    /// `(variable, A_l)` with both triangles stored.
    terms: Vec<(usize, SparseSym)>,
}

struct RealSdp {
    m: usize,
    b: DVector<f64>,
    blocks: Vec<Block>,
}

struct IpmOutput {
    status: SolveStatus,
    y: Vec<f64>,
    x: Option<Vec<DMatrix<f64>>>,
    iterations: usize,
    message: String,
}

fn embed_sparse_negated(f: &crate::operators::SparseCMatrix) -> SparseSym {
    let n = f.dim();
    let mut out = Vec::with_capacity(4 * f.nnz());
    for &(r, c, z) in f.entries() {
        if z.re != 0.0 {
            out.push((r, c, -z.re));
            out.push((r + n, c + n, -z.re));
        }
        if z.im != 0.0 {
            out.push((r, c + n, z.im));
            out.push((r + n, c, -z.im));
        }
    }
    out
}

fn sparse_dot(a: &SparseSym, m: &DMatrix<f64>) -> f64 {
    a.iter().map(|&(p, q, v)| v * m[(p, q)]).sum()
}

fn frob(ms: &[DMatrix<f64>]) -> f64 {
    ms.iter().map(|m| m.norm_squared()).sum::<f64>().sqrt()
}

fn sym(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for c in 0..n {
        for r in c + 1..n {
            let v = 0.5 * (m[(r, c)] + m[(c, r)]);
            m[(r, c)] = v;
            m[(c, r)] = v;
        }
    }
}

/// Largest `α` with `X + α ΔX ⪰ 0`, given the Cholesky factor of `X`.
fn max_step(chol: &Cholesky<f64, Dyn>, dx: &DMatrix<f64>) -> f64 {
    let l = chol.l();
    let Some(w) = l.solve_lower_triangular(dx) else {
        return 0.0;
    };
    let Some(s) = l.solve_lower_triangular(&w.transpose()) else {
        return 0.0;
    };
    let s = sym(s);
    let lmin = s.symmetric_eigenvalues().min();
    if lmin >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / lmin
    }
}

/// Upper-triangular sparsity pattern of the Schur complement together with
/// per-block scatter maps.
struct SchurPattern {
    symbolic: SymbolicSparseColMat<usize>,
    llt: Option<SymbolicLlt<usize>>,
    diag_pos: Vec<usize>,
    /// For each block, for each local column `b`, positions of rows `0..=b`.
    scatter: Vec<Vec<Vec<usize>>>,
}

impl SchurPattern {
    fn new(m: usize, blocks: &[Block]) -> Self {
        let mut cols: Vec<Vec<usize>> = vec![Vec::new(); m];
        for blk in blocks {
            let vars: Vec<usize> = blk.terms.iter().map(|t| t.0).collect();
            for (bi, &vb) in vars.iter().enumerate() {
                cols[vb].extend_from_slice(&vars[..=bi]);
            }
        }
        for (j, c) in cols.iter_mut().enumerate() {
            c.push(j);
            c.sort_unstable();
            c.dedup();
        }
        let mut col_ptr = Vec::with_capacity(m + 1);
        let mut row_idx = Vec::new();
        col_ptr.push(0);
        for c in &cols {
            row_idx.extend_from_slice(c);
            col_ptr.push(row_idx.len());
        }
        let diag_pos = (0..m)
            .map(|j| col_ptr[j] + cols[j].binary_search(&j).expect("diagonal present"))
            .collect();
        let scatter = blocks
            .iter()
            .map(|blk| {
                let vars: Vec<usize> = blk.terms.iter().map(|t| t.0).collect();
                vars.iter()
                    .enumerate()
                    .map(|(bi, &vb)| {
                        let rows = &cols[vb];
                        let mut pos = Vec::with_capacity(bi + 1);
                        let mut cursor = 0;
                        for &va in &vars[..=bi] {
                            while rows[cursor] != va {
                                cursor += 1;
                            }
                            pos.push(col_ptr[vb] + cursor);
                        }
                        pos
                    })
                    .collect()
            })
            .collect();
        let symbolic = SymbolicSparseColMat::new_checked(m, m, col_ptr, None, row_idx);
        let llt = SymbolicLlt::try_new(symbolic.as_ref(), Side::Upper).ok();
        Self {
            symbolic,
            llt,
            diag_pos,
            scatter,
        }
    }

    fn nnz(&self) -> usize {
        self.symbolic.row_idx().len()
    }

    /// `M v` for the symmetric matrix whose upper triangle is `vals`.
    fn mul(&self, vals: &[f64], v: &DVector<f64>) -> DVector<f64> {
        let col_ptr = self.symbolic.col_ptr();
        let rows = self.symbolic.row_idx();
        let mut out = DVector::zeros(v.len());
        for j in 0..v.len() {
            for p in col_ptr[j]..col_ptr[j + 1] {
                let i = rows[p];
                out[i] += vals[p] * v[j];
                if i != j {
                    out[j] += vals[p] * v[i];
                }
            }
        }
        out
    }
}

impl RealSdp {
    fn from_lowered(p: &LoweredProgram) -> Self {
        let blocks = p
            .blocks
            .iter()
            .map(|b| Block {
                n: 2 * b.dim,
                c: embed_unchecked(&b.constant),
                terms: b
                    .terms
                    .iter()
                    .map(|(l, f)| (*l, embed_sparse_negated(f)))
                    .collect(),
            })
            .collect();
        Self {
            m: p.num_vars(),
            b: DVector::from_iterator(p.objective.len(), p.objective.iter().map(|c| -c)),
            blocks,
        }
    }

    fn a_op(&self, ms: &[DMatrix<f64>]) -> DVector<f64> {
        let mut out = DVector::zeros(self.m);
        for (blk, mk) in self.blocks.iter().zip(ms) {
            for (l, a) in &blk.terms {
                out[*l] += sparse_dot(a, mk);
            }
        }
        out
    }

    fn a_adj(&self, y: &DVector<f64>) -> Vec<DMatrix<f64>> {
        self.blocks
            .iter()
            .map(|blk| {
                let mut m = DMatrix::zeros(blk.n, blk.n);
                for (l, a) in &blk.terms {
                    let s = y[*l];
                    if s != 0.0 {
                        for &(p, q, v) in a {
                            m[(p, q)] += s * v;
                        }
                    }
                }
                m
            })
            .collect()
    }

    /// `M_ij = Σ_k tr(A_i X_k A_j Z_k⁻¹)` in the pattern's value order.
    fn schur(&self, pat: &SchurPattern, x: &[DMatrix<f64>], zi: &[DMatrix<f64>]) -> Vec<f64> {
        let mut vals = vec![0.0; pat.nnz()];
        for (k, blk) in self.blocks.iter().enumerate() {
            let (xk, zk) = (&x[k], &zi[k]);
            let n = blk.n;
            let nv = blk.terms.len();
            // H_i = Z⁻¹ A_i X for variables with many nonzeros.
            let h: Vec<Option<DMatrix<f64>>> = blk
                .terms
                .iter()
                .map(|(_, a)| {
                    (a.len() >= n).then(|| {
                        let mut dense = DMatrix::zeros(n, n);
                        for &(p, q, v) in a {
                            dense[(p, q)] += v;
                        }
                        zk * dense * xk
                    })
                })
                .collect();
            let scatter = &pat.scatter[k];
            for jb in 0..nv {
                let aj = &blk.terms[jb].1;
                for ia in 0..=jb {
                    let ai = &blk.terms[ia].1;
                    let v = if let Some(hi) = &h[ia] {
                        aj.iter().map(|&(p, q, v)| v * hi[(q, p)]).sum::<f64>()
                    } else if let Some(hj) = &h[jb] {
                        ai.iter().map(|&(p, q, v)| v * hj[(q, p)]).sum::<f64>()
                    } else {
                        let mut acc = 0.0;
                        for &(p, q, vi) in ai {
                            for &(r, s, vj) in aj {
                                acc += vi * vj * xk[(q, r)] * zk[(s, p)];
                            }
                        }
                        acc
                    };
                    vals[scatter[jb][ia]] += v;
                }
            }
        }
        vals
    }

    fn initial_point(&self) -> (Vec<DMatrix<f64>>, DVector<f64>, Vec<DMatrix<f64>>) {
        let mut xs = Vec::new();
        let mut zs = Vec::new();
        for blk in &self.blocks {
            let n = blk.n as f64;
            let mut xi = 10f64.max(n.sqrt());
            let mut eta = 10f64.max(n.sqrt()).max(blk.c.norm());
            for (l, a) in &blk.terms {
                let na = a.iter().map(|e| e.2 * e.2).sum::<f64>().sqrt();
                xi = xi.max(n.sqrt() * (1.0 + self.b[*l].abs()) / (1.0 + na));
                eta = eta.max(na);
            }
            xs.push(DMatrix::identity(blk.n, blk.n) * xi);
            zs.push(DMatrix::identity(blk.n, blk.n) * eta);
        }
        (xs, DVector::zeros(self.m), zs)
    }

    fn factor(&self, pat: &SchurPattern, vals: &mut [f64]) -> Option<Llt<usize, f64>> {
        let symbolic_llt = pat.llt.as_ref()?;
        let max_diag = pat
            .diag_pos
            .iter()
            .map(|&p| vals[p].abs())
            .fold(0.0, f64::max)
            .max(1e-300);
        let mut shift = 0.0;
        for attempt in 0..8 {
            if attempt > 0 {
                let next = max_diag * 1e-14 * 100f64.powi(attempt);
                for &p in &pat.diag_pos {
                    vals[p] += next - shift;
                }
                shift = next;
            }
            let mat = SparseColMatRef::new(pat.symbolic.as_ref(), vals);
            if let Ok(llt) = Llt::try_new_with_symbolic(symbolic_llt.clone(), mat, Side::Upper) {
                return Some(llt);
            }
        }
        None
    }

    fn solve(&self, tol: &Tolerances) -> IpmOutput {
        let m = self.m;
        let total_n: usize = self.blocks.iter().map(|b| b.n).sum();
        let nn = total_n as f64;
        let pat = SchurPattern::new(m, &self.blocks);
        let (mut x, mut y, mut z) = self.initial_point();
        let norm_b = self.b.norm();
        let norm_c = frob(&self.blocks.iter().map(|b| b.c.clone()).collect::<Vec<_>>());
        // Best iterate so far by the largest of the three relative residuals.
        let mut best: Option<(f64, DVector<f64>, Vec<DMatrix<f64>>)> = None;
        let fail = |msg: String,
                    y: &DVector<f64>,
                    it: usize,
                    best: &Option<(f64, DVector<f64>, Vec<DMatrix<f64>>)>| {
            match best {
                Some((merit, by, bx)) if *merit <= RELAXED_ACCURACY => IpmOutput {
                    status: SolveStatus::Optimal,
                    y: by.iter().copied().collect(),
                    x: Some(bx.clone()),
                    iterations: it,
                    message: format!("reduced accuracy {merit:.1e} after: {msg}"),
                },
                _ => IpmOutput {
                    status: SolveStatus::NumericalFailure,
                    y: y.iter().copied().collect(),
                    x: None,
                    iterations: it,
                    message: msg,
                },
            }
        };
        let mut stalls = 0;
        // Iteration and merit of the last halving of the merit.
        let (mut best_it, mut anchor) = (0, f64::INFINITY);
        for it in 0..tol.max_iterations {
            let ay = self.a_adj(&y);
            let rd: Vec<DMatrix<f64>> = self
                .blocks
                .iter()
                .zip(&z)
                .zip(&ay)
                .map(|((blk, zk), ayk)| &blk.c - zk - ayk)
                .collect();
            let ax = self.a_op(&x);
            let rp = &self.b - &ax;
            let pobj: f64 = self.blocks.iter().zip(&x).map(|(b, xk)| b.c.dot(xk)).sum();
            let dobj = self.b.dot(&y);
            let xz: f64 = x.iter().zip(&z).map(|(a, b)| a.dot(b)).sum();
            let mu = xz / nn;
            let rel_gap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
            let pinf = rp.norm() / (1.0 + norm_b);
            let rd_norm = frob(&rd);
            let dinf = rd_norm / (1.0 + norm_c);
            let merit = (rel_gap / tol.gap)
                .max(pinf / tol.feasibility)
                .max(dinf / tol.feasibility);
            if merit < 0.5 * anchor {
                (best_it, anchor) = (it, merit);
            }
            if best.as_ref().is_none_or(|b| merit < b.0) {
                best = Some((merit, y.clone(), x.clone()));
            }
            if it >= best_it + 10 {
                return fail(
                    format!("no progress since iteration {best_it}"),
                    &y,
                    it,
                    &best,
                );
            }
            if rel_gap <= tol.gap && pinf <= tol.feasibility && dinf <= tol.feasibility {
                return IpmOutput {
                    status: SolveStatus::Optimal,
                    y: y.iter().copied().collect(),
                    x: Some(x),
                    iterations: it,
                    message: format!(
                        "converged: gap {rel_gap:.1e}, primal {pinf:.1e}, dual {dinf:.1e}"
                    ),
                };
            }
            // Certificate that (D) is infeasible: X ⪰ 0, A(X) ≈ 0, ⟨C, X⟩ < 0.
            if pobj < 0.0 && ax.norm() / -pobj < tol.feasibility && dinf > tol.feasibility {
                return IpmOutput {
                    status: SolveStatus::Infeasible,
                    y: y.iter().copied().collect(),
                    x: None,
                    iterations: it,
                    message: format!("infeasibility certificate, ratio {:.1e}", ax.norm() / -pobj),
                };
            }
            // Certificate that (P) is infeasible, so (D) is unbounded.
            if dobj > 0.0 && pinf > tol.feasibility {
                let ray: Vec<DMatrix<f64>> = z.iter().zip(&ay).map(|(zk, a)| zk + a).collect();
                if frob(&ray) / dobj < tol.feasibility {
                    return IpmOutput {
                        status: SolveStatus::Unbounded,
                        y: y.iter().copied().collect(),
                        x: None,
                        iterations: it,
                        message: "unbounded direction".into(),
                    };
                }
            }

            let mut zi = Vec::with_capacity(z.len());
            let mut xchol = Vec::with_capacity(x.len());
            let mut zchol = Vec::with_capacity(z.len());
            for (xk, zk) in x.iter().zip(&z) {
                let (Some(cx), Some(cz)) = (Cholesky::new(xk.clone()), Cholesky::new(zk.clone()))
                else {
                    return fail(
                        format!("iterate lost definiteness at iteration {it}"),
                        &y,
                        it,
                        &best,
                    );
                };
                zi.push(cz.inverse());
                xchol.push(cx);
                zchol.push(cz);
            }
            let raw = self.schur(&pat, &x, &zi);
            let mut vals = raw.clone();
            let Some(llt) = self.factor(&pat, &mut vals) else {
                return fail(
                    format!("Schur complement factorization failed at iteration {it}"),
                    &y,
                    it,
                    &best,
                );
            };
            let solve_once = |rhs: &DVector<f64>| -> DVector<f64> {
                let mut b = Mat::<f64>::from_fn(m, 1, |i, _| rhs[i]);
                llt.solve_in_place(b.as_mut());
                DVector::from_fn(m, |i, _| b[(i, 0)])
            };
            // Two rounds of iterative refinement against the unshifted matrix.
            let solve_m = |rhs: &DVector<f64>| -> DVector<f64> {
                let mut sol = solve_once(rhs);
                for _ in 0..2 {
                    let r = rhs - pat.mul(&raw, &sol);
                    if r.norm() <= 1e-15 * (1.0 + rhs.norm()) {
                        break;
                    }
                    sol += solve_once(&r);
                }
                sol
            };
            let xrdzi: Vec<DMatrix<f64>> = x
                .iter()
                .zip(&rd)
                .zip(&zi)
                .map(|((xk, r), zik)| xk * r * zik)
                .collect();
            let h_base = &rp + self.a_op(&xrdzi);
            let direction = |t: &[DMatrix<f64>]| {
                let rhs = &h_base - self.a_op(t);
                let dy = solve_m(&rhs);
                let ady = self.a_adj(&dy);
                let dz: Vec<DMatrix<f64>> = rd.iter().zip(&ady).map(|(r, a)| r - a).collect();
                let dx: Vec<DMatrix<f64>> = t
                    .iter()
                    .zip(&x)
                    .zip(&dz)
                    .zip(&zi)
                    .map(|(((tk, xk), dzk), zik)| tk - sym(xk * dzk * zik))
                    .collect();
                (dx, dy, dz)
            };
            let steps = |dx: &[DMatrix<f64>], dz: &[DMatrix<f64>]| {
                let ap = xchol
                    .iter()
                    .zip(dx)
                    .map(|(c, d)| max_step(c, d))
                    .fold(f64::INFINITY, f64::min);
                let ad = zchol
                    .iter()
                    .zip(dz)
                    .map(|(c, d)| max_step(c, d))
                    .fold(f64::INFINITY, f64::min);
                (ap, ad)
            };

            // Predictor.
            let t_pred: Vec<DMatrix<f64>> = x.iter().map(|xk| -xk).collect();
            let (dxp, _, dzp) = direction(&t_pred);
            let (ap, ad) = steps(&dxp, &dzp);
            let (ap, ad) = (ap.min(1.0), ad.min(1.0));
            let xz_aff: f64 = x
                .iter()
                .zip(&dxp)
                .zip(z.iter().zip(&dzp))
                .map(|((xk, dxk), (zk, dzk))| (xk + dxk * ap).dot(&(zk + dzk * ad)))
                .sum();
            let sigma = ((xz_aff / xz).max(0.0)).powi(3).min(1.0);

            // Corrector.
            let t_corr: Vec<DMatrix<f64>> = x
                .iter()
                .zip(&zi)
                .zip(dxp.iter().zip(&dzp))
                .map(|((xk, zik), (dxk, dzk))| zik * (sigma * mu) - xk - sym(dxk * dzk * zik))
                .collect();
            let (dx, dy, dz) = direction(&t_corr);
            let (ap_max, ad_max) = steps(&dx, &dz);
            let gamma = 0.9 + 0.09 * ap_max.min(ad_max).min(1.0);
            let mut ap = (gamma * ap_max).min(1.0);
            let mut ad = (gamma * ad_max).min(1.0);
            // Round-off can leave the nominal step just outside the cone.
            for _ in 0..10 {
                let px = x
                    .iter()
                    .zip(&dx)
                    .all(|(xk, d)| Cholesky::new(xk + d * ap).is_some());
                let pz = z
                    .iter()
                    .zip(&dz)
                    .all(|(zk, d)| Cholesky::new(zk + d * ad).is_some());
                if px && pz {
                    break;
                }
                if !px {
                    ap *= 0.5;
                }
                if !pz {
                    ad *= 0.5;
                }
            }
            if ap < 1e-10 && ad < 1e-10 {
                stalls += 1;
                if stalls >= 3 {
                    return fail(
                        format!("stalled: gap {rel_gap:.1e}, primal {pinf:.1e}, dual {dinf:.1e}"),
                        &y,
                        it,
                        &best,
                    );
                }
            } else {
                stalls = 0;
            }
            for (xk, dxk) in x.iter_mut().zip(&dx) {
                *xk += dxk * ap;
                symmetrize(xk);
            }
            for (zk, dzk) in z.iter_mut().zip(&dz) {
                *zk += dzk * ad;
                symmetrize(zk);
            }
            y += dy * ad;
        }
        fail(
            format!("iteration limit {} reached", tol.max_iterations),
            &y,
            tol.max_iterations,
            &best,
        )
    }
}
