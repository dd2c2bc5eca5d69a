use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::algebra::IndexSplit;
use super::{CMatrix, QuditRegister, C64};
use crate::error::{Error, Result};

/// Square complex matrix stored as coordinate triplets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparseCMatrix {
    dim: usize,
    entries: Vec<(usize, usize, C64)>,
}

impl SparseCMatrix {
    /// Duplicate coordinates are summed; exact zeros dropped.
    pub fn from_entries(dim: usize, entries: Vec<(usize, usize, C64)>) -> Self {
        let mut merged: BTreeMap<(usize, usize), C64> = BTreeMap::new();
        for (r, c, v) in entries {
            debug_assert!(r < dim && c < dim);
            *merged.entry((r, c)).or_insert(C64::new(0.0, 0.0)) += v;
        }
        Self {
            dim,
            entries: merged
                .into_iter()
                .filter(|(_, v)| v.re != 0.0 || v.im != 0.0)
                .map(|((r, c), v)| (r, c, v))
                .collect(),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            entries: Vec::new(),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            dim,
            entries: (0..dim).map(|i| (i, i, C64::new(1.0, 0.0))).collect(),
        }
    }

    pub fn from_dense(m: &CMatrix, drop_below: f64) -> Self {
        let mut entries = Vec::new();
        for c in 0..m.ncols() {
            for r in 0..m.nrows() {
                if m[(r, c)].norm() > drop_below {
                    entries.push((r, c, m[(r, c)]));
                }
            }
        }
        Self {
            dim: m.nrows(),
            entries,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[(usize, usize, C64)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn to_dense(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim, self.dim);
        self.add_scaled_to(&mut m, C64::new(1.0, 0.0));
        m
    }

    pub fn add_scaled_to(&self, m: &mut CMatrix, s: C64) {
        for &(r, c, v) in &self.entries {
            m[(r, c)] += v * s;
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .map(|&(r, c, v)| (r, c, v * s))
                .collect(),
        }
    }

    /// `Re tr(self · h)`.
    pub fn trace_with(&self, h: &CMatrix) -> f64 {
        self.entries
            .iter()
            .map(|&(r, c, v)| (v * h[(c, r)]).re)
            .sum()
    }

    pub fn kronecker(&self, other: &SparseCMatrix) -> SparseCMatrix {
        let d = other.dim;
        let mut entries = Vec::with_capacity(self.nnz() * other.nnz());
        for &(r1, c1, v1) in &self.entries {
            for &(r2, c2, v2) in &other.entries {
                entries.push((r1 * d + r2, c1 * d + c2, v1 * v2));
            }
        }
        SparseCMatrix {
            dim: self.dim * other.dim,
            entries,
        }
    }

    fn check_register(&self, register: &QuditRegister) -> Result<()> {
        if register.total_dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: register.total_dim(),
                found: self.dim,
            });
        }
        Ok(())
    }

    pub fn partial_transpose(&self, register: &QuditRegister, parties: &[usize]) -> Result<Self> {
        self.check_register(register)?;
        let split = IndexSplit::new(register, parties)?;
        let table = split.decompose_table();
        let entries = self
            .entries
            .iter()
            .map(|&(r, c, v)| {
                let (a, x) = table[r];
                let (b, y) = table[c];
                (split.global(b, x), split.global(a, y), v)
            })
            .collect();
        Ok(Self {
            dim: self.dim,
            entries,
        })
    }

    pub fn partial_trace(&self, register: &QuditRegister, keep: &[usize]) -> Result<Self> {
        self.check_register(register)?;
        let split = IndexSplit::new(register, keep)?;
        let table = split.decompose_table();
        let entries = self
            .entries
            .iter()
            .filter_map(|&(r, c, v)| {
                let (a, x) = table[r];
                let (b, y) = table[c];
                (x == y).then_some((a, b, v))
            })
            .collect();
        Ok(Self::from_entries(split.inner_dim(), entries))
    }

    /// `⟨c| · |c⟩` on one party; the result acts on the remaining parties.
    pub fn project(&self, register: &QuditRegister, party: usize, vector: &[C64]) -> Result<Self> {
        self.check_register(register)?;
        if vector.len() != register.dim_of(party) {
            return Err(Error::DimensionMismatch {
                expected: register.dim_of(party),
                found: vector.len(),
            });
        }
        let split = IndexSplit::new(register, &[party])?;
        let table = split.decompose_table();
        let entries = self
            .entries
            .iter()
            .filter_map(|&(r, c, v)| {
                let (a, x) = table[r];
                let (b, y) = table[c];
                let w = vector[a].conj() * v * vector[b];
                (w.norm() > 0.0).then_some((x, y, w))
            })
            .collect();
        Ok(Self::from_entries(split.outer_dim(), entries))
    }

    pub fn max_asymmetry(&self) -> f64 {
        let map: BTreeMap<(usize, usize), C64> =
            self.entries.iter().map(|&(r, c, v)| ((r, c), v)).collect();
        let zero = C64::new(0.0, 0.0);
        self.entries
            .iter()
            .map(|&(r, c, v)| (v - map.get(&(c, r)).copied().unwrap_or(zero).conj()).norm())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::algebra::{partial_trace_matrix, partial_transpose_matrix};
    use nalgebra::DMatrix;

    fn sample(d: usize) -> CMatrix {
        DMatrix::from_fn(d, d, |i, j| {
            C64::new((i * 5 + j) as f64, (i as f64) * 0.5 - j as f64)
        })
    }

    #[test]
    fn sparse_maps_agree_with_dense() {
        let reg = QuditRegister::new(vec![2, 3, 2]).unwrap();
        let m = sample(12);
        let s = SparseCMatrix::from_dense(&m, 0.0);
        for parties in [vec![0], vec![1], vec![0, 2], vec![1, 2]] {
            let dense = partial_transpose_matrix(&m, &reg, &parties).unwrap();
            let sp = s.partial_transpose(&reg, &parties).unwrap().to_dense();
            assert!((dense - sp).norm() < 1e-12);
            let dense = partial_trace_matrix(&m, &reg, &parties).unwrap();
            let sp = s.partial_trace(&reg, &parties).unwrap().to_dense();
            assert!((dense - sp).norm() < 1e-12);
        }
    }

    #[test]
    fn projection_matches_contraction() {
        let reg = QuditRegister::qubits(3);
        let m = sample(8);
        let s = SparseCMatrix::from_dense(&m, 0.0);
        let c = [C64::new(0.6, 0.0), C64::new(0.0, 0.8)];
        let p = s.project(&reg, 1, &c).unwrap().to_dense();
        // explicit (1 ⊗ ⟨c| ⊗ 1) M (1 ⊗ |c⟩ ⊗ 1)
        let mut bra = CMatrix::zeros(4, 8);
        for a in 0..2 {
            for x in 0..2 {
                for b in 0..2 {
                    bra[(a * 2 + b, a * 4 + x * 2 + b)] = c[x].conj();
                }
            }
        }
        let expect = &bra * m * bra.adjoint();
        assert!((p - expect).norm() < 1e-12);
    }
}
