use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::operators::{max_asymmetry, CMatrix, HermitianOperator, HERMITIAN_TOLERANCE};

/// `[[Re H, −Im H], [Im H, Re H]]` for a Hermitian `H`. The result is PSD iff
/// `H` is, and every eigenvalue of `H` appears twice.
pub fn real_embedding(h: &HermitianOperator) -> DMatrix<f64> {
    embed_unchecked(h.matrix())
}

/// As [`real_embedding`] for a bare matrix; rejects non-Hermitian input.
pub fn real_embedding_matrix(h: &CMatrix) -> Result<DMatrix<f64>> {
    let asym = max_asymmetry(h);
    if asym > HERMITIAN_TOLERANCE * (1.0 + h.norm()) {
        return Err(Error::NotHermitian(asym));
    }
    Ok(embed_unchecked(h))
}

pub(crate) fn embed_unchecked(h: &CMatrix) -> DMatrix<f64> {
    let n = h.nrows();
    let mut out = DMatrix::zeros(2 * n, 2 * n);
    for c in 0..n {
        for r in 0..n {
            let z = h[(r, c)];
            out[(r, c)] = z.re;
            out[(r + n, c + n)] = z.re;
            out[(r, c + n)] = -z.im;
            out[(r + n, c)] = z.im;
        }
    }
    out
}

/// The complex matrix `Y` with `⟨X, embed(H)⟩ = Re tr(Y H)` for every
/// Hermitian `H`. For a structured `X = embed(A)` this is `2A`.
pub fn structured_dual(x: &DMatrix<f64>) -> CMatrix {
    let n = x.nrows() / 2;
    CMatrix::from_fn(n, n, |r, c| {
        let re = x[(r, c)] + x[(r + n, c + n)];
        let im = x[(r + n, c)] - x[(r, c + n)];
        crate::operators::C64::new(re, im)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{hermitian_eigenvalues, trace_product, QuditRegister, C64};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sorted(mut v: Vec<f64>) -> Vec<f64> {
        v.sort_by(f64::total_cmp);
        v
    }

    fn random_hermitian(n: usize, rng: &mut ChaCha8Rng) -> CMatrix {
        let a = CMatrix::from_fn(n, n, |_, _| {
            C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        (&a + a.adjoint()).scale(0.5)
    }

    #[test]
    fn identity_embeds_to_identity() {
        let id = HermitianOperator::identity(QuditRegister::qubits(1));
        assert_eq!(real_embedding(&id), DMatrix::<f64>::identity(4, 4));
    }

    #[test]
    fn sigma_y_spectrum_doubles() {
        let mut y = CMatrix::zeros(2, 2);
        y[(0, 1)] = C64::new(0.0, -1.0);
        y[(1, 0)] = C64::new(0.0, 1.0);
        let e = real_embedding_matrix(&y).unwrap();
        assert_eq!(e, e.transpose());
        let ev = sorted(e.symmetric_eigenvalues().iter().copied().collect());
        for (a, b) in ev.iter().zip([-1.0, -1.0, 1.0, 1.0]) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn random_spectra_double() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [2, 3, 5, 8] {
            let h = random_hermitian(n, &mut rng);
            let ev = hermitian_eigenvalues(&h);
            let emb = sorted(
                real_embedding_matrix(&h)
                    .unwrap()
                    .symmetric_eigenvalues()
                    .iter()
                    .copied()
                    .collect(),
            );
            for (k, l) in ev.iter().enumerate() {
                assert!((emb[2 * k] - l).abs() < 1e-12);
                assert!((emb[2 * k + 1] - l).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut m = CMatrix::zeros(2, 2);
        m[(0, 1)] = C64::new(1.0, 0.0);
        assert!(real_embedding_matrix(&m).is_err());
    }

    #[test]
    fn dual_pairing() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 4;
        let raw = DMatrix::from_fn(2 * n, 2 * n, |_, _| rng.random_range(-1.0..1.0));
        let x = &raw + raw.transpose();
        let y = structured_dual(&x);
        let h = random_hermitian(n, &mut rng);
        let lhs = x.dot(&embed_unchecked(&h));
        assert!((lhs - trace_product(&y, &h)).abs() < 1e-12);
    }
}
