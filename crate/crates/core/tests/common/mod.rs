#![allow(dead_code)]

use marginal_gme::operators::{
    mix_with_white_noise, tensor_product, Bipartition, CMatrix, DensityOperator, HermitianOperator,
    QuditRegister, C64,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

pub fn gaussian(d: usize, cols: usize, rng: &mut ChaCha20Rng) -> CMatrix {
    CMatrix::from_fn(d, cols, |_, _| {
        C64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
    })
}

/// `G G† / tr(G G†)` for a `d × rank` Gaussian `G`.
pub fn random_density(
    register: &QuditRegister,
    rank: usize,
    rng: &mut ChaCha20Rng,
) -> DensityOperator {
    let g = gaussian(register.total_dim(), rank, rng);
    let m = &g * g.adjoint();
    let t = m.trace().re;
    DensityOperator::new(register.clone(), m / C64::new(t, 0.0)).unwrap()
}

pub fn random_hermitian(register: &QuditRegister, rng: &mut ChaCha20Rng) -> HermitianOperator {
    let g = gaussian(register.total_dim(), register.total_dim(), rng);
    HermitianOperator::from_hermitian_part(
        register.clone(),
        &((&g + g.adjoint()) * C64::new(0.5, 0.0)),
    )
    .unwrap()
}

/// Tensor product of random single-party states.
pub fn random_product(register: &QuditRegister, rng: &mut ChaCha20Rng) -> DensityOperator {
    let factors: Vec<HermitianOperator> = register
        .dims()
        .iter()
        .map(|&d| {
            let r = rng.random_range(1..=d);
            random_density(&QuditRegister::new(vec![d]).unwrap(), r, rng).into_hermitian()
        })
        .collect();
    DensityOperator::from_hermitian(tensor_product(&factors).unwrap()).unwrap()
}

/// A random state mixed with the least white noise (to 1e-3) that makes it
/// PPT across `m`, then pushed a little further inside.
pub fn random_ppt_across(
    register: &QuditRegister,
    m: &Bipartition,
    rng: &mut ChaCha20Rng,
) -> DensityOperator {
    let rank = rng.random_range(1..=3);
    let rho = random_density(register, rank, rng);
    let ppt = |p: f64| {
        mix_with_white_noise(&rho, p)
            .unwrap()
            .pt_min_eigenvalue(m.side())
            .unwrap()
            >= 0.0
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    if ppt(0.0) {
        return rho;
    }
    while hi - lo > 1e-3 {
        let mid = 0.5 * (lo + hi);
        if ppt(mid) {
            hi = mid
        } else {
            lo = mid
        }
    }
    let state = mix_with_white_noise(&rho, (hi + 1e-3).min(1.0)).unwrap();
    assert!(state.pt_min_eigenvalue(m.side()).unwrap() >= 0.0);
    state
}

/// Random convex mixture of states that are each PPT across some bipartition.
pub fn random_ppt_mixture(register: &QuditRegister, rng: &mut ChaCha20Rng) -> DensityOperator {
    let cuts = Bipartition::all(register.num_parties());
    let k = rng.random_range(1..=4);
    let parts: Vec<(f64, DensityOperator)> = (0..k)
        .map(|_| {
            let w: f64 = rng.random_range(0.05..1.0);
            let s = if rng.random_bool(0.3) {
                random_product(register, rng)
            } else {
                let m = &cuts[rng.random_range(0..cuts.len())];
                random_ppt_across(register, m, rng)
            };
            (w, s)
        })
        .collect();
    let total: f64 = parts.iter().map(|p| p.0).sum();
    let refs: Vec<(f64, &DensityOperator)> = parts.iter().map(|(w, s)| (w / total, s)).collect();
    DensityOperator::mixture(&refs).unwrap()
}

/// Reorders parties: party `k` of the result is party `perm[k]` of `rho`.
pub fn permute_parties(rho: &DensityOperator, perm: &[usize]) -> DensityOperator {
    let dims = rho.register().dims().to_vec();
    let new_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
    let d = rho.dim();
    let digits = |mut i: usize, ds: &[usize]| {
        let mut out = vec![0; ds.len()];
        for k in (0..ds.len()).rev() {
            out[k] = i % ds[k];
            i /= ds[k];
        }
        out
    };
    let index =
        |digs: &[usize], ds: &[usize]| digs.iter().zip(ds).fold(0, |acc, (&x, &dk)| acc * dk + x);
    let map: Vec<usize> = (0..d)
        .map(|i| {
            let nd = digits(i, &new_dims);
            let mut old = vec![0; dims.len()];
            for (k, &p) in perm.iter().enumerate() {
                old[p] = nd[k];
            }
            index(&old, &dims)
        })
        .collect();
    let m = CMatrix::from_fn(d, d, |i, j| rho.matrix()[(map[i], map[j])]);
    DensityOperator::new(QuditRegister::new(new_dims).unwrap(), m).unwrap()
}

/// One line of the acceptance log.
pub fn report(criterion: &str, passed: bool, detail: &str) {
    println!(
        "[{}] {criterion}: {detail}",
        if passed { "PASS" } else { "FAIL" }
    );
}
