mod common;

use common::*;
use marginal_gme::analysis::{
    compatibility_range, detection_value, localizable_sweep, marginal_audit, noise_tolerance,
    range_along, ToleranceMode, Verdict, DEFAULT_GRID,
};
use marginal_gme::catalog::{self, eq8_partner_state, eq8_phase, eq8_state};
use marginal_gme::operators::{
    mix_with_white_noise, partial_trace, CMatrix, DensityOperator, HermitianOperator, PureState,
    QuditRegister, C64,
};
use marginal_gme::witness::{min_witness_value, MarginalPattern, MarginalSet};
use proptest::prelude::*;

fn pattern_of(rho: &DensityOperator, spec: &str) -> MarginalPattern {
    MarginalPattern::parse(rho.register().clone(), spec).unwrap()
}

#[test]
fn detection_curve_is_concave_with_one_sign_change() {
    for (id, spec) in [("eq5", "all"), ("appE", "AC,BC")] {
        let rho = catalog::build(id).unwrap().state;
        let pattern = pattern_of(&rho, spec);
        let ps: Vec<f64> = (0..10).map(|k| k as f64 / 9.0).collect();
        let v: Vec<f64> = ps
            .iter()
            .map(|&p| {
                detection_value(&rho, &pattern, ToleranceMode::MarginalRestricted, p).unwrap()
            })
            .collect();
        for k in 1..9 {
            assert!(
                v[k - 1] + v[k + 1] - 2.0 * v[k] <= 1e-5,
                "{id}: second difference at {k}"
            );
        }
        let changes = v
            .windows(2)
            .filter(|w| (w[0] < 0.0) != (w[1] < 0.0))
            .count();
        assert_eq!(changes, 1, "{id}: {v:?}");
    }
}

#[test]
fn tolerance_bracket_straddles_the_sign_change() {
    let rho = catalog::build("appA").unwrap().state;
    let pattern = pattern_of(&rho, "all");
    let mode = ToleranceMode::MarginalRestricted;
    let t = noise_tolerance(&rho, &pattern, mode).unwrap();
    assert!(t.bracket_width <= 1e-4);
    assert!(detection_value(&rho, &pattern, mode, t.bracket[0]).unwrap() < 0.0);
    assert!(detection_value(&rho, &pattern, mode, t.bracket[1]).unwrap() >= 0.0);
}

#[test]
fn undetected_state_has_zero_tolerance() {
    let rho = catalog::build("ghz3").unwrap().state;
    let t = noise_tolerance(
        &rho,
        &pattern_of(&rho, "all"),
        ToleranceMode::MarginalRestricted,
    )
    .unwrap();
    assert_eq!(t.p_star, 0.0);
}

#[test]
fn n4_noise_window_with_triples() {
    let entry = catalog::build("appD").unwrap();
    let pattern = pattern_of(&entry.state, "all");
    for p in [0.15, 0.20] {
        let rho = mix_with_white_noise(&entry.state, p).unwrap();
        let audit = marginal_audit(&rho, &pattern, true).unwrap();
        assert!(audit.all_ppt, "p = {p}");
        assert_eq!(audit.triples.len(), 4);
        assert!(
            min_witness_value(&rho, &pattern).unwrap().value < -1e-7,
            "p = {p}"
        );
    }
    let rho = mix_with_white_noise(&entry.state, 0.23).unwrap();
    assert!(min_witness_value(&rho, &pattern).unwrap().value >= 0.0);
}

#[test]
fn bell_pair_fails_the_audit() {
    let reg = QuditRegister::qubits(3);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut amps = vec![C64::new(0.0, 0.0); 8];
    amps[0] = C64::new(s, 0.0);
    amps[6] = C64::new(s, 0.0);
    let rho = PureState::new(reg, amps.into()).unwrap().density();
    let audit = marginal_audit(&rho, &pattern_of(&rho, "all"), false).unwrap();
    let ab = &audit.pairs[0];
    assert!(!ab.ppt);
    assert!((ab.pt_min_eigenvalue + 0.5).abs() < 1e-12);
    assert!(!audit.all_ppt);
}

#[test]
fn eq8_marginals_admit_both_phases() {
    let phi = eq8_phase();
    let a = eq8_state(phi);
    let b = eq8_partner_state(phi);
    let overlap = a.fidelity(&b);
    let x = a
        .density()
        .as_hermitian()
        .sub(b.density().as_hermitian())
        .unwrap();
    for spec in ["AB,BC,CD", "all"] {
        let rho = a.density();
        let marginals = MarginalSet::from_state(&rho, &pattern_of(&rho, spec)).unwrap();
        let r = range_along(&marginals, &x).unwrap();
        // Both states are compatible; no state exceeds the spectrum of X.
        // Near these pure states the compatible set moves like the square
        // root of a marginal perturbation, so solver noise costs ~1e-4.
        assert!(r.range >= 2.0 * (1.0 - overlap) - 1e-3, "{spec}: {r:?}");
        assert!(
            r.range <= 2.0 * (1.0 - overlap).sqrt() + 1e-6,
            "{spec}: {r:?}"
        );
    }
}

#[test]
fn maximally_mixed_marginals_are_not_unique() {
    let rho = DensityOperator::maximally_mixed(QuditRegister::qubits(3));
    let report =
        compatibility_range(&MarginalSet::from_state(&rho, &pattern_of(&rho, "all")).unwrap())
            .unwrap();
    assert_eq!(report.verdict, Verdict::NonUnique);
    assert!(report.max_range > 0.5);
}

#[test]
fn uniqueness_survives_party_reordering() {
    for (id, perms) in [
        ("eq8", vec![vec![3, 2, 1, 0], vec![1, 0, 3, 2]]),
        ("appA", vec![vec![2, 0, 1]]),
    ] {
        let rho = catalog::build(id).unwrap().state;
        let base =
            compatibility_range(&MarginalSet::from_state(&rho, &pattern_of(&rho, "all")).unwrap())
                .unwrap();
        for perm in perms {
            let moved = permute_parties(&rho, &perm);
            let r = compatibility_range(
                &MarginalSet::from_state(&moved, &pattern_of(&moved, "all")).unwrap(),
            )
            .unwrap();
            assert!((r.max_range - base.max_range).abs() < 1e-6, "{id} {perm:?}");
            assert_eq!(r.verdict, base.verdict);
        }
    }
}

#[test]
fn ghz_projection_leaves_entanglement() {
    let rho = catalog::build("ghz3").unwrap().state;
    let s = localizable_sweep(&rho, 2, (20, 40)).unwrap();
    assert!(s.minimum < -0.1);
}

#[test]
fn sweep_is_stable_under_grid_refinement() {
    for id in ["appG", "eq5"] {
        let rho = catalog::build(id).unwrap().state;
        let coarse = localizable_sweep(&rho, 0, DEFAULT_GRID).unwrap();
        let fine = localizable_sweep(&rho, 0, (2 * DEFAULT_GRID.0, 2 * DEFAULT_GRID.1)).unwrap();
        assert!((coarse.minimum - fine.minimum).abs() < 1e-5, "{id}");
        assert!(coarse.refine_evaluations <= 200);
    }
}

#[test]
fn sweep_rejects_qutrit_party() {
    let rho = catalog::build("appF").unwrap().state;
    assert!(localizable_sweep(&rho, 0, (4, 4)).is_err());
}

/// `Σ_i K_i ρ K_i†` on the last party with `Σ K_i† K_i = G† G ≤ 1`.
fn operation_on_last(rho: &DensityOperator, g: &CMatrix) -> HermitianOperator {
    let d = rho.dim();
    let rest = d / 2;
    let mut out = CMatrix::zeros(d, d);
    for k in 0..g.nrows() / 2 {
        let kraus = g.rows(2 * k, 2).into_owned();
        let full = CMatrix::identity(rest, rest).kronecker(&kraus);
        out += &full * rho.matrix() * full.adjoint();
    }
    HermitianOperator::from_hermitian_part(rho.register().clone(), &out).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    /// Separable post-measurement states for every projective measurement
    /// imply separability after any local operation on the measured party.
    #[test]
    fn local_operations_keep_the_remaining_pair_ppt(seed in any::<u64>(), party in 0usize..3, kraus in 1usize..4) {
        let rho = catalog::build("appG").unwrap().state;
        let mut order: Vec<usize> = (0..3).filter(|&p| p != party).collect();
        order.push(party);
        let moved = permute_parties(&rho, &order);
        let mut r = rng(seed);
        let mut g = gaussian(2 * kraus, 2, &mut r);
        let top = g.singular_values()[0];
        g /= C64::new(top * (1.0 + 1e-12), 0.0);
        let after = operation_on_last(&moved, &g);
        let pair = partial_trace(&after, &[0, 1]).unwrap();
        let min = marginal_gme::operators::partial_transpose(&pair, &[0]).unwrap().min_eigenvalue();
        prop_assert!(min >= -1e-6, "{min}");
    }
}

#[test]
fn measured_party_sweep_covers_the_closure_premise() {
    let rho = catalog::build("appG").unwrap().state;
    for party in 0..3 {
        assert!(
            localizable_sweep(&rho, party, DEFAULT_GRID)
                .unwrap()
                .minimum
                >= 0.0
        );
    }
}
