use super::*;
use crate::operators::{operator_basis, PureState, QuditRegister};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn pauli(k: usize) -> SparseCMatrix {
    operator_basis(2).unwrap().element(k).clone()
}

fn both() -> Vec<Box<dyn Backend>> {
    vec![Box::new(InteriorPoint), Box::new(ToyBackend::default())]
}

#[test]
fn max_eigenvalue_of_sigma_z() {
    for backend in both() {
        let mut p = ConicProgram::new("t");
        let t = p.add_real("t", 1);
        p.add_psd(
            "t1 - z",
            MatrixExpr::new(2)
                .scalar(t, 0, SparseCMatrix::identity(2))
                .constant(&pauli(3).to_dense().map(|z| -z)),
        );
        p.set_objective(LinearFunctional::new().real(t, 0, 1.0));
        let s = solve_with(&p, &Tolerances::default(), backend.as_ref()).unwrap();
        assert!(s.is_optimal(), "{}: {}", backend.name(), s.message);
        assert!(
            (s.objective - 1.0).abs() < 1e-7,
            "{}: {}",
            backend.name(),
            s.objective
        );
    }
}

#[test]
fn trace_with_fixed_corner() {
    for backend in both() {
        let mut p = ConicProgram::new("corner");
        let x = p.add_hermitian("X", 2);
        let mut e11 = CMatrix::zeros(2, 2);
        e11[(0, 0)] = C64::new(1.0, 0.0);
        p.add_equality(LinearFunctional::new().hermitian(x, e11), 1.0);
        p.add_psd(
            "X",
            MatrixExpr::new(2).mapped(x, 1.0, QuditRegister::qubits(1), vec![]),
        );
        p.set_objective(LinearFunctional::new().hermitian(x, CMatrix::identity(2, 2)));
        let s = solve_with(&p, &Tolerances::default(), backend.as_ref()).unwrap();
        assert!(s.is_optimal(), "{}: {}", backend.name(), s.message);
        assert!((s.objective - 1.0).abs() < 1e-7);
        assert!(s.residuals.max_equality_violation < 1e-12);
        if let Some(d) = s.dual_objective {
            assert!(s.objective >= d - 1e-6);
        }
    }
}

#[test]
fn infeasible_trace() {
    let mut p = ConicProgram::new("neg");
    let x = p.add_hermitian("X", 2);
    p.add_equality(
        LinearFunctional::new().hermitian(x, CMatrix::identity(2, 2)),
        -1.0,
    );
    p.add_psd(
        "X",
        MatrixExpr::new(2).mapped(x, 1.0, QuditRegister::qubits(1), vec![]),
    );
    p.set_objective(LinearFunctional::new().hermitian(x, CMatrix::identity(2, 2)));
    let s = solve_with(&p, &Tolerances::default(), &InteriorPoint).unwrap();
    assert_eq!(s.status, SolveStatus::Infeasible, "{}", s.message);
}

#[test]
fn unbounded_direction() {
    let mut p = ConicProgram::new("ray");
    let v = p.add_real("v", 1);
    p.add_psd(
        "v",
        MatrixExpr::new(1).scalar(v, 0, SparseCMatrix::identity(1)),
    );
    p.set_objective(LinearFunctional::new().real(v, 0, -1.0));
    let s = solve_with(&p, &Tolerances::default(), &InteriorPoint).unwrap();
    assert_eq!(s.status, SolveStatus::Unbounded, "{}", s.message);
}

#[test]
fn ppt_states_have_bell_fidelity_at_most_half() {
    let reg = QuditRegister::qubits(2);
    let v = PureState::basis(reg.clone(), &[0, 0]).unwrap().amplitudes()
        + PureState::basis(reg.clone(), &[1, 1]).unwrap().amplitudes();
    let bell = PureState::normalized(reg.clone(), v).unwrap().density();
    let mut p = ConicProgram::new("ppt");
    let rho = p.add_hermitian("rho", 4);
    p.add_equality(
        LinearFunctional::new().hermitian(rho, CMatrix::identity(4, 4)),
        1.0,
    );
    p.add_psd(
        "rho",
        MatrixExpr::new(4).mapped(rho, 1.0, reg.clone(), vec![]),
    );
    p.add_psd(
        "rho^TA",
        MatrixExpr::new(4).mapped(
            rho,
            1.0,
            reg,
            vec![MapStep::PartialTranspose { parties: vec![0] }],
        ),
    );
    p.set_objective(LinearFunctional::new().hermitian(rho, bell.matrix().map(|z| -z)));
    let s = solve(&p, &Tolerances::default()).unwrap();
    assert!(s.is_optimal(), "{}", s.message);
    assert!((s.objective + 0.5).abs() < 1e-7, "{}", s.objective);
    let d = s.dual_objective.unwrap();
    assert!(s.objective >= d - 1e-6 && (s.objective - d).abs() < 1e-6);
    assert!(s.residuals.min_psd_eigenvalue > -1e-7);
    let again = solve(&p, &Tolerances::default()).unwrap();
    assert!((again.objective - s.objective).abs() < 1e-8);
    assert!(p.to_json().unwrap().contains("partial_transpose"));
}

#[test]
fn toy_agrees_with_interior_point() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let herm = |rng: &mut ChaCha8Rng| {
        let a = CMatrix::from_fn(2, 2, |_, _| {
            C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        SparseCMatrix::from_dense(&(&a + a.adjoint()).scale(0.5), 0.0)
    };
    for _ in 0..6 {
        let mut p = ConicProgram::new("random");
        let v = p.add_real("v", 2);
        for _ in 0..2 {
            let e = MatrixExpr::new(2)
                .constant(&CMatrix::identity(2, 2))
                .scalar(v, 0, herm(&mut rng))
                .scalar(v, 1, herm(&mut rng));
            p.add_psd("block", e);
        }
        for i in 0..2 {
            for sign in [1.0, -1.0] {
                let e = MatrixExpr::new(1)
                    .constant(&CMatrix::identity(1, 1).map(|z| z * 2.0))
                    .scalar(v, i, SparseCMatrix::identity(1).scaled(sign));
                p.add_psd("box", e);
            }
        }
        p.set_objective(
            LinearFunctional::new()
                .real(v, 0, rng.random_range(-1.0..1.0))
                .real(v, 1, rng.random_range(-1.0..1.0)),
        );
        let a = solve_with(&p, &Tolerances::default(), &InteriorPoint).unwrap();
        let b = solve_with(&p, &Tolerances::default(), &ToyBackend::default()).unwrap();
        assert!(
            a.is_optimal() && b.is_optimal(),
            "{} / {}",
            a.message,
            b.message
        );
        assert!(
            (a.objective - b.objective).abs() < 1e-6,
            "{} vs {}",
            a.objective,
            b.objective
        );
    }
}
