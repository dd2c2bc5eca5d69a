use marginal_gme::analysis::marginal_audit;
use marginal_gme::iterate::{
    random_local_unitaries, run_seeds, run_seesaw, SearchConfig, SearchStatus,
};
use marginal_gme::operators::{DensityOperator, QuditRegister};
use marginal_gme::statesearch::{min_state_for_witness, DEFAULT_EPSILON};
use marginal_gme::witness::{min_witness_value, validate_witness, MarginalPattern};

fn config(seed: u64) -> SearchConfig {
    SearchConfig::all_pairs(QuditRegister::qubits(3), seed)
}

#[test]
fn step_one_values_never_increase_after_the_first_round() {
    for seed in 1..=5 {
        let outcome = run_seesaw(&config(seed)).unwrap();
        assert_eq!(outcome.status, SearchStatus::Success, "seed {seed}");
        let steps: Vec<f64> = outcome.history.iter().map(|r| r.step1).collect();
        for w in steps[1..].windows(2) {
            assert!(w[1] <= w[0] + 1e-6, "seed {seed}: {steps:?}");
        }
    }
}

#[test]
fn success_is_reverified_outside_the_solver() {
    let outcome = run_seesaw(&config(11)).unwrap();
    let v = outcome.verification.expect("verified");
    assert!(v.passed && v.witness.passed && v.constraints.passed);
    assert!(outcome.best_value < -1e-7);
    let w = outcome.witness.unwrap();
    assert!(validate_witness(&w).passed);
    let rho = outcome.state.unwrap();
    assert!((w.evaluate(&rho) - outcome.best_value).abs() < 1e-8);
}

#[test]
fn local_unitaries_preserve_the_certified_property() {
    let outcome = run_seesaw(&config(4)).unwrap();
    let rho = outcome.state.unwrap();
    let reg = rho.register().clone();
    let pattern = MarginalPattern::all_pairs(reg.clone());
    for seed in [1, 2, 3] {
        let rotated = rho
            .apply_local_unitaries(&random_local_unitaries(&reg, seed))
            .unwrap();
        let audit = marginal_audit(&rotated, &pattern, false).unwrap();
        assert!(audit.all_ppt);
        let v = min_witness_value(&rotated, &pattern).unwrap();
        assert!(v.value < -1e-7, "seed {seed}: {}", v.value);
        assert!((v.value - outcome.best_value).abs() < 1e-5);
    }
}

#[test]
fn mixtures_of_feasible_states_stay_feasible() {
    let a = run_seesaw(&config(1)).unwrap();
    let b = run_seesaw(&config(2)).unwrap();
    let (ra, rb) = (a.state.unwrap(), b.state.unwrap());
    let constraints = config(1).constraints;
    for t in [0.25, 0.5, 0.75] {
        let mix = DensityOperator::mixture(&[(t, &ra), (1.0 - t, &rb)]).unwrap();
        assert!(constraints.check(&mix).unwrap().passed, "t = {t}");
    }
}

#[test]
fn post_measurement_constraints_hold_on_the_outcome() {
    let mut c = config(2);
    c.constraints = c
        .constraints
        .with_post_measurement(300, DEFAULT_EPSILON)
        .unwrap();
    let outcome = run_seesaw(&c).unwrap();
    assert_eq!(outcome.status, SearchStatus::Success);
    let report = &outcome.verification.as_ref().unwrap().constraints;
    assert!(report.post_measurement_margin.unwrap() >= -1e-7);
}

#[test]
fn step_two_reports_its_constraint_check() {
    let outcome = run_seesaw(&config(3)).unwrap();
    let w = outcome.witness.unwrap();
    let step = min_state_for_witness(&w, &config(3).constraints).unwrap();
    assert!(step.report.passed);
    assert!((w.evaluate(&step.state) - step.value).abs() < 1e-8);
}

#[test]
fn parallel_runs_match_sequential_runs() {
    let c = config(0);
    let seeds = [7, 3, 5];
    let parallel = run_seeds(&c, &seeds);
    for (seed, outcome) in seeds.iter().zip(parallel) {
        let single = run_seesaw(&config(*seed)).unwrap();
        let outcome = outcome.unwrap();
        assert_eq!(outcome.status, single.status);
        assert_eq!(outcome.best_value, single.best_value);
    }
}
