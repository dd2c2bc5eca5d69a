//! The see-saw search: alternate the witness program (Step 1) and the
//! constrained state program (Step 2) from a random pure seed.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conic::NEGATIVITY_THRESHOLD;
use crate::error::{Error, Result};
use crate::operators::{CMatrix, CVector, DensityOperator, PureState, QuditRegister, C64};
use crate::statesearch::{min_state_for_witness, ConstraintReport, ConstraintSet};
use crate::witness::{
    min_witness_value, validate_witness, witness_value, MarginalPattern, MarginalSet, Witness,
    WitnessValidation,
};

pub const DEFAULT_MAX_ROUNDS: usize = 50;
pub const DEFAULT_STALL_TOLERANCE: f64 = 1e-6;
pub const DEFAULT_POLISH_ROUNDS: usize = 10;

fn normal_vector(dim: usize, rng: &mut ChaCha20Rng) -> CVector {
    CVector::from_fn(dim, |_, _| {
        C64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
    })
}

/// Haar-random pure state from complex standard-normal amplitudes.
pub fn random_pure_state(register: &QuditRegister, seed: u64) -> PureState {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let v = normal_vector(register.total_dim(), &mut rng);
    PureState::normalized(register.clone(), v).expect("a Gaussian vector is nonzero")
}

/// Projector onto [`random_pure_state`].
pub fn random_pure_seed(register: &QuditRegister, seed: u64) -> DensityOperator {
    random_pure_state(register, seed).density()
}

/// Haar-random unitary of size `d` (QR of a Ginibre matrix with phase fix).
pub fn random_unitary(d: usize, rng: &mut ChaCha20Rng) -> CMatrix {
    let g = CMatrix::from_fn(d, d, |_, _| {
        C64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
    });
    let qr = g.qr();
    let (q, r) = (qr.q(), qr.r());
    let mut u = q;
    for j in 0..d {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 {
            rjj / rjj.norm()
        } else {
            C64::ONE
        };
        for i in 0..d {
            u[(i, j)] *= phase;
        }
    }
    u
}

/// One Haar-random unitary per party.
pub fn random_local_unitaries(register: &QuditRegister, seed: u64) -> Vec<CMatrix> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    register
        .dims()
        .iter()
        .map(|&d| random_unitary(d, &mut rng))
        .collect()
}

/// Sorted pair-marginal spectra; equal for states related by local unitaries.
pub fn marginal_fingerprint(rho: &DensityOperator) -> Result<Vec<((usize, usize), Vec<f64>)>> {
    let n = rho.register().num_parties();
    let mut out = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            let mut ev = rho.marginal(&[a, b])?.eigenvalues();
            ev.sort_by(|x, y| y.total_cmp(x));
            out.push(((a, b), ev));
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchConfig {
    pub register: QuditRegister,
    pub pattern: MarginalPattern,
    pub constraints: ConstraintSet,
    pub seed: u64,
    pub max_rounds: usize,
    pub stall_tolerance: f64,
    pub success_threshold: f64,
    pub polish_rounds: usize,
}

impl SearchConfig {
    /// All-pairs pattern and all-pairs PPT constraints.
    pub fn all_pairs(register: QuditRegister, seed: u64) -> Self {
        Self {
            pattern: MarginalPattern::all_pairs(register.clone()),
            constraints: ConstraintSet::all_pairs(register.clone()),
            register,
            seed,
            max_rounds: DEFAULT_MAX_ROUNDS,
            stall_tolerance: DEFAULT_STALL_TOLERANCE,
            success_threshold: NEGATIVITY_THRESHOLD,
            polish_rounds: DEFAULT_POLISH_ROUNDS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_rounds == 0 {
            return Err(Error::Config("max_rounds must be at least 1".into()));
        }
        if self.pattern.register() != &self.register || self.constraints.register != self.register {
            return Err(Error::Config(
                "pattern, constraints and register disagree".into(),
            ));
        }
        if !(self.stall_tolerance >= 0.0) || !(self.success_threshold <= 0.0) {
            return Err(Error::Config(
                "stall tolerance must be ≥ 0 and threshold ≤ 0".into(),
            ));
        }
        self.constraints.validate()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchStatus {
    Success,
    Stalled,
    Infeasible,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Round {
    pub round: usize,
    pub step1: f64,
    pub step2: f64,
    pub polishing: bool,
}

/// Independent re-check of a search result.
#[derive(Clone, Debug, Serialize)]
pub struct Verification {
    pub witness: WitnessValidation,
    pub constraints: ConstraintReport,
    /// The final witness evaluated on the final state's marginals.
    pub marginal_value: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SearchOutcome {
    pub status: SearchStatus,
    /// First round whose Step 2 went below the threshold.
    pub success_round: Option<usize>,
    /// Step-1 value of the final state (most negative seen).
    pub best_value: f64,
    pub state: Option<DensityOperator>,
    pub witness: Option<Witness>,
    pub history: Vec<Round>,
    pub verification: Option<Verification>,
    pub fingerprint: Vec<((usize, usize), Vec<f64>)>,
    pub message: String,
}

/// Step 1 on `rho`, then Step 2 for the resulting witness.
fn round(
    config: &SearchConfig,
    rho: &DensityOperator,
) -> Result<(f64, Witness, f64, DensityOperator)> {
    let s1 = min_witness_value(rho, &config.pattern)?;
    let s2 = min_state_for_witness(&s1.witness, &config.constraints)?;
    Ok((s1.value, s1.witness, s2.value, s2.state))
}

fn verify(config: &SearchConfig, rho: &DensityOperator, witness: &Witness) -> Result<Verification> {
    let wv = validate_witness(witness);
    let constraints = config.constraints.check(rho)?;
    let marginals = MarginalSet::from_state(rho, &config.pattern)?;
    let marginal_value = witness_value(witness, &marginals)?;
    let passed = wv.passed && constraints.passed && marginal_value < config.success_threshold;
    Ok(Verification {
        witness: wv,
        constraints,
        marginal_value,
        passed,
    })
}

/// Runs the see-saw loop for one seed.
pub fn run_seesaw(config: &SearchConfig) -> Result<SearchOutcome> {
    config.validate()?;
    let mut rho = random_pure_seed(&config.register, config.seed);
    let mut history = Vec::new();
    let mut prev_step2: Option<f64> = None;
    let mut best_step2 = f64::INFINITY;
    let mut success_round = None;

    for r in 1..=config.max_rounds {
        let (v1, _, v2, next) = match round(config, &rho) {
            Ok(x) => x,
            Err(Error::Infeasible(msg)) => {
                return Ok(SearchOutcome {
                    status: SearchStatus::Infeasible,
                    success_round: None,
                    best_value: f64::INFINITY,
                    state: None,
                    witness: None,
                    history,
                    verification: None,
                    fingerprint: Vec::new(),
                    message: msg,
                })
            }
            Err(e) => return Err(e),
        };
        history.push(Round {
            round: r,
            step1: v1,
            step2: v2,
            polishing: false,
        });
        rho = next;
        best_step2 = best_step2.min(v2);
        if v2 < config.success_threshold {
            success_round = Some(r);
            break;
        }
        if prev_step2.is_some_and(|p| (p - v2).abs() < config.stall_tolerance) {
            break;
        }
        prev_step2 = Some(v2);
    }

    let Some(success) = success_round else {
        let s1 = min_witness_value(&rho, &config.pattern)?;
        let message = format!("no negative Step-2 value after {} rounds", history.len());
        return Ok(SearchOutcome {
            status: SearchStatus::Stalled,
            success_round: None,
            best_value: best_step2.min(s1.value),
            fingerprint: marginal_fingerprint(&rho)?,
            state: Some(rho),
            witness: Some(s1.witness),
            history,
            verification: None,
            message,
        });
    };

    // Polishing: keep the Step-2 state with the most negative Step-1 value.
    let first = min_witness_value(&rho, &config.pattern)?;
    let mut current = (first.value, rho, first.witness);
    let mut best = current.clone();
    for k in 0..config.polish_rounds {
        let s2 = min_state_for_witness(&current.2, &config.constraints)?;
        let s1 = min_witness_value(&s2.state, &config.pattern)?;
        history.push(Round {
            round: success + k + 1,
            step1: current.0,
            step2: s2.value,
            polishing: true,
        });
        let improvement = current.0 - s1.value;
        current = (s1.value, s2.state, s1.witness);
        if current.0 < best.0 {
            best = current.clone();
        }
        if improvement.abs() < config.stall_tolerance {
            break;
        }
    }

    let (value, state, witness) = best;
    let verification = verify(config, &state, &witness)?;
    Ok(SearchOutcome {
        status: SearchStatus::Success,
        success_round: Some(success),
        best_value: value,
        fingerprint: marginal_fingerprint(&state)?,
        message: if verification.passed {
            "certified".into()
        } else {
            "negative Step-2 value but verification failed".into()
        },
        state: Some(state),
        witness: Some(witness),
        history,
        verification: Some(verification),
    })
}

/// Independent runs over several seeds, in parallel.
pub fn run_seeds(config: &SearchConfig, seeds: &[u64]) -> Vec<Result<SearchOutcome>> {
    seeds
        .par_iter()
        .map(|&seed| {
            let mut c = config.clone();
            c.seed = seed;
            run_seesaw(&c)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_is_deterministic_and_pure() {
        let reg = QuditRegister::qubits(3);
        let a = random_pure_seed(&reg, 7);
        let b = random_pure_seed(&reg, 7);
        assert_eq!(a, b);
        assert!((a.matrix().trace().re - 1.0).abs() < 1e-12);
        assert!((a.purity() - 1.0).abs() < 1e-12);
        assert_ne!(a, random_pure_seed(&reg, 8));
    }

    #[test]
    fn random_unitary_is_unitary() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let u = random_unitary(3, &mut rng);
        assert!((&u * u.adjoint() - CMatrix::identity(3, 3)).norm() < 1e-12);
    }

    #[test]
    fn config_validation() {
        let reg = QuditRegister::qubits(3);
        let mut c = SearchConfig::all_pairs(reg, 1);
        assert!(c.validate().is_ok());
        c.max_rounds = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn three_qubit_search_succeeds() {
        let reg = QuditRegister::qubits(3);
        let out = run_seesaw(&SearchConfig::all_pairs(reg, 1)).unwrap();
        assert_eq!(out.status, SearchStatus::Success, "{:?}", out.history);
        let v = out.verification.as_ref().unwrap();
        assert!(v.passed, "{v:?}");
        assert!(out.best_value < NEGATIVITY_THRESHOLD);
    }

    #[test]
    fn single_pair_never_certifies() {
        let reg = QuditRegister::qubits(3);
        let mut c = SearchConfig::all_pairs(reg.clone(), 2);
        c.pattern = MarginalPattern::parse(reg, "AB").unwrap();
        c.max_rounds = 5;
        let out = run_seesaw(&c).unwrap();
        assert_eq!(out.status, SearchStatus::Stalled);
        assert!(out.best_value >= NEGATIVITY_THRESHOLD);
    }
}
