//! Step 2: the global state minimizing `tr(Wϱ)` among states whose
//! constrained marginals are PPT.

use serde::{Deserialize, Serialize};

use crate::conic::{
    self, ConicProgram, LinearFunctional, MapStep, MatrixExpr, SolveStatus, Tolerances,
};
use crate::error::{Error, Result};
use crate::operators::{
    party_name, project_party, CMatrix, DensityOperator, HermitianOperator, QuditRegister, C64,
};
use crate::witness::Witness;

/// Default number of post-measurement directions, split over the parties.
pub const DEFAULT_DIRECTIONS: usize = 1000;
/// Default strictness of the post-measurement PPT constraints.
pub const DEFAULT_EPSILON: f64 = 1e-4;
/// Allowed negativity when re-verifying returned states.
pub const STATE_VERIFY_TOLERANCE: f64 = 1e-7;

/// A projective measurement direction `|c⟩ = cos(θ/2)|0⟩ + e^{iφ} sin(θ/2)|1⟩`
/// on one qubit party.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementDirection {
    pub party: usize,
    pub theta: f64,
    pub phi: f64,
}

impl MeasurementDirection {
    pub fn new(party: usize, theta: f64, phi: f64) -> Self {
        Self { party, theta, phi }
    }

    pub fn vector(&self) -> [C64; 2] {
        [
            C64::new((self.theta / 2.0).cos(), 0.0),
            C64::from_polar((self.theta / 2.0).sin(), self.phi),
        ]
    }

    pub fn bloch(&self) -> [f64; 3] {
        let (st, ct) = self.theta.sin_cos();
        [st * self.phi.cos(), st * self.phi.sin(), ct]
    }

    /// `|c⟩⟨c|`.
    pub fn projector(&self) -> CMatrix {
        let v = self.vector();
        CMatrix::from_fn(2, 2, |r, c| v[r] * v[c].conj())
    }

    /// Angle between the Bloch vectors of two directions.
    pub fn angle_to(&self, other: &MeasurementDirection) -> f64 {
        let (a, b) = (self.bloch(), other.bloch());
        let dot: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        dot.clamp(-1.0, 1.0).acos()
    }
}

/// Fibonacci lattice on the Bloch sphere, poles included: point `k` has
/// `cos θ = 1 − 2k/(count−1)` and azimuth `k` times the golden angle.
pub fn sample_measurement_directions(
    register: &QuditRegister,
    party: usize,
    count: usize,
) -> Result<Vec<MeasurementDirection>> {
    if party >= register.num_parties() || register.dim_of(party) != 2 {
        return Err(Error::InvalidParties(format!(
            "party {} is not a qubit",
            party_name(party)
        )));
    }
    if count == 0 {
        return Err(Error::OutOfRange("need at least one direction".into()));
    }
    if count == 1 {
        return Ok(vec![MeasurementDirection::new(party, 0.0, 0.0)]);
    }
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    Ok((0..count)
        .map(|k| {
            let z = 1.0 - 2.0 * k as f64 / (count - 1) as f64;
            let phi = (golden * k as f64).rem_euclid(2.0 * std::f64::consts::PI);
            MeasurementDirection::new(party, z.clamp(-1.0, 1.0).acos(), phi)
        })
        .collect())
}

/// `⟨c|ϱ|c⟩` on the remaining parties (unnormalized; its trace is the
/// outcome probability).
pub fn post_measurement_state(
    rho: &DensityOperator,
    direction: &MeasurementDirection,
) -> Result<HermitianOperator> {
    if rho.register().dim_of(direction.party) != 2 {
        return Err(Error::InvalidParties(
            "measured party is not a qubit".into(),
        ));
    }
    project_party(rho.as_hermitian(), direction.party, &direction.vector())
}

/// Post-measurement constraint: `PT(⟨c|ϱ|c⟩) − ε·1 ⪰ 0`, transposing the
/// lowest-indexed remaining party.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PostMeasurement {
    pub direction: MeasurementDirection,
    pub epsilon: f64,
}

/// Marginal constraints on the state of Step 2.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstraintSet {
    pub register: QuditRegister,
    pub two_body_ppt: Vec<(usize, usize)>,
    pub three_body_ppt: Vec<[usize; 3]>,
    pub post_measurement: Vec<PostMeasurement>,
}

impl ConstraintSet {
    /// Every pair marginal PPT.
    pub fn all_pairs(register: QuditRegister) -> Self {
        let n = register.num_parties();
        let pairs = (0..n)
            .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
            .collect();
        Self {
            register,
            two_body_ppt: pairs,
            three_body_ppt: Vec::new(),
            post_measurement: Vec::new(),
        }
    }

    pub fn with_pairs(mut self, pairs: &[(usize, usize)]) -> Result<Self> {
        let n = self.register.num_parties();
        let mut ps = Vec::new();
        for &(a, b) in pairs {
            if a == b || a.max(b) >= n {
                return Err(Error::InvalidParties(format!("bad pair ({a}, {b})")));
            }
            ps.push((a.min(b), a.max(b)));
        }
        ps.sort_unstable();
        ps.dedup();
        self.two_body_ppt = ps;
        Ok(self)
    }

    pub fn with_triples(mut self, triples: &[[usize; 3]]) -> Result<Self> {
        let n = self.register.num_parties();
        let mut ts = Vec::new();
        for t in triples {
            let mut t = *t;
            t.sort_unstable();
            if t[0] == t[1] || t[1] == t[2] || t[2] >= n {
                return Err(Error::InvalidParties(format!("bad triple {t:?}")));
            }
            ts.push(t);
        }
        ts.sort_unstable();
        ts.dedup();
        self.three_body_ppt = ts;
        Ok(self)
    }

    /// Every triple PPT across each of its internal bipartitions.
    pub fn with_all_triples(self) -> Self {
        let n = self.register.num_parties();
        let mut ts = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                for c in b + 1..n {
                    ts.push([a, b, c]);
                }
            }
        }
        self.with_triples(&ts).expect("valid triples")
    }

    /// `count` lattice directions split evenly over all parties (the first
    /// `count mod N` parties get one extra), each with strictness `epsilon`.
    pub fn with_post_measurement(mut self, count: usize, epsilon: f64) -> Result<Self> {
        if epsilon <= 0.0 {
            return Err(Error::OutOfRange(
                "post-measurement epsilon must be positive".into(),
            ));
        }
        let n = self.register.num_parties();
        let mut out = Vec::with_capacity(count);
        for party in 0..n {
            let share = count / n + usize::from(party < count % n);
            if share == 0 {
                continue;
            }
            for direction in sample_measurement_directions(&self.register, party, share)? {
                out.push(PostMeasurement { direction, epsilon });
            }
        }
        self.post_measurement = out;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        for pm in &self.post_measurement {
            if pm.epsilon <= 0.0 {
                return Err(Error::OutOfRange(
                    "post-measurement epsilon must be positive".into(),
                ));
            }
            if self.register.dim_of(pm.direction.party) != 2 {
                return Err(Error::InvalidParties(
                    "post-measurement on a non-qubit".into(),
                ));
            }
        }
        if !self.post_measurement.is_empty() && self.register.num_parties() < 3 {
            return Err(Error::InvalidParties(
                "post-measurement needs three parties".into(),
            ));
        }
        Ok(())
    }

    /// True when every constrained marginal is two-qubit, so PPT means separable.
    pub fn separability_certified(&self) -> bool {
        self.three_body_ppt.is_empty()
            && self
                .two_body_ppt
                .iter()
                .all(|&(a, b)| self.register.dim_of(a) == 2 && self.register.dim_of(b) == 2)
    }

    /// Independent check of every constraint on a given state.
    pub fn check(&self, rho: &DensityOperator) -> Result<ConstraintReport> {
        let mut pairs = Vec::new();
        for &(a, b) in &self.two_body_ppt {
            let m = rho.marginal(&[a, b])?;
            pairs.push(((a, b), m.pt_min_eigenvalue(&[0])?));
        }
        let mut triples = Vec::new();
        for t in &self.three_body_ppt {
            let m = rho.marginal(t)?;
            let worst = (0..3)
                .map(|k| m.pt_min_eigenvalue(&[k]))
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .fold(f64::INFINITY, f64::min);
            triples.push((*t, worst));
        }
        let mut post_min = f64::INFINITY;
        for pm in &self.post_measurement {
            let op = post_measurement_state(rho, &pm.direction)?;
            let pt = crate::operators::partial_transpose(&op, &[0])?;
            post_min = post_min.min(pt.min_eigenvalue() - pm.epsilon);
        }
        let min_pair = pairs.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        let min_triple = triples.iter().map(|t| t.1).fold(f64::INFINITY, f64::min);
        let passed = min_pair >= -STATE_VERIFY_TOLERANCE
            && min_triple >= -STATE_VERIFY_TOLERANCE
            && post_min >= -STATE_VERIFY_TOLERANCE;
        Ok(ConstraintReport {
            pair_pt_min: pairs,
            triple_pt_min: triples,
            post_measurement_margin: (!self.post_measurement.is_empty()).then_some(post_min),
            passed,
            separability: if self.separability_certified() {
                "separable (two-qubit PPT)".into()
            } else {
                "PPT-certified, separability unverified".into()
            },
        })
    }
}

/// Per-constraint minimum eigenvalues of a state.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConstraintReport {
    pub pair_pt_min: Vec<((usize, usize), f64)>,
    pub triple_pt_min: Vec<([usize; 3], f64)>,
    /// `min λ(PT(⟨c|ϱ|c⟩)) − ε` over all constrained directions.
    pub post_measurement_margin: Option<f64>,
    pub passed: bool,
    pub separability: String,
}

/// Result of Step 2.
#[derive(Clone, Debug)]
pub struct StateOutcome {
    pub value: f64,
    pub state: DensityOperator,
    pub report: ConstraintReport,
    pub iterations: usize,
}

/// The Step-2 program for witness operator `w` (objective `tr(Wϱ)`).
pub fn state_program(w: &HermitianOperator, constraints: &ConstraintSet) -> Result<ConicProgram> {
    constraints.validate()?;
    let reg = &constraints.register;
    if w.register() != reg {
        return Err(Error::InvalidRegister(
            "witness and constraints differ in register".into(),
        ));
    }
    let d = reg.total_dim();
    let mut program = ConicProgram::new("constrained state");
    let rho = program.add_hermitian("rho", d);
    program.add_equality(
        LinearFunctional::new().hermitian(rho, CMatrix::identity(d, d)),
        1.0,
    );
    program.set_objective(LinearFunctional::new().hermitian(rho, w.matrix().clone()));
    program.add_psd(
        "rho",
        MatrixExpr::new(d).mapped(rho, 1.0, reg.clone(), vec![]),
    );
    for &(a, b) in &constraints.two_body_ppt {
        let dm = reg.dim_of(a) * reg.dim_of(b);
        program.add_psd(
            format!("PT[{}{}]", party_name(a), party_name(b)),
            MatrixExpr::new(dm).mapped(
                rho,
                1.0,
                reg.clone(),
                vec![
                    MapStep::PartialTrace { keep: vec![a, b] },
                    MapStep::PartialTranspose { parties: vec![0] },
                ],
            ),
        );
    }
    for t in &constraints.three_body_ppt {
        let dm = t.iter().map(|&p| reg.dim_of(p)).product();
        for k in 0..3 {
            program.add_psd(
                format!(
                    "PT[{}{}{}|{}]",
                    party_name(t[0]),
                    party_name(t[1]),
                    party_name(t[2]),
                    party_name(t[k])
                ),
                MatrixExpr::new(dm).mapped(
                    rho,
                    1.0,
                    reg.clone(),
                    vec![
                        MapStep::PartialTrace { keep: t.to_vec() },
                        MapStep::PartialTranspose { parties: vec![k] },
                    ],
                ),
            );
        }
    }
    for (i, pm) in constraints.post_measurement.iter().enumerate() {
        let dm = d / 2;
        program.add_psd(
            format!("PM[{}#{i}]", party_name(pm.direction.party)),
            MatrixExpr::new(dm)
                .constant(&CMatrix::identity(dm, dm).scale(-pm.epsilon))
                .mapped(
                    rho,
                    1.0,
                    reg.clone(),
                    vec![
                        MapStep::Project {
                            party: pm.direction.party,
                            vector: pm.direction.vector().to_vec(),
                        },
                        MapStep::PartialTranspose { parties: vec![0] },
                    ],
                ),
        );
    }
    Ok(program)
}

/// Minimizes `tr(Wϱ)` over states satisfying the constraints.
pub fn min_state_for_witness(
    witness: &Witness,
    constraints: &ConstraintSet,
) -> Result<StateOutcome> {
    min_state_for_operator(witness.operator(), constraints)
}

/// As [`min_state_for_witness`] for a bare operator.
pub fn min_state_for_operator(
    w: &HermitianOperator,
    constraints: &ConstraintSet,
) -> Result<StateOutcome> {
    let program = state_program(w, constraints)?;
    let solution = conic::solve(&program, &Tolerances::default())?;
    match solution.status {
        SolveStatus::Optimal => {}
        SolveStatus::Infeasible => {
            return Err(Error::Infeasible(format!(
                "no state satisfies the constraints: {}",
                solution.message
            )))
        }
        s => {
            return Err(Error::Solver(format!(
                "state program ended with status {s:?}: {}",
                solution.message
            )))
        }
    }
    let raw = HermitianOperator::from_hermitian_part(
        constraints.register.clone(),
        solution.hermitian(conic::VarId(0)),
    )?;
    let state = DensityOperator::from_approximate(raw, STATE_VERIFY_TOLERANCE)?;
    let value = state.expectation(w);
    if (value - solution.objective).abs() > 1e-8 {
        return Err(Error::Solver(format!(
            "objective {} does not match recomputed value {value}",
            solution.objective
        )));
    }
    let report = constraints.check(&state)?;
    Ok(StateOutcome {
        value,
        state,
        report,
        iterations: solution.iterations,
    })
}
