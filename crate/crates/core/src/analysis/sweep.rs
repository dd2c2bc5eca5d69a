use std::f64::consts::PI;
use std::sync::atomic::{AtomicUsize, Ordering};

use argmin::core::{CostFunction, Executor, State};
use argmin::solver::neldermead::NelderMead;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::operators::{partial_transpose, DensityOperator};
use crate::statesearch::{post_measurement_state, MeasurementDirection};

/// `(θ points, φ points)` of the coarse grid.
pub const DEFAULT_GRID: (usize, usize) = (60, 120);
pub const MAX_REFINE_EVALUATIONS: usize = 200;

#[derive(Clone, Debug, Serialize)]
pub struct SweepResult {
    pub party: usize,
    pub grid: (usize, usize),
    pub grid_minimum: f64,
    /// Heuristic global minimum after refinement.
    pub minimum: f64,
    pub worst: MeasurementDirection,
    pub refine_evaluations: usize,
}

/// Smallest eigenvalue of the partial transpose of `⟨c|ϱ|c⟩`.
pub fn post_measurement_pt_min(rho: &DensityOperator, dir: &MeasurementDirection) -> Result<f64> {
    let op = post_measurement_state(rho, dir)?;
    Ok(partial_transpose(&op, &[0])?.min_eigenvalue())
}

struct Objective<'a> {
    rho: &'a DensityOperator,
    party: usize,
    calls: AtomicUsize,
}

impl CostFunction for Objective<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, p: &Self::Param) -> std::result::Result<f64, argmin::core::Error> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        let dir = MeasurementDirection::new(self.party, p[0], p[1]);
        post_measurement_pt_min(self.rho, &dir).map_err(|e| argmin::core::Error::msg(e.to_string()))
    }
}

/// Minimum of [`post_measurement_pt_min`] over the Bloch sphere of `party`:
/// a `θ × φ` grid followed by a Nelder–Mead polish from the best grid point.
pub fn localizable_sweep(
    rho: &DensityOperator,
    party: usize,
    grid: (usize, usize),
) -> Result<SweepResult> {
    let reg = rho.register();
    if party >= reg.num_parties() || reg.dim_of(party) != 2 {
        return Err(Error::InvalidParties(format!(
            "party {party} is not a qubit"
        )));
    }
    let (nt, np) = (grid.0.max(2), grid.1.max(1));
    let points: Vec<(f64, f64)> = (0..nt)
        .flat_map(|i| {
            let theta = PI * i as f64 / (nt - 1) as f64;
            (0..np).map(move |j| (theta, 2.0 * PI * j as f64 / np as f64))
        })
        .collect();
    let values = points
        .par_iter()
        .map(|&(t, f)| post_measurement_pt_min(rho, &MeasurementDirection::new(party, t, f)))
        .collect::<Result<Vec<_>>>()?;
    let (best_idx, &grid_minimum) = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty grid");
    let (t0, f0) = points[best_idx];
    let (dt, df) = (PI / (nt - 1) as f64, 2.0 * PI / np as f64);

    let objective = Objective {
        rho,
        party,
        calls: AtomicUsize::new(0),
    };
    let simplex = vec![vec![t0, f0], vec![t0 + dt, f0], vec![t0, f0 + df]];
    let solver = NelderMead::new(simplex)
        .with_sd_tolerance(1e-14)
        .map_err(|e| Error::Solver(e.to_string()))?;
    // In two dimensions an iteration costs at most four evaluations (reflect,
    // contract, two shrink points), plus three for the initial simplex.
    let iters = ((MAX_REFINE_EVALUATIONS - 3) / 4) as u64;
    let res = Executor::new(objective, solver)
        .configure(|s| s.max_iters(iters))
        .run()
        .map_err(|e| Error::Solver(e.to_string()))?;
    let refine_evaluations = res
        .problem
        .problem
        .as_ref()
        .map_or(0, |o| o.calls.load(Ordering::Relaxed));
    let state = res.state();
    let (mut minimum, mut worst) = (grid_minimum, MeasurementDirection::new(party, t0, f0));
    if let Some(p) = state.get_best_param() {
        if state.get_best_cost() < minimum {
            minimum = state.get_best_cost();
            worst = MeasurementDirection::new(party, p[0], p[1]);
        }
    }
    Ok(SweepResult {
        party,
        grid: (nt, np),
        grid_minimum,
        minimum,
        worst,
        refine_evaluations,
    })
}
