use super::{Backend, BackendResult, LoweredProgram, SolveStatus, Tolerances};

/// Exhaustive grid search with zooming for lowered programs with at most
/// three free coordinates and blocks of size at most 2. PSD membership uses
/// the closed form `a ≥ 0, c ≥ 0, ac ≥ |b|²`. Meant for cross-checking the
/// default backend on tiny problems.
#[derive(Clone, Copy, Debug)]
pub struct ToyBackend {
    /// Half-width of the initial search box around the origin.
    pub radius: f64,
}

impl Default for ToyBackend {
    fn default() -> Self {
        Self { radius: 8.0 }
    }
}

fn feasible(p: &LoweredProgram, y: &[f64]) -> bool {
    (0..p.blocks.len()).all(|k| {
        let m = p.block_value(k, y);
        match m.nrows() {
            1 => m[(0, 0)].re >= 0.0,
            _ => {
                let (a, c, b) = (m[(0, 0)].re, m[(1, 1)].re, m[(0, 1)]);
                a >= 0.0 && c >= 0.0 && a * c - b.norm_sqr() >= 0.0
            }
        }
    })
}

impl Backend for ToyBackend {
    fn name(&self) -> &'static str {
        "toy"
    }

    fn solve_lowered(&self, p: &LoweredProgram, _tol: &Tolerances) -> BackendResult {
        let k = p.num_vars();
        let result = |status, y: Vec<f64>, iterations, message: &str| BackendResult {
            status,
            y,
            duals: None,
            iterations,
            message: message.to_string(),
        };
        if k > 3 || p.blocks.iter().any(|b| b.dim > 2) {
            return result(
                SolveStatus::NumericalFailure,
                vec![0.0; k],
                0,
                "toy backend handles at most 3 variables and 2x2 blocks",
            );
        }
        let points = [0, 201, 101, 31][k];
        let mut center = vec![0.0; k];
        let mut half = self.radius;
        let mut best: Option<(f64, Vec<f64>)> = None;
        let mut level = 0;
        while half > 1e-11 * self.radius {
            let spacing = 2.0 * half / (points - 1) as f64;
            let mut idx = vec![0usize; k];
            let mut level_best: Option<(f64, Vec<f64>)> = None;
            loop {
                let y: Vec<f64> = (0..k)
                    .map(|i| center[i] - half + spacing * idx[i] as f64)
                    .collect();
                if feasible(p, &y) {
                    let v = p.objective_value(&y);
                    if level_best.as_ref().is_none_or(|(bv, _)| v < *bv) {
                        level_best = Some((v, y));
                    }
                }
                let mut d = 0;
                while d < k {
                    idx[d] += 1;
                    if idx[d] < points {
                        break;
                    }
                    idx[d] = 0;
                    d += 1;
                }
                if d == k {
                    break;
                }
            }
            match level_best {
                Some((v, y)) => {
                    if level == 0 && y.iter().any(|yi| (yi.abs() - self.radius).abs() < 1e-12) {
                        return result(
                            SolveStatus::NumericalFailure,
                            y,
                            level,
                            "optimum on the search box boundary",
                        );
                    }
                    if best.as_ref().is_none_or(|(bv, _)| v <= *bv) {
                        best = Some((v, y.clone()));
                    }
                    center = y;
                }
                None if level == 0 => {
                    return result(
                        SolveStatus::Infeasible,
                        vec![0.0; k],
                        level,
                        "no feasible grid point",
                    )
                }
                None => {}
            }
            half *= 0.5;
            level += 1;
        }
        let (_, y) = best.expect("level 0 found a feasible point");
        result(SolveStatus::Optimal, y, level, "grid search converged")
    }
}
