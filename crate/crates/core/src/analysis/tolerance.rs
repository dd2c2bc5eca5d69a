use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::{mix_with_white_noise, DensityOperator};
use crate::witness::{min_witness_value, min_witness_value_unrestricted, MarginalPattern};

/// Width of the final bracket around the tolerance.
pub const TOLERANCE_BRACKET: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ToleranceMode {
    MarginalRestricted,
    Unrestricted,
}

#[derive(Clone, Debug, Serialize)]
pub struct ToleranceResult {
    pub p_star: f64,
    /// `[lo, hi]` with a negative value at `lo` and a non-negative one at `hi`.
    pub bracket: [f64; 2],
    pub bracket_width: f64,
    pub mode: ToleranceMode,
    pub pattern: Option<String>,
    pub value_at_zero: f64,
    pub value_at_lo: f64,
    pub value_at_hi: Option<f64>,
    pub evaluations: usize,
    pub notes: Vec<String>,
}

/// Witness value of `(1 − p)ϱ + p·1/D`.
pub fn detection_value(
    rho: &DensityOperator,
    pattern: &MarginalPattern,
    mode: ToleranceMode,
    p: f64,
) -> Result<f64> {
    let mixed = mix_with_white_noise(rho, p)?;
    let out = match mode {
        ToleranceMode::MarginalRestricted => min_witness_value(&mixed, pattern)?,
        ToleranceMode::Unrestricted => min_witness_value_unrestricted(&mixed)?,
    };
    Ok(out.value)
}

/// `(p, V(p))` at the given noise levels.
pub fn detection_curve(
    rho: &DensityOperator,
    pattern: &MarginalPattern,
    mode: ToleranceMode,
    ps: &[f64],
) -> Result<Vec<(f64, f64)>> {
    ps.iter()
        .map(|&p| Ok((p, detection_value(rho, pattern, mode, p)?)))
        .collect()
}

/// Largest white-noise level keeping the witness value negative, bracketed
/// to [`TOLERANCE_BRACKET`].
///
/// Every witness has unit trace, so `V(p) = (1 − p)V(0) + p/D` and the root
/// `−V(0)D / (1 − V(0)D)` is used as the first guess. Two solves straddling
/// it confirm the bracket; plain bisection takes over if they do not.
pub fn noise_tolerance(
    rho: &DensityOperator,
    pattern: &MarginalPattern,
    mode: ToleranceMode,
) -> Result<ToleranceResult> {
    let d = rho.dim() as f64;
    let label = (mode == ToleranceMode::MarginalRestricted).then(|| pattern.label());
    let mut evaluations = 0;
    let mut eval = |p: f64| -> Result<f64> {
        evaluations += 1;
        detection_value(rho, pattern, mode, p)
    };
    let v0 = eval(0.0)?;
    if v0 >= 0.0 {
        return Ok(ToleranceResult {
            p_star: 0.0,
            bracket: [0.0, 0.0],
            bracket_width: 0.0,
            mode,
            pattern: label,
            value_at_zero: v0,
            value_at_lo: v0,
            value_at_hi: Some(v0),
            evaluations,
            notes: vec!["not detected".into()],
        });
    }
    let mut lo = (0.0, v0);
    let mut hi: (f64, Option<f64>) = (1.0, None);
    let guess = -v0 * d / (1.0 - v0 * d);
    let mut notes = Vec::new();
    let half = 0.45 * TOLERANCE_BRACKET;
    let probe = |p: f64, lo: &mut (f64, f64), hi: &mut (f64, Option<f64>), v: f64| {
        if v < 0.0 {
            *lo = (p, v);
        } else {
            *hi = (p, Some(v));
        }
    };
    for p in [(guess - half).max(0.0), (guess + half).min(1.0)] {
        if p > lo.0 && p < hi.0 {
            let v = eval(p).map_err(|e| partial(e, lo.0, hi.0))?;
            probe(p, &mut lo, &mut hi, v);
        }
    }
    if hi.0 - lo.0 > TOLERANCE_BRACKET {
        notes.push("closed-form guess not confirmed; bisecting".into());
    }
    while hi.0 - lo.0 > TOLERANCE_BRACKET {
        let mid = 0.5 * (lo.0 + hi.0);
        let v = eval(mid).map_err(|e| partial(e, lo.0, hi.0))?;
        probe(mid, &mut lo, &mut hi, v);
    }
    Ok(ToleranceResult {
        p_star: 0.5 * (lo.0 + hi.0),
        bracket: [lo.0, hi.0],
        bracket_width: hi.0 - lo.0,
        mode,
        pattern: label,
        value_at_zero: v0,
        value_at_lo: lo.1,
        value_at_hi: hi.1,
        evaluations,
        notes,
    })
}

fn partial(e: Error, lo: f64, hi: f64) -> Error {
    Error::Solver(format!("{e} (bracket so far [{lo}, {hi}])"))
}
