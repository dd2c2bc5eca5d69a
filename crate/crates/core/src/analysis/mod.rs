//! Properties reported for a given state: white-noise tolerance, marginal
//! PPT audits, uniqueness given the marginals, and the localizable sweep.

mod audit;
mod sweep;
mod tolerance;
mod uniqueness;

pub use audit::{marginal_audit, AuditReport, PairAudit, TripleAudit};
pub use sweep::{
    localizable_sweep, post_measurement_pt_min, SweepResult, DEFAULT_GRID, MAX_REFINE_EVALUATIONS,
};
pub use tolerance::{
    detection_curve, detection_value, noise_tolerance, ToleranceMode, ToleranceResult,
    TOLERANCE_BRACKET,
};
pub use uniqueness::{
    compatibility_range, range_along, DirectionRange, UniquenessReport, Verdict,
    NON_UNIQUE_THRESHOLD, UNIQUE_THRESHOLD,
};
