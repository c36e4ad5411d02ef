//! Central numeric tolerances.
//!
//! Values that the rest of the crate treats as policy live here so that a
//! tolerance is never an ad-hoc literal buried in a routine. Tolerances that
//! make sense to tune at run time (integration budgets, landing radii) are
//! fields of config structs and only their defaults come from here.

/// Relative residual demanded of a polished polynomial root.
pub const ROOT_RESIDUAL: f64 = 1e-12;

/// Two roots closer than this (times the parameter scale) are treated as a
/// parabolic (double) point.
pub const PARABOLIC_GAP: f64 = 1e-7;

/// Relative tolerance for the coordinate round trip on the parameter sphere.
pub const COORD_ROUND_TRIP: f64 = 1e-12;

/// Horizontal-alignment tolerance for homoclinic vertex pairs, relative to
/// the periodgon diameter.
pub const HORIZONTAL_ALIGN: f64 = 1e-9;

/// Closure tolerance for the vertex sum of a periodgon, relative to the
/// largest period.
pub const PERIOD_CLOSURE: f64 = 1e-9;

/// Per-step relative error target of the adaptive integrator.
pub const ODE_STEP_REL: f64 = 1e-10;

/// Relative error target of the adaptive path quadrature.
pub const QUAD_REL: f64 = 1e-10;

/// Default distance (times scale) at which a trajectory is declared landed
/// on a singular point.
pub const SING_APPROACH: f64 = 1e-6;

/// Default distance (times scale) for matching two separatrix polylines
/// into a homoclinic loop.
pub const SEP_MATCH: f64 = 1e-5;

/// Default step budget per trajectory.
pub const MAX_STEPS: usize = 1_000_000;

/// Coincidence tolerance (radians) for two homoclinic events sharing the
/// same rotation angle.
pub const EVENT_ALPHA_COINCIDE: f64 = 1e-8;

/// An eigenvalue smaller than this is considered parabolic when evaluating
/// the closed-form derivative formulas.
pub const NEAR_PARABOLIC_LAMBDA: f64 = 1e-8;

/// Exact-hit tolerance for a parameter sitting on a slit ray.
pub const SLIT_HIT: f64 = 1e-9;
