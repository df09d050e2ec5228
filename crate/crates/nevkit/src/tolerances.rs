//! Fixed numerical tolerances.
//!
//! Every threshold used by the library lives here so that the quadrature,
//! divisor and check layers stay consistent with each other.

/// Relative tolerance for deciding that an evaluation point coincides with a
/// pole. Below quadrature noise, above double-precision rounding.
pub const POLE_COINCIDENCE: f64 = 1e-12;

/// Residual required of the polynomial root finder, |p(root)| / scale.
pub const ROOT_RESIDUAL: f64 = 1e-10;

/// Two divisor locations closer than this (relative) are merged.
pub const DIVISOR_MERGE: f64 = 1e-9;

/// Absolute and relative convergence target of the adaptive circle quadrature.
pub const QUAD_TOL: f64 = 1e-9;

/// Node cap of the adaptive quadrature (2^22).
pub const QUAD_MAX_NODES: usize = 1 << 22;

/// Starting node count of the adaptive quadrature (2^10).
pub const QUAD_START_NODES: usize = 1 << 10;

/// A divisor within this relative distance of the integration circle
/// triggers local subdivision around its angle.
pub const NEAR_CIRCLE: f64 = 1e-3;

/// Smallest angular cell width produced by the graded subdivision.
pub const MIN_CELL_WIDTH: f64 = 1e-8;

/// Half-width of the graded window placed around each singular angle.
/// Kept independent of the uniform grid so the regular cells never touch
/// the steep part of a log singularity.
pub const GRADED_WINDOW: f64 = 1e-2;

/// exp overflow saturation threshold on |Re(exponent)|.
pub const EXP_SATURATION: f64 = 700.0;

/// Slack applied to the bound comparison: pass iff lhs <= rhs * (1 + this).
pub const BOUND_SLACK: f64 = 1e-9;

/// Residual allowed when pre-checking that f solves a difference equation.
pub const EQUATION_RESIDUAL: f64 = 1e-6;
