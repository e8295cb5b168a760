//! Project-wide numerical tolerances and defaults.
//!
//! Every threshold that appears in a validity check lives here so tests and
//! library code agree on one value.

/// Total mass of a measure must equal one within this bound.
pub const MASS: f64 = 1e-12;

/// Trapezoid integral of tabulated density samples must match the stored mass.
pub const DENSITY_INTEGRAL: f64 = 1e-9;

/// Evaluation points closer than this to the real axis are rejected.
pub const MIN_IM: f64 = 1e-8;

/// Distance from `[0, inf)` below which a square-root argument counts as on the cut.
pub const BRANCH_CUT: f64 = 1e-14;

/// Allowed deviation of the normalized second moments from one.
pub const NORMALIZATION: f64 = 1e-8;

/// Default number of samples for grid densities.
pub const DEFAULT_GRID_POINTS: usize = 4096;

/// Default residual tolerance of the subordination solver.
pub const DEFAULT_SOLVER_TOL: f64 = 1e-10;

/// Default iteration cap of the subordination solver.
pub const DEFAULT_MAX_ITER: usize = 10_000;

/// Smallest damping factor the fixed-point iteration falls back to.
pub const MIN_DAMPING: f64 = 1.0 / 16.0;

/// Default imaginary parts used for Stieltjes inversion (decreasing).
pub const DEFAULT_Y_LEVELS: [f64; 3] = [1e-2, 5e-3, 2.5e-3];

/// Number of base points on the x-grid used for distribution functions.
pub const DEFAULT_X_POINTS: usize = 2401;

/// `y |Im G|` above this at the smallest level marks a probable atom.
pub const ATOM_FLAG: f64 = 0.05;

/// Recovered mass below this is a `MassDeficit`.
pub const MIN_RECOVERED_MASS: f64 = 0.99;

/// Default absolute tolerance for adaptive Simpson quadrature.
pub const DEFAULT_QUAD_TOL: f64 = 1e-8;

/// Default truncation of the real-line integral in the smoothing bound.
pub const DEFAULT_TRUNCATION: f64 = 50.0;

/// Default number of x-points for the vertical supremum.
pub const DEFAULT_X_GRID_DENSITY: usize = 401;

/// Largest `v` used when the rate-driven smoothing parameters fall outside
/// their admissible range (gives `eps = 6 v = 1.8 < 2`).
pub const MAX_CLAMPED_V: f64 = 0.3;
