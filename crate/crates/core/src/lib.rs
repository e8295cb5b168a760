//! Numerical free probability: free additive convolution by subordination,
//! Stieltjes inversion, Kolmogorov distance to the semicircle law, Bai's
//! smoothing bound, and empirical Berry-Esseen rates in the free CLT.

pub mod bai;
pub mod cli;
pub mod error;
pub mod inversion;
pub mod measure;
pub mod quadrature;
pub mod rates;
pub mod subordination;
pub mod tolerances;
pub mod transform;

pub use bai::{
    bai_bound, clamped_params, default_params, integral_real_line, integral_vertical_sup, BaiBoundReport,
    BaiConfig, BaiParams,
};
pub use error::{Error, Result};
pub use inversion::{
    cdf_from_g, default_x_grid, density_at, free_sum_distance, kolmogorov, semicircle_cdf, CdfTable, DensityEstimate,
    DistributionFunction, InversionConfig, KolmogorovDistance, SemicircleLaw,
};
pub use measure::{normalize_family, normalizer, Atom, Measure, MomentSummary};
pub use rates::{
    exponent_schedule, lyapunov3, lyapunov4, lyapunov_support, rate_sweep, recursion_depth, RateEntry,
    RateReport,
};
pub use subordination::{
    diagnostics, g_of_sum, r_coefficient, solve, Diagnostics, FreeSum, Scheme, SolverConfig,
    SubordinationSolution,
};
pub use transform::{
    cauchy, f_transform, principal_sqrt, semicircle_cauchy, semicircle_f, CauchyTransform,
    HalfPlanePoint,
};
