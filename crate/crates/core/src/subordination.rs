//! Subordination solver for free additive convolutions of `n` measures.
//!
//! The unknowns are `Z_1..Z_n` in the upper half-plane with
//! `sum Z_i - z = (n-1) F_1(Z_1)` and `F_1(Z_1) = ... = F_n(Z_n)`. Writing
//! `h_i(w) = F_i(w) - w`, both equations together are the fixed point
//! `Z_i = z + sum_{j != i} h_j(Z_j)` of a holomorphic self-map of the
//! polydisc-like domain `(C+)^n`, because `Im h_j >= 0`.
//!
//! The solver runs safeguarded Newton steps on `R(Z) = Z - Phi(Z)` and falls
//! back to the damped fixed-point map whenever a Newton step fails to reduce
//! the residual. Points close to the real axis are reached by continuation
//! from `Im z = 1`.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::measure::Measure;
use crate::tolerances;
use crate::transform::{near_branch_cut, principal_sqrt_unchecked, CauchyTransform, HalfPlanePoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Damped fixed-point map only. A step that raises the residual is
    /// retried with half the damping, down to `MIN_DAMPING`.
    FixedPoint,
    /// Newton steps with backtracking, fixed-point steps as fallback.
    Newton,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_iter: usize,
    /// Initial damping of the fixed-point step, in `(0, 1]`.
    pub damping: f64,
    pub scheme: Scheme,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: tolerances::DEFAULT_SOLVER_TOL,
            max_iter: tolerances::DEFAULT_MAX_ITER,
            damping: 1.0,
            scheme: Scheme::Newton,
        }
    }
}

impl SolverConfig {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidInput(format!("tolerance must be positive, got {}", self.tol)));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::InvalidInput(format!("damping must lie in (0, 1], got {}", self.damping)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubordinationSolution {
    pub z: HalfPlanePoint,
    /// `Z_1(z), ..., Z_n(z)` in input order.
    pub subordination: Vec<Complex64>,
    /// `F_1(Z_1(z))`, the F-transform of the convolution at `z`.
    pub f_common: Complex64,
    /// `G(z) = 1 / f_common`.
    pub g_sum: Complex64,
    /// `G'(z)` by implicit differentiation of the system.
    pub g_sum_derivative: Complex64,
    /// `|sum Z_i - z - (n-1) F_1(Z_1)|`.
    pub residual_sum: f64,
    /// `max_i |F_i(Z_i) - F_1(Z_1)|`.
    pub residual_match: f64,
    pub iterations: usize,
    /// `residual_match` after each iteration of the final solve.
    pub residual_history: Vec<f64>,
}

impl SubordinationSolution {
    pub fn len(&self) -> usize {
        self.subordination.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subordination.is_empty()
    }
}

/// Transform values of all components at the current iterate.
struct State {
    z_vals: Vec<Complex64>,
    g: Vec<Complex64>,
    f: Vec<Complex64>,
    /// `R_i = Z_i - z - sum_{j != i} h_j(Z_j)`
    r: Vec<Complex64>,
    residual_sum: f64,
    residual_match: f64,
    merit: f64,
}

impl State {
    fn evaluate<C: CauchyTransform>(components: &[C], z: Complex64, z_vals: Vec<Complex64>) -> Result<Self> {
        let n = components.len();
        let mut g = Vec::with_capacity(n);
        for (c, &w) in components.iter().zip(&z_vals) {
            g.push(c.cauchy(w)?);
        }
        let f: Vec<Complex64> = g.iter().map(|g| 1.0 / g).collect();
        let h_sum: Complex64 = f.iter().zip(&z_vals).map(|(f, w)| f - w).sum();
        let r: Vec<Complex64> = z_vals
            .iter()
            .zip(&f)
            .map(|(&w, &fv)| w - z - (h_sum - (fv - w)))
            .collect();
        let z_sum: Complex64 = z_vals.iter().sum();
        let residual_sum = (z_sum - z - (n as f64 - 1.0) * f[0]).norm();
        let residual_match = f.iter().map(|fi| (fi - f[0]).norm()).fold(0.0, f64::max);
        let merit = r.iter().map(|r| r.norm()).fold(0.0, f64::max);
        Ok(Self { z_vals, g, f, r, residual_sum, residual_match, merit })
    }

    fn converged(&self, tol: f64) -> bool {
        self.residual_sum <= tol && self.residual_match <= tol
    }

    /// `h_i'(Z_i) = -G_i'/G_i^2 - 1`.
    fn h_derivatives<C: CauchyTransform>(&self, components: &[C]) -> Result<Vec<Complex64>> {
        components
            .iter()
            .zip(self.z_vals.iter().zip(&self.g))
            .map(|(c, (&w, &g))| Ok(-c.cauchy_derivative(w)? / (g * g) - 1.0))
            .collect()
    }

    fn finite(&self) -> bool {
        self.z_vals.iter().chain(&self.f).all(|v| v.re.is_finite() && v.im.is_finite())
    }
}

/// Solve `(I + diag(d) - 1 d^T) x = b` by Sherman-Morrison.
fn solve_jacobian(d: &[Complex64], b: &[Complex64]) -> Option<Vec<Complex64>> {
    let a: Vec<Complex64> = d.iter().map(|d| 1.0 + d).collect();
    if a.iter().any(|a| a.norm() < 1e-300) {
        return None;
    }
    let a_inv_b: Vec<Complex64> = b.iter().zip(&a).map(|(b, a)| b / a).collect();
    let d_a_inv_b: Complex64 = d.iter().zip(&a_inv_b).map(|(d, x)| d * x).sum();
    let d_a_inv_1: Complex64 = d.iter().zip(&a).map(|(d, a)| d / a).sum();
    let denom = 1.0 - d_a_inv_1;
    if denom.norm() < 1e-300 {
        return None;
    }
    let c = d_a_inv_b / denom;
    let x: Vec<Complex64> = a_inv_b.iter().zip(&a).map(|(x, a)| x + c / a).collect();
    x.iter().all(|v| v.re.is_finite() && v.im.is_finite()).then_some(x)
}

/// Below this height the solver approaches `z` by continuation.
const CONTINUATION_HEIGHT: f64 = 1.0;
const CONTINUATION_RATIO: f64 = 0.25;

/// Solve the subordination system at `z`.
pub fn solve<C: CauchyTransform>(
    components: &[C],
    z: HalfPlanePoint,
    cfg: &SolverConfig,
) -> Result<SubordinationSolution> {
    cfg.validate()?;
    if components.is_empty() {
        return Err(Error::InvalidInput("need at least one component".into()));
    }
    if components.len() == 1 || z.im() >= CONTINUATION_HEIGHT {
        return solve_from(components, z, None, cfg);
    }
    let mut height = CONTINUATION_HEIGHT;
    let mut start: Option<Vec<Complex64>> = None;
    let mut spent = 0;
    while height > z.im() {
        let p = HalfPlanePoint::new(z.re(), height)?;
        let sol = solve_from(components, p, start.as_deref(), cfg)?;
        spent += sol.iterations;
        start = Some(sol.subordination);
        height *= CONTINUATION_RATIO;
    }
    let mut sol = solve_from(components, z, start.as_deref(), cfg)?;
    sol.iterations += spent;
    Ok(sol)
}

/// Solve at `z` starting from `start` (default `Z_i = z`), without continuation.
pub fn solve_from<C: CauchyTransform>(
    components: &[C],
    z: HalfPlanePoint,
    start: Option<&[Complex64]>,
    cfg: &SolverConfig,
) -> Result<SubordinationSolution> {
    cfg.validate()?;
    let n = components.len();
    if n == 0 {
        return Err(Error::InvalidInput("need at least one component".into()));
    }
    let zc = z.to_complex();
    if n == 1 {
        let g = components[0].cauchy(zc)?;
        return Ok(SubordinationSolution {
            z,
            subordination: vec![zc],
            f_common: 1.0 / g,
            g_sum: g,
            g_sum_derivative: components[0].cauchy_derivative(zc)?,
            residual_sum: 0.0,
            residual_match: 0.0,
            iterations: 0,
            residual_history: Vec::new(),
        });
    }
    let initial = match start {
        Some(s) if s.len() == n => s.iter().map(|w| Complex64::new(w.re, w.im.max(z.im()))).collect(),
        Some(s) => {
            return Err(Error::InvalidInput(format!(
                "start vector has {} entries for {n} components",
                s.len()
            )))
        }
        None => vec![zc; n],
    };
    let mut state = State::evaluate(components, zc, initial)?;
    let mut damping = cfg.damping;
    let mut history = Vec::new();
    let mut iterations = 0;

    while !state.converged(cfg.tol) {
        if iterations >= cfg.max_iter || !state.finite() {
            return Err(Error::NonConvergence {
                z: zc,
                iterations,
                residual_sum: state.residual_sum,
                residual_match: state.residual_match,
            });
        }
        iterations += 1;
        let mut next = None;
        if cfg.scheme == Scheme::Newton {
            next = newton_step(components, zc, &state)?;
        }
        let next = match next {
            Some(s) => s,
            None => loop {
                let z_vals = state
                    .z_vals
                    .iter()
                    .zip(&state.r)
                    .map(|(w, r)| w - damping * r)
                    .collect();
                let s = State::evaluate(components, zc, z_vals)?;
                let worse = s.merit > state.merit || s.residual_match > state.residual_match;
                if !worse || damping <= tolerances::MIN_DAMPING {
                    break s;
                }
                damping = (0.5 * damping).max(tolerances::MIN_DAMPING);
            },
        };
        state = next;
        history.push(state.residual_match);
    }

    let d = state.h_derivatives(components)?;
    let ones = vec![Complex64::new(1.0, 0.0); n];
    // dZ/dz = J^{-1} 1, then F'(z) = F_1'(Z_1) dZ_1/dz
    let dz = solve_jacobian(&d, &ones).unwrap_or(ones);
    let f1_prime = d[0] + 1.0;
    let f_common = state.f[0];
    let f_prime = f1_prime * dz[0];
    Ok(SubordinationSolution {
        z,
        subordination: state.z_vals,
        f_common,
        g_sum: 1.0 / f_common,
        g_sum_derivative: -f_prime / (f_common * f_common),
        residual_sum: state.residual_sum,
        residual_match: state.residual_match,
        iterations,
        residual_history: history,
    })
}

fn newton_step<C: CauchyTransform>(components: &[C], z: Complex64, state: &State) -> Result<Option<State>> {
    let d = state.h_derivatives(components)?;
    let neg_r: Vec<Complex64> = state.r.iter().map(|r| -r).collect();
    let Some(step) = solve_jacobian(&d, &neg_r) else {
        return Ok(None);
    };
    let mut t = 1.0;
    for _ in 0..6 {
        let z_vals: Vec<Complex64> = state.z_vals.iter().zip(&step).map(|(w, s)| w + t * s).collect();
        if z_vals.iter().all(|w| w.im > 0.0 && w.re.is_finite() && w.im.is_finite()) {
            let cand = State::evaluate(components, z, z_vals)?;
            if cand.finite() && cand.merit < state.merit {
                return Ok(Some(cand));
            }
        }
        t *= 0.5;
    }
    Ok(None)
}

/// `G` of the free convolution at `z`.
pub fn g_of_sum<C: CauchyTransform>(components: &[C], z: HalfPlanePoint, tol: f64) -> Result<Complex64> {
    Ok(solve(components, z, &SolverConfig::with_tol(tol))?.g_sum)
}

/// `r_{n,i} = G(z) Z_i(z) - 1`.
pub fn r_coefficient(sol: &SubordinationSolution, i: usize) -> Result<Complex64> {
    let zi = sol
        .subordination
        .get(i)
        .ok_or(Error::IndexOutOfRange { index: i, len: sol.len() })?;
    Ok(sol.g_sum * zi - 1.0)
}

/// The free convolution of two transforms, evaluated by re-solving a binary
/// system at every point.
pub struct BinaryConvolution<'a> {
    parts: [Box<dyn CauchyTransform + 'a>; 2],
    cfg: SolverConfig,
}

impl<'a> BinaryConvolution<'a> {
    pub fn new(
        left: Box<dyn CauchyTransform + 'a>,
        right: Box<dyn CauchyTransform + 'a>,
        cfg: SolverConfig,
    ) -> Self {
        Self { parts: [left, right], cfg }
    }
}

impl CauchyTransform for BinaryConvolution<'_> {
    fn cauchy(&self, z: Complex64) -> Result<Complex64> {
        Ok(solve(&self.parts, HalfPlanePoint::from_complex(z)?, &self.cfg)?.g_sum)
    }

    fn cauchy_derivative(&self, z: Complex64) -> Result<Complex64> {
        Ok(solve(&self.parts, HalfPlanePoint::from_complex(z)?, &self.cfg)?.g_sum_derivative)
    }
}

/// `G` of the convolution by folding binary convolutions left to right.
///
/// Inner solves run at `tol / 100` so the outer answer is accurate to `tol`.
pub fn g_of_sum_pairwise<C: CauchyTransform>(
    components: &[C],
    z: HalfPlanePoint,
    cfg: &SolverConfig,
) -> Result<Complex64> {
    let Some((first, rest)) = components.split_first() else {
        return Err(Error::InvalidInput("need at least one component".into()));
    };
    let inner = SolverConfig { tol: (cfg.tol * 1e-2).max(1e-15), ..*cfg };
    let mut acc: Box<dyn CauchyTransform + '_> = Box::new(first);
    for c in rest {
        acc = Box::new(BinaryConvolution::new(acc, Box::new(c), inner));
    }
    acc.cauchy(z.to_complex())
}

/// Evaluates `G` of a fixed free sum; usable wherever a transform is expected.
#[derive(Debug, Clone)]
pub struct FreeSum {
    components: Vec<Measure>,
    cfg: SolverConfig,
}

impl FreeSum {
    pub fn new(components: Vec<Measure>, cfg: SolverConfig) -> Result<Self> {
        cfg.validate()?;
        if components.is_empty() {
            return Err(Error::InvalidInput("need at least one component".into()));
        }
        Ok(Self { components, cfg })
    }

    pub fn components(&self) -> &[Measure] {
        &self.components
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    pub fn solve(&self, z: HalfPlanePoint) -> Result<SubordinationSolution> {
        solve(&self.components, z, &self.cfg)
    }

    pub fn g(&self, z: Complex64) -> Result<Complex64> {
        if self.components.len() == 1 {
            return Ok(self.components[0].cauchy_at(z));
        }
        Ok(self.solve(HalfPlanePoint::from_complex(z)?)?.g_sum)
    }
}

impl CauchyTransform for FreeSum {
    fn cauchy(&self, z: Complex64) -> Result<Complex64> {
        self.g(z)
    }

    fn cauchy_derivative(&self, z: Complex64) -> Result<Complex64> {
        Ok(self.solve(HalfPlanePoint::from_complex(z)?)?.g_sum_derivative)
    }

    fn cauchy_on_vertical(&self, x: f64, heights: &[f64]) -> Result<Vec<Complex64>> {
        if self.components.len() == 1 {
            return Ok(heights.iter().map(|&y| self.components[0].cauchy_at(Complex64::new(x, y))).collect());
        }
        let mut out = Vec::with_capacity(heights.len());
        let mut start: Option<Vec<Complex64>> = None;
        for &y in heights {
            let z = HalfPlanePoint::new(x, y)?;
            let sol = match &start {
                None => solve(&self.components, z, &self.cfg)?,
                Some(s) => solve_from(&self.components, z, Some(s), &self.cfg)?,
            };
            out.push(sol.g_sum);
            start = Some(sol.subordination);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GRow {
    pub z: HalfPlanePoint,
    pub g: Complex64,
    pub iterations: usize,
}

/// Sampled `G` of the convolution on a grid, in grid order.
pub fn convolve_to_measure<C: CauchyTransform>(
    components: &[C],
    grid: &[HalfPlanePoint],
    cfg: &SolverConfig,
) -> Result<Vec<GRow>> {
    if grid.is_empty() {
        return Err(Error::InvalidInput("empty evaluation grid".into()));
    }
    grid.par_iter()
        .map(|&z| {
            let sol = solve(components, z, cfg)?;
            Ok(GRow { z, g: sol.g_sum, iterations: sol.iterations })
        })
        .collect()
}

/// Quantities from the quadratic functional equation for the subordination
/// function of the minimum-variance component.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    /// Index of the component playing the role of `Z_1` (argmin of `rho_i^2`, first on ties).
    pub pivot: usize,
    pub rho2: Vec<f64>,
    /// `r_{n,i}` in input order.
    pub r: Vec<Complex64>,
    pub m1: Complex64,
    pub m2: Complex64,
    pub m3: f64,
    pub q: Complex64,
    pub omega1: Complex64,
    pub omega2: Complex64,
    /// `Q(z, Z_1) = Z_1^2 - z Z_1 + 1 - q`.
    pub q_at_z1: Complex64,
    /// `|Z_1 - omega_2|`.
    pub root_gap: f64,
    /// `z^2 - 4 + 4q` is within `1e-14` of `[0, inf)`.
    pub near_cut: bool,
}

pub fn diagnostics(normalized: &[Measure], sol: &SubordinationSolution) -> Result<Diagnostics> {
    let n = normalized.len();
    if n != sol.len() {
        return Err(Error::InvalidInput(format!(
            "{n} measures but {} subordination values",
            sol.len()
        )));
    }
    let rho2: Vec<f64> = normalized.iter().map(|m| m.moments().m2).collect();
    let total: f64 = rho2.iter().sum();
    if (total - 1.0).abs() > tolerances::NORMALIZATION {
        return Err(Error::NotNormalized(total));
    }
    let pivot = rho2
        .iter()
        .enumerate()
        .fold(0, |best, (i, &v)| if v < rho2[best] { i } else { best });
    let z = sol.z.to_complex();
    let zp = sol.subordination[pivot];
    let mut s1 = Complex64::new(0.0, 0.0);
    let mut s2 = Complex64::new(0.0, 0.0);
    for (i, (m, &zi)) in normalized.iter().zip(&sol.subordination).enumerate() {
        if i == pivot {
            continue;
        }
        let fi = 1.0 / m.cauchy_at(zi);
        s1 += fi - zi + rho2[i] / zi;
        s2 += rho2[i] / zp - rho2[i] / zi;
    }
    let m1 = zp * s1;
    let m2 = zp * s2;
    let m3 = rho2[pivot];
    let q = m1 + m2 + m3;
    let disc = z * z - 4.0 + 4.0 * q;
    let root = principal_sqrt_unchecked(disc);
    let omega1 = 0.5 * (z - root);
    let omega2 = 0.5 * (z + root);
    let r = sol.subordination.iter().map(|zi| sol.g_sum * zi - 1.0).collect();
    Ok(Diagnostics {
        pivot,
        rho2,
        r,
        m1,
        m2,
        m3,
        q,
        omega1,
        omega2,
        q_at_z1: zp * zp - z * zp + 1.0 - q,
        root_gap: (zp - omega2).norm(),
        near_cut: near_branch_cut(disc),
    })
}
