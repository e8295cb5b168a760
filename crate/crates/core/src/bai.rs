//! Bai's smoothing inequality: an upper bound on the Kolmogorov distance to
//! the semicircle law from integrals of `|G - G_omega|` off the real axis.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::inversion::{free_sum_distance, linspace, InversionConfig};
use crate::measure::Measure;
use crate::quadrature::adaptive_simpson;
use crate::subordination::{FreeSum, SolverConfig};
use crate::tolerances;
use crate::transform::{g_omega, CauchyTransform};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BaiParams {
    pub a: f64,
    pub gamma: f64,
    pub v: f64,
    pub eps: f64,
}

/// `(1/pi) * int_{|x| < a} dx / (1 + x^2)`.
pub fn gamma_of(a: f64) -> f64 {
    2.0 / PI * a.atan()
}

impl BaiParams {
    pub fn new(a: f64, v: f64, eps: f64) -> Result<Self> {
        let p = Self { a, gamma: gamma_of(a), v, eps };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::ParamsOutOfRange(m));
        if !(self.a > 0.0) || !self.a.is_finite() {
            return bad(format!("a = {} must be positive", self.a));
        }
        if !(self.gamma > 0.5) || (self.gamma - gamma_of(self.a)).abs() > 1e-12 {
            return bad(format!("gamma = {} must equal (2/pi) atan(a) > 1/2", self.gamma));
        }
        if !(self.v > 0.0 && self.v < 1.0) {
            return bad(format!("v = {} must lie in (0, 1)", self.v));
        }
        if !(self.eps > 0.0 && self.eps < 2.0) {
            return bad(format!("eps = {} must lie in (0, 2)", self.eps));
        }
        if !(self.eps > 2.0 * self.v * self.a) {
            return bad(format!("eps = {} must exceed 2 v a = {}", self.eps, 2.0 * self.v * self.a));
        }
        Ok(())
    }

    pub fn c_gamma(&self) -> f64 {
        1.0 / ((2.0 * self.gamma - 1.0) * PI)
    }
}

fn check_schedule_args(l4n: f64, k: f64, c5: f64) -> Result<()> {
    if !(l4n > 0.0) || !l4n.is_finite() {
        return Err(Error::ParamsOutOfRange(format!("L4n = {l4n} must be positive")));
    }
    if !(0.0..0.5).contains(&k) {
        return Err(Error::ParamsOutOfRange(format!("k = {k} must lie in [0, 1/2)")));
    }
    if !(c5 >= 1.0) || !c5.is_finite() {
        return Err(Error::ParamsOutOfRange(format!("c5 = {c5} must be >= 1")));
    }
    Ok(())
}

/// `a = 2`, `v = c5 * L4n^(1/4 + k/2)`, `eps = 6 v`.
pub fn default_params(l4n: f64, k: f64, c5: f64) -> Result<BaiParams> {
    check_schedule_args(l4n, k, c5)?;
    if l4n >= 1.0 {
        return Err(Error::ParamsOutOfRange(format!("L4n = {l4n} must lie in (0, 1)")));
    }
    let v = c5 * l4n.powf(0.25 + 0.5 * k);
    BaiParams::new(2.0, v, 6.0 * v)
}

/// As [`default_params`], but with `v` capped at [`tolerances::MAX_CLAMPED_V`]
/// so that any positive `L4n` yields a valid parameter set.
pub fn clamped_params(l4n: f64, k: f64, c5: f64) -> Result<BaiParams> {
    check_schedule_args(l4n, k, c5)?;
    let v = (c5 * l4n.powf(0.25 + 0.5 * k)).min(tolerances::MAX_CLAMPED_V);
    BaiParams::new(2.0, v, 6.0 * v)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LineIntegral {
    /// Quadrature over `[-T, T]` plus `tail`.
    pub value: f64,
    pub tail: f64,
    pub quad_error: f64,
}

fn abs_diff<G: CauchyTransform + ?Sized>(g: &G, z: Complex64) -> Result<f64> {
    Ok((g.cauchy(z)? - g_omega(z)).norm())
}

/// `int_R |G(u + i) - G_omega(u + i)| du`, truncated at `|u| = T` with a
/// `|u|^-3` tail estimate.
pub fn integral_real_line<G: CauchyTransform + ?Sized>(
    g: &G,
    truncation: f64,
    quad_tol: f64,
) -> Result<LineIntegral> {
    if !(truncation >= 10.0) {
        return Err(Error::InvalidInput(format!("truncation {truncation} must be >= 10")));
    }
    if !(quad_tol > 0.0) {
        return Err(Error::InvalidInput("quadrature tolerance must be positive".into()));
    }
    let t = truncation;
    let f = |u: f64| abs_diff(g, Complex64::new(u, 1.0));
    // Split at 0 and +-1 so the bulk is resolved before refinement decisions.
    let cuts = [-t, -1.0, 0.0, 1.0, t];
    let parts = cuts
        .par_windows(2)
        .map(|w| adaptive_simpson(f, w[0], w[1], quad_tol / 4.0))
        .collect::<Result<Vec<_>>>()?;
    let body: f64 = parts.iter().map(|q| q.value).sum();
    let quad_error: f64 = parts.iter().map(|q| q.error).sum();
    let mut c_tail: f64 = 0.0;
    for u in [-2.0 * t, -t, t, 2.0 * t] {
        c_tail = c_tail.max(u.abs().powi(3) * f(u)?);
    }
    let tail = 2.0 * c_tail / (t * t);
    Ok(LineIntegral { value: body + tail, tail, quad_error })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VerticalSup {
    pub value: f64,
    pub at: f64,
}

/// `sup_{x in I_eps} int_v^1 |G(x + i y) - G_omega(x + i y)| dy` over a uniform
/// grid of `x_grid_density` points on `I_eps = [-2 + eps/2, 2 - eps/2]`.
pub fn integral_vertical_sup<G: CauchyTransform + ?Sized>(
    g: &G,
    params: &BaiParams,
    x_grid_density: usize,
    quad_tol: f64,
) -> Result<VerticalSup> {
    params.validate()?;
    if x_grid_density == 0 {
        return Err(Error::InvalidInput("x-grid density must be positive".into()));
    }
    let half = 2.0 - params.eps / 2.0;
    let xs = linspace(-half, half, x_grid_density);
    let vals = xs
        .par_iter()
        .map(|&x| {
            adaptive_simpson(|y| abs_diff(g, Complex64::new(x, y)), params.v, 1.0, quad_tol)
                .map(|q| q.value)
        })
        .collect::<Result<Vec<_>>>()?;
    let (at, value) = xs
        .iter()
        .zip(&vals)
        .fold((xs[0], f64::NEG_INFINITY), |acc, (&x, &v)| if v > acc.1 { (x, v) } else { acc });
    Ok(VerticalSup { value, at })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaiConfig {
    pub solver: SolverConfig,
    pub inversion: InversionConfig,
    pub truncation: f64,
    pub quad_tol: f64,
    pub x_grid_density: usize,
}

impl Default for BaiConfig {
    fn default() -> Self {
        Self {
            solver: SolverConfig::default(),
            inversion: InversionConfig::default(),
            truncation: tolerances::DEFAULT_TRUNCATION,
            quad_tol: tolerances::DEFAULT_QUAD_TOL,
            x_grid_density: tolerances::DEFAULT_X_GRID_DENSITY,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BaiBoundReport {
    pub params: BaiParams,
    pub c_gamma: f64,
    pub term_v: f64,
    pub term_eps: f64,
    pub integral_real: f64,
    pub integral_vertical_sup: f64,
    pub bound: f64,
    pub measured_delta: f64,
    pub measured_delta_uncertainty: f64,
    /// Numerical uncertainty of the bound itself (quadrature errors, scaled).
    pub bound_uncertainty: f64,
    pub dominated: bool,
}

/// Evaluates the bound for the free sum of `measures` and compares it with
/// the inverted Kolmogorov distance to the standard semicircle law.
///
/// The theorem needs `int |mu(-inf, x] - omega(-inf, x]| dx < inf`, which
/// holds for every finite-variance input; it is not checked.
pub fn bai_bound(measures: &[Measure], params: &BaiParams, cfg: &BaiConfig) -> Result<BaiBoundReport> {
    params.validate()?;
    let sum = FreeSum::new(measures.to_vec(), cfg.solver)?;
    let (_, delta) = free_sum_distance(measures, &cfg.solver, &cfg.inversion)?;
    let real = integral_real_line(&sum, cfg.truncation, cfg.quad_tol)?;
    let vertical = integral_vertical_sup(&sum, params, cfg.x_grid_density, cfg.quad_tol)?;
    let c_gamma = params.c_gamma();
    let term_v = 4.0 * params.a * params.a * params.v / PI;
    let term_eps = params.gamma * params.eps.powf(1.5);
    let bound = c_gamma * (term_v + term_eps + real.value + vertical.value);
    let bound_uncertainty = c_gamma * (real.quad_error + cfg.quad_tol);
    let uncertainty = delta.uncertainty + bound_uncertainty;
    Ok(BaiBoundReport {
        params: *params,
        c_gamma,
        term_v,
        term_eps,
        integral_real: real.value,
        integral_vertical_sup: vertical.value,
        bound,
        measured_delta: delta.value,
        measured_delta_uncertainty: delta.uncertainty,
        bound_uncertainty,
        dominated: bound + uncertainty >= delta.value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transform::{principal_sqrt, FnTransform, StandardSemicircle};
    use approx::assert_abs_diff_eq;

    #[test]
    fn default_params_examples() {
        let p = default_params(1e-4, 0.0, 1.0).unwrap();
        assert_abs_diff_eq!(p.v, 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(p.eps, 0.6, epsilon = 1e-14);
        assert_abs_diff_eq!(p.gamma, 0.7048328, epsilon = 1e-7);
        let p = default_params(1e-8, 0.25, 1.0).unwrap();
        assert_abs_diff_eq!(p.v, 1e-3, epsilon = 1e-15);
        assert_abs_diff_eq!(p.eps, 6e-3, epsilon = 1e-15);
        assert!(matches!(default_params(0.9, 0.0, 1.0), Err(Error::ParamsOutOfRange(_))));
        assert!(default_params(1e-4, 0.5, 1.0).is_err());
        assert!(default_params(1e-4, 0.0, 0.5).is_err());
    }

    #[test]
    fn clamped_params_cap_v() {
        let p = clamped_params(0.5, 0.0, 1.0).unwrap();
        assert_eq!(p.v, tolerances::MAX_CLAMPED_V);
        assert_abs_diff_eq!(p.eps, 1.8, epsilon = 1e-15);
        assert_eq!(clamped_params(2.0, 0.0, 1.0).unwrap().v, tolerances::MAX_CLAMPED_V);
        assert!(default_params(2.0, 0.0, 1.0).is_err());
        assert_eq!(clamped_params(1e-4, 0.0, 1.0).unwrap(), default_params(1e-4, 0.0, 1.0).unwrap());
    }

    #[test]
    fn params_validation() {
        assert!(gamma_of(2.0) > 0.7);
        assert!(BaiParams::new(0.5, 0.1, 0.6).is_err());
        assert!(BaiParams::new(2.0, 0.1, 0.3).is_err());
        let p = BaiParams::new(2.0, 0.1, 0.6).unwrap();
        assert_abs_diff_eq!(p.c_gamma(), 1.0 / ((2.0 * p.gamma - 1.0) * PI), epsilon = 1e-12);
    }

    #[test]
    fn self_difference_vanishes() {
        let r = integral_real_line(&StandardSemicircle, 50.0, 1e-8).unwrap();
        assert!(r.value <= 1e-8);
        let p = default_params(1e-4, 0.0, 1.0).unwrap();
        let s = integral_vertical_sup(&StandardSemicircle, &p, 11, 1e-8).unwrap();
        assert!(s.value <= 1e-8);
        assert!(integral_real_line(&StandardSemicircle, 5.0, 1e-8).is_err());
    }

    // High-resolution references (T = 400, tol 1e-12; 6401 x-points, tol 1e-11):
    // 0.9002578 and 0.3005288.
    const ARCSINE_REAL_GOLDEN: f64 = 0.9003;
    const ARCSINE_VERTICAL_GOLDEN: f64 = 0.3005;

    #[test]
    fn arcsine_goldens() {
        let arcsine = FnTransform(|z: Complex64| Ok(1.0 / principal_sqrt(z * z - 4.0)?));
        let r = integral_real_line(&arcsine, tolerances::DEFAULT_TRUNCATION, 1e-8).unwrap();
        assert!((r.value - ARCSINE_REAL_GOLDEN).abs() < 5e-4, "{}", r.value);
        let wide = integral_real_line(&arcsine, 2.0 * tolerances::DEFAULT_TRUNCATION, 1e-8).unwrap();
        assert!((wide.value - r.value).abs() <= 2.0 * r.tail);
        let p = BaiParams::new(2.0, 0.1, 0.6).unwrap();
        let s = integral_vertical_sup(&arcsine, &p, tolerances::DEFAULT_X_GRID_DENSITY, 1e-8).unwrap();
        assert!((s.value - ARCSINE_VERTICAL_GOLDEN).abs() < 5e-4, "{}", s.value);
    }

    #[test]
    fn stable_sum_has_no_real_line_gap() {
        let half = Measure::semicircle(0.5, 257).unwrap();
        let sum = FreeSum::new(vec![half.clone(), half], SolverConfig::with_tol(1e-12)).unwrap();
        let r = integral_real_line(&sum, 50.0, 1e-8).unwrap();
        assert!(r.value <= 10.0 * 1e-8, "{}", r.value);
    }

    #[test]
    fn arcsine_integrals_are_positive() {
        let arcsine = FnTransform(|z: Complex64| Ok(1.0 / principal_sqrt(z * z - 4.0)?));
        let r = integral_real_line(&arcsine, 50.0, 1e-8).unwrap();
        assert!(r.value > 0.0 && r.tail < 1e-2);
        let p = BaiParams::new(2.0, 0.1, 0.6).unwrap();
        let coarse = integral_vertical_sup(&arcsine, &p, 3, 1e-8).unwrap();
        let fine = integral_vertical_sup(&arcsine, &p, 31, 1e-8).unwrap();
        assert!(coarse.value <= fine.value + 1e-9);
    }
}
