//! Cauchy and F-transforms on the upper half-plane.
//!
//! All square roots use the branch with cut on `[0, inf)` and `Im sqrt >= 0`.
//! With that branch `(z - sqrt(z^2 - 4)) / 2` is the semicircle transform on
//! the whole upper half-plane, so no case split is needed at the call sites.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::measure::{DensityShape, Measure};
use crate::tolerances;

/// A point `z` with `Im z >= 1e-8`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfPlanePoint {
    re: f64,
    im: f64,
}

impl HalfPlanePoint {
    pub fn new(re: f64, im: f64) -> Result<Self> {
        if !re.is_finite() || !im.is_finite() || im < tolerances::MIN_IM {
            return Err(Error::NotInUpperHalfPlane { re, im });
        }
        Ok(Self { re, im })
    }

    pub fn from_complex(z: Complex64) -> Result<Self> {
        Self::new(z.re, z.im)
    }

    pub fn re(&self) -> f64 {
        self.re
    }

    pub fn im(&self) -> f64 {
        self.im
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

impl From<HalfPlanePoint> for Complex64 {
    fn from(p: HalfPlanePoint) -> Self {
        p.to_complex()
    }
}

/// True when `z` is within `1e-14` of `[0, inf)`.
pub fn near_branch_cut(z: Complex64) -> bool {
    z.im.abs() <= tolerances::BRANCH_CUT && z.re >= -tolerances::BRANCH_CUT
}

/// Square root with branch cut on the non-negative real axis.
///
/// `Re w = sgn(Im z) sqrt((|z| + Re z) / 2)` with `sgn(0) = 1`,
/// `Im w = sqrt((|z| - Re z) / 2) >= 0`.
pub fn principal_sqrt(z: Complex64) -> Result<Complex64> {
    if near_branch_cut(z) {
        return Err(Error::OnBranchCut(z));
    }
    Ok(principal_sqrt_unchecked(z))
}

/// `principal_sqrt` without the cut check; on the cut it returns the real root.
pub(crate) fn principal_sqrt_unchecked(z: Complex64) -> Complex64 {
    let modulus = z.re.hypot(z.im);
    let sign = if z.im < 0.0 { -1.0 } else { 1.0 };
    // Take the larger of the two components from its formula and recover the
    // other from 2 Re w Im w = Im z, which avoids cancellation in |z| -/+ Re z.
    if z.re >= 0.0 {
        let re = (0.5 * (modulus + z.re)).sqrt();
        let im = if re > 0.0 { z.im.abs() / (2.0 * re) } else { 0.0 };
        Complex64::new(sign * re, im)
    } else {
        let im = (0.5 * (modulus - z.re)).sqrt();
        let re = z.im.abs() / (2.0 * im);
        Complex64::new(sign * re, im)
    }
}

/// Something with a Cauchy transform on the upper half-plane.
///
/// Implementations may assume `Im z > 0`.
pub trait CauchyTransform: Sync {
    fn cauchy(&self, z: Complex64) -> Result<Complex64>;

    /// `G'(z)`. The default is a central difference along the real direction.
    fn cauchy_derivative(&self, z: Complex64) -> Result<Complex64> {
        let h = 1e-6 * z.im.max(1e-3) * (1.0 + z.norm()).min(10.0);
        let fp = self.cauchy(z + h)?;
        let fm = self.cauchy(z - h)?;
        Ok((fp - fm) / (2.0 * h))
    }

    fn f_transform(&self, z: Complex64) -> Result<Complex64> {
        Ok(1.0 / self.cauchy(z)?)
    }

    /// `G(x + i y)` for each `y` in `heights` (decreasing). Implementations
    /// backed by an iterative solver may chain warm starts down the line.
    fn cauchy_on_vertical(&self, x: f64, heights: &[f64]) -> Result<Vec<Complex64>> {
        heights.iter().map(|&y| self.cauchy(Complex64::new(x, y))).collect()
    }
}

impl<T: CauchyTransform + ?Sized> CauchyTransform for &T {
    fn cauchy(&self, z: Complex64) -> Result<Complex64> {
        (**self).cauchy(z)
    }
    fn cauchy_derivative(&self, z: Complex64) -> Result<Complex64> {
        (**self).cauchy_derivative(z)
    }
    fn cauchy_on_vertical(&self, x: f64, heights: &[f64]) -> Result<Vec<Complex64>> {
        (**self).cauchy_on_vertical(x, heights)
    }
}

impl<T: CauchyTransform + ?Sized> CauchyTransform for Box<T> {
    fn cauchy(&self, z: Complex64) -> Result<Complex64> {
        (**self).cauchy(z)
    }
    fn cauchy_derivative(&self, z: Complex64) -> Result<Complex64> {
        (**self).cauchy_derivative(z)
    }
    fn cauchy_on_vertical(&self, x: f64, heights: &[f64]) -> Result<Vec<Complex64>> {
        (**self).cauchy_on_vertical(x, heights)
    }
}

impl Measure {
    /// `G(z)` for any `z` in the open upper half-plane.
    pub fn cauchy_at(&self, z: Complex64) -> Complex64 {
        let mut g: Complex64 = self
            .atoms()
            .iter()
            .map(|a| a.weight / (z - a.position))
            .sum();
        if let Some(d) = self.density() {
            g += match d.shape() {
                DensityShape::Semicircle { variance } => d.mass() * scaled_semicircle_cauchy(z, variance),
                DensityShape::Tabulated => d.trapezoid_nodes().map(|(x, w)| w / (z - x)).sum(),
            };
        }
        g
    }

    pub fn cauchy_derivative_at(&self, z: Complex64) -> Complex64 {
        let mut g: Complex64 = self
            .atoms()
            .iter()
            .map(|a| {
                let d = z - a.position;
                -a.weight / (d * d)
            })
            .sum();
        if let Some(d) = self.density() {
            g += match d.shape() {
                DensityShape::Semicircle { variance } => {
                    let root = principal_sqrt_unchecked(z * z - 4.0 * variance);
                    d.mass() * (1.0 - z / root) / (2.0 * variance)
                }
                DensityShape::Tabulated => d
                    .trapezoid_nodes()
                    .map(|(x, w)| {
                        let t = z - x;
                        -w / (t * t)
                    })
                    .sum(),
            };
        }
        g
    }
}

impl CauchyTransform for Measure {
    fn cauchy(&self, z: Complex64) -> Result<Complex64> {
        Ok(self.cauchy_at(z))
    }
    fn cauchy_derivative(&self, z: Complex64) -> Result<Complex64> {
        Ok(self.cauchy_derivative_at(z))
    }
}

/// Cauchy transform of a measure at a validated point.
pub fn cauchy(measure: &Measure, z: HalfPlanePoint) -> Complex64 {
    measure.cauchy_at(z.to_complex())
}

/// `F = 1/G`; satisfies `Im F(z) >= Im z`.
pub fn f_transform(measure: &Measure, z: HalfPlanePoint) -> Complex64 {
    1.0 / cauchy(measure, z)
}

/// `(z - sqrt(z^2 - 4 s)) / (2 s)`: the transform of the semicircle law with variance `s`.
pub fn scaled_semicircle_cauchy(z: Complex64, variance: f64) -> Complex64 {
    (z - principal_sqrt_unchecked(z * z - 4.0 * variance)) / (2.0 * variance)
}

/// `G_omega(z) = (z - sqrt(z^2 - 4)) / 2`, standard semicircle.
pub fn semicircle_cauchy(z: HalfPlanePoint) -> Complex64 {
    scaled_semicircle_cauchy(z.to_complex(), 1.0)
}

/// `F_omega(z) = (z + sqrt(z^2 - 4)) / 2`.
pub fn semicircle_f(z: HalfPlanePoint) -> Complex64 {
    let z = z.to_complex();
    0.5 * (z + principal_sqrt_unchecked(z * z - 4.0))
}

/// `G_omega` for raw complex arguments in the upper half-plane.
pub(crate) fn g_omega(z: Complex64) -> Complex64 {
    scaled_semicircle_cauchy(z, 1.0)
}

/// Adapts a closure `z -> G(z)` to [`CauchyTransform`].
pub struct FnTransform<F>(pub F);

impl<F> CauchyTransform for FnTransform<F>
where
    F: Fn(Complex64) -> Result<Complex64> + Sync,
{
    fn cauchy(&self, z: Complex64) -> Result<Complex64> {
        (self.0)(z)
    }
}

/// The standard semicircle law as a transform.
#[derive(Debug, Clone, Copy, Default)]
pub struct StandardSemicircle;

impl CauchyTransform for StandardSemicircle {
    fn cauchy(&self, z: Complex64) -> Result<Complex64> {
        Ok(g_omega(z))
    }
}
