//! Probability measures on the real line: finitely many atoms plus an
//! optional density sampled on a uniform grid over a compact interval.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::tolerances;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub position: f64,
    pub weight: f64,
}

/// How the density part is evaluated by transforms and moments.
///
/// `Tabulated` densities are integrated with the trapezoid rule on their
/// samples. `Semicircle` densities keep their samples for export but use the
/// closed-form transform, moments and distribution function, which the
/// trapezoid rule cannot reproduce near the square-root edges.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DensityShape {
    Tabulated,
    Semicircle { variance: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Density {
    lo: f64,
    hi: f64,
    samples: Vec<f64>,
    mass: f64,
    shape: DensityShape,
}

impl Density {
    pub fn support(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn shape(&self) -> DensityShape {
        self.shape
    }

    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / (self.samples.len() - 1) as f64
    }

    pub fn abscissa(&self, k: usize) -> f64 {
        self.lo + k as f64 * self.step()
    }

    /// Trapezoid nodes `(x_k, w_k f_k)` whose weights sum to the mass.
    pub fn trapezoid_nodes(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let h = self.step();
        let last = self.samples.len() - 1;
        self.samples.iter().enumerate().map(move |(k, &f)| {
            let w = if k == 0 || k == last { 0.5 * h } else { h };
            (self.abscissa(k), w * f)
        })
    }

    /// Mass of the density part on `(-inf, x]`.
    pub fn cumulative(&self, x: f64) -> f64 {
        if x <= self.lo {
            return 0.0;
        }
        if x >= self.hi {
            return self.mass;
        }
        match self.shape {
            DensityShape::Semicircle { variance } => {
                self.mass * semicircle_cdf_scaled(x, variance)
            }
            DensityShape::Tabulated => {
                let h = self.step();
                let t = (x - self.lo) / h;
                let k = (t.floor() as usize).min(self.samples.len() - 2);
                let mut acc = 0.0;
                for j in 0..k {
                    acc += 0.5 * h * (self.samples[j] + self.samples[j + 1]);
                }
                // partial cell with the linearly interpolated density
                let s = x - self.abscissa(k);
                let f0 = self.samples[k];
                let slope = (self.samples[k + 1] - f0) / h;
                acc + f0 * s + 0.5 * slope * s * s
            }
        }
    }
}

/// Distribution function of the semicircle law with the given variance.
pub(crate) fn semicircle_cdf_scaled(x: f64, variance: f64) -> f64 {
    let t = x / variance.sqrt();
    if t <= -2.0 {
        0.0
    } else if t >= 2.0 {
        1.0
    } else {
        0.5 + t * (4.0 - t * t).sqrt() / (4.0 * PI) + (t / 2.0).asin() / PI
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentSummary {
    pub mean: f64,
    pub variance: f64,
    /// Second raw moment.
    pub m2: f64,
    pub m3: f64,
    /// First absolute moment.
    pub beta1: f64,
    /// Third absolute moment.
    pub beta3: f64,
    pub m4: f64,
}

/// An immutable probability measure.
#[derive(Debug, Clone, PartialEq)]
pub struct Measure {
    atoms: Vec<Atom>,
    density: Option<Density>,
}

impl Measure {
    /// Atomic measure; coincident positions are merged.
    pub fn make_atomic(points: &[f64], weights: &[f64]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidInput("empty atom list".into()));
        }
        if points.len() != weights.len() {
            return Err(Error::InvalidInput(format!(
                "{} positions but {} weights",
                points.len(),
                weights.len()
            )));
        }
        let atoms = merge_atoms(points, weights)?;
        Self::from_parts(atoms, None)
    }

    pub fn point_mass(position: f64) -> Self {
        Self {
            atoms: vec![Atom {
                position,
                weight: 1.0,
            }],
            density: None,
        }
    }

    /// Symmetric two-point measure on `±sqrt(variance)`.
    pub fn bernoulli(variance: f64) -> Result<Self> {
        if !(variance > 0.0) || !variance.is_finite() {
            return Err(Error::InvalidInput(format!(
                "variance must be positive, got {variance}"
            )));
        }
        let s = variance.sqrt();
        Self::make_atomic(&[-s, s], &[0.5, 0.5])
    }

    /// Semicircle law with the given variance, sampled at `grid_points`.
    pub fn semicircle(variance: f64, grid_points: usize) -> Result<Self> {
        if !(variance > 0.0) || !variance.is_finite() {
            return Err(Error::InvalidInput(format!(
                "variance must be positive, got {variance}"
            )));
        }
        if grid_points < 3 {
            return Err(Error::InvalidInput(format!(
                "need at least 3 grid points, got {grid_points}"
            )));
        }
        let r = 2.0 * variance.sqrt();
        let h = 2.0 * r / (grid_points - 1) as f64;
        let samples = (0..grid_points)
            .map(|k| {
                let x = -r + k as f64 * h;
                (r * r - x * x).max(0.0).sqrt() / (2.0 * PI * variance)
            })
            .collect();
        Ok(Self {
            atoms: Vec::new(),
            density: Some(Density {
                lo: -r,
                hi: r,
                samples,
                mass: 1.0,
                shape: DensityShape::Semicircle { variance },
            }),
        })
    }

    /// Measure with a tabulated density (and optionally atoms).
    ///
    /// `samples` are taken at `grid_points` uniform nodes spanning `[lo, hi]`.
    pub fn with_density(atoms: Vec<Atom>, lo: f64, hi: f64, samples: Vec<f64>) -> Result<Self> {
        if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidInput(format!("bad support [{lo}, {hi}]")));
        }
        if samples.len() < 3 {
            return Err(Error::InvalidInput("density needs at least 3 samples".into()));
        }
        if samples.iter().any(|&f| !(f >= 0.0) || !f.is_finite()) {
            return Err(Error::InvalidInput("density samples must be non-negative".into()));
        }
        let mut density = Density {
            lo,
            hi,
            samples,
            mass: 0.0,
            shape: DensityShape::Tabulated,
        };
        density.mass = density.trapezoid_nodes().map(|(_, w)| w).sum();
        let atoms = if atoms.is_empty() {
            atoms
        } else {
            let (p, w): (Vec<f64>, Vec<f64>) =
                atoms.iter().map(|a| (a.position, a.weight)).unzip();
            merge_atoms(&p, &w)?
        };
        Self::from_parts(atoms, Some(density))
    }

    fn from_parts(atoms: Vec<Atom>, density: Option<Density>) -> Result<Self> {
        let m = Self { atoms, density };
        m.validate()?;
        Ok(m)
    }

    fn validate(&self) -> Result<()> {
        if self.atoms.iter().any(|a| !(a.weight > 0.0) || !a.position.is_finite()) {
            return Err(Error::InvalidInput("atom weights must be positive".into()));
        }
        if self.atoms.windows(2).any(|w| w[0].position >= w[1].position) {
            return Err(Error::InvalidInput("atom positions must increase".into()));
        }
        if let Some(d) = &self.density {
            if d.shape == DensityShape::Tabulated {
                let integral: f64 = d.trapezoid_nodes().map(|(_, w)| w).sum();
                if (integral - d.mass).abs() > tolerances::DENSITY_INTEGRAL {
                    return Err(Error::InvalidInput(format!(
                        "density integral {integral} differs from mass {}",
                        d.mass
                    )));
                }
            }
        }
        let total = self.total_mass();
        if (total - 1.0).abs() > tolerances::MASS {
            return Err(Error::InvalidInput(format!(
                "total mass {total} differs from 1"
            )));
        }
        Ok(())
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn density(&self) -> Option<&Density> {
        self.density.as_ref()
    }

    pub fn is_atomic(&self) -> bool {
        self.density.is_none()
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight).sum::<f64>()
            + self.density.as_ref().map_or(0.0, |d| d.mass)
    }

    /// Smallest interval containing the support.
    pub fn support_span(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for a in &self.atoms {
            lo = lo.min(a.position);
            hi = hi.max(a.position);
        }
        if let Some(d) = &self.density {
            lo = lo.min(d.lo);
            hi = hi.max(d.hi);
        }
        (lo, hi)
    }

    /// `mu((-inf, x])`.
    pub fn cdf(&self, x: f64) -> f64 {
        let atoms: f64 = self
            .atoms
            .iter()
            .take_while(|a| a.position <= x)
            .map(|a| a.weight)
            .sum();
        atoms + self.density.as_ref().map_or(0.0, |d| d.cumulative(x))
    }

    /// `mu((-inf, x))`.
    pub fn cdf_left(&self, x: f64) -> f64 {
        let atoms: f64 = self
            .atoms
            .iter()
            .take_while(|a| a.position < x)
            .map(|a| a.weight)
            .sum();
        atoms + self.density.as_ref().map_or(0.0, |d| d.cumulative(x))
    }

    /// Integral of `f` against the measure: exact on atoms, trapezoid on a
    /// tabulated density. Semicircle densities are integrated on their samples
    /// too; callers needing exact semicircle values use the closed forms.
    fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        let atoms: f64 = self.atoms.iter().map(|a| a.weight * f(a.position)).sum();
        let dens: f64 = self
            .density
            .as_ref()
            .map_or(0.0, |d| d.trapezoid_nodes().map(|(x, w)| w * f(x)).sum());
        atoms + dens
    }

    pub fn moments(&self) -> MomentSummary {
        let atomic_part = |f: &dyn Fn(f64) -> f64| -> f64 {
            self.atoms.iter().map(|a| a.weight * f(a.position)).sum()
        };
        let (m1, m2, m3, beta1, beta3, m4) = match &self.density {
            Some(d) if matches!(d.shape, DensityShape::Semicircle { .. }) => {
                let DensityShape::Semicircle { variance: s } = d.shape else {
                    unreachable!()
                };
                let w = d.mass;
                (
                    atomic_part(&|x| x),
                    atomic_part(&|x| x * x) + w * s,
                    atomic_part(&|x| x.powi(3)),
                    atomic_part(&|x| x.abs()) + w * 8.0 * s.sqrt() / (3.0 * PI),
                    atomic_part(&|x| x.abs().powi(3)) + w * 64.0 * s.powf(1.5) / (15.0 * PI),
                    atomic_part(&|x| x.powi(4)) + w * 2.0 * s * s,
                )
            }
            _ => (
                self.integrate(|x| x),
                self.integrate(|x| x * x),
                self.integrate(|x| x.powi(3)),
                self.integrate(f64::abs),
                self.integrate(|x| x.abs().powi(3)),
                self.integrate(|x| x.powi(4)),
            ),
        };
        MomentSummary {
            mean: m1,
            variance: (m2 - m1 * m1).max(0.0),
            m2,
            m3,
            beta1,
            beta3,
            m4,
        }
    }

    /// Pushforward under `x -> x / factor`.
    pub fn rescale(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0) || !factor.is_finite() {
            return Err(Error::InvalidInput(format!(
                "scale factor must be positive, got {factor}"
            )));
        }
        let atoms = self
            .atoms
            .iter()
            .map(|a| Atom {
                position: a.position / factor,
                weight: a.weight,
            })
            .collect();
        let density = self.density.as_ref().map(|d| Density {
            lo: d.lo / factor,
            hi: d.hi / factor,
            samples: d.samples.iter().map(|f| f * factor).collect(),
            mass: d.mass,
            shape: match d.shape {
                DensityShape::Tabulated => DensityShape::Tabulated,
                DensityShape::Semicircle { variance } => DensityShape::Semicircle {
                    variance: variance / (factor * factor),
                },
            },
        });
        let m = Self { atoms, density };
        debug_assert!((m.total_mass() - 1.0).abs() <= tolerances::MASS);
        Ok(m)
    }
}

fn merge_atoms(points: &[f64], weights: &[f64]) -> Result<Vec<Atom>> {
    if let Some(w) = weights.iter().find(|w| !(**w > 0.0) || !w.is_finite()) {
        return Err(Error::InvalidInput(format!("non-positive weight {w}")));
    }
    if points.iter().any(|p| !p.is_finite()) {
        return Err(Error::InvalidInput("atom positions must be finite".into()));
    }
    let mut pairs: Vec<(f64, f64)> = points.iter().copied().zip(weights.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut atoms: Vec<Atom> = Vec::with_capacity(pairs.len());
    for (position, weight) in pairs {
        match atoms.last_mut() {
            Some(last) if last.position == position => last.weight += weight,
            _ => atoms.push(Atom { position, weight }),
        }
    }
    Ok(atoms)
}

/// `B_n`, the square root of the summed variances.
pub fn normalizer(variances: &[f64]) -> Result<f64> {
    if variances.is_empty() {
        return Err(Error::InvalidInput("no variances given".into()));
    }
    if let Some(v) = variances.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
        return Err(Error::InvalidInput(format!("variance must be positive, got {v}")));
    }
    Ok(variances.iter().sum::<f64>().sqrt())
}

/// Rescale every member by the family normalizer so the variances sum to one.
pub fn normalize_family(measures: &[Measure]) -> Result<Vec<Measure>> {
    let variances: Vec<f64> = measures.iter().map(|m| m.moments().variance).collect();
    let b = normalizer(&variances)?;
    measures.iter().map(|m| m.rescale(b)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn symmetric_bernoulli() {
        let m = Measure::make_atomic(&[-1.0, 1.0], &[0.5, 0.5]).unwrap();
        let s = m.moments();
        assert_eq!(s.mean, 0.0);
        assert_eq!(s.variance, 1.0);
        assert_eq!(s.m3, 0.0);
        assert_eq!(s.beta3, 1.0);
        assert_eq!(s.m4, 1.0);
    }

    #[test]
    fn point_mass_has_zero_moments() {
        let m = Measure::make_atomic(&[0.0], &[1.0]).unwrap();
        let s = m.moments();
        assert_eq!((s.mean, s.variance, s.m3, s.beta3, s.m4), (0.0, 0.0, 0.0, 0.0, 0.0));
        assert_eq!(m.total_mass(), 1.0);
    }

    #[test]
    fn coincident_atoms_merge() {
        let m = Measure::make_atomic(&[1.0, -1.0, 1.0], &[0.25, 0.5, 0.25]).unwrap();
        assert_eq!(
            m.atoms(),
            &[
                Atom { position: -1.0, weight: 0.5 },
                Atom { position: 1.0, weight: 0.5 }
            ]
        );
    }

    #[test]
    fn atomic_errors() {
        assert!(Measure::make_atomic(&[], &[]).is_err());
        assert!(Measure::make_atomic(&[0.0, 1.0], &[1.0, 0.0]).is_err());
        assert!(Measure::make_atomic(&[0.0, 1.0], &[0.5, -0.5]).is_err());
        assert!(Measure::make_atomic(&[0.0, 1.0], &[0.5, 0.6]).is_err());
        assert!(Measure::make_atomic(&[0.0], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn semicircle_shape() {
        let m = Measure::semicircle(1.0, 4097).unwrap();
        let d = m.density().unwrap();
        assert_eq!(d.support(), (-2.0, 2.0));
        assert_abs_diff_eq!(d.samples()[2048], 1.0 / PI, epsilon = 1e-15);
        let s = m.moments();
        assert_abs_diff_eq!(s.variance, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(s.m4, 2.0, epsilon = 1e-14);

        let m4 = Measure::semicircle(4.0, 101).unwrap();
        assert_eq!(m4.density().unwrap().support(), (-4.0, 4.0));
        assert!(Measure::semicircle(0.0, 100).is_err());
        assert!(Measure::semicircle(1.0, 2).is_err());
    }

    #[test]
    fn rescale_bernoulli() {
        let m = Measure::bernoulli(1.0).unwrap();
        let r = m.rescale(2f64.sqrt()).unwrap();
        assert_abs_diff_eq!(r.atoms()[1].position, 1.0 / 2f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(r.moments().variance, 0.5, epsilon = 1e-15);
        assert_eq!(m.rescale(1.0).unwrap(), m);
        assert!(m.rescale(0.0).is_err());
        assert!(m.rescale(-1.0).is_err());
    }

    #[test]
    fn rescale_semicircle() {
        let m = Measure::semicircle(1.0, 1001).unwrap().rescale(2.0).unwrap();
        let d = m.density().unwrap();
        assert_eq!(d.shape(), DensityShape::Semicircle { variance: 0.25 });
        assert_eq!(d.support(), (-1.0, 1.0));
        assert_abs_diff_eq!(m.moments().variance, 0.25, epsilon = 1e-15);
    }

    #[test]
    fn normalizer_values() {
        assert_abs_diff_eq!(normalizer(&[1.0, 1.0]).unwrap(), 2f64.sqrt());
        assert_eq!(normalizer(&[1.0]).unwrap(), 1.0);
        assert_abs_diff_eq!(normalizer(&[0.25, 0.25, 0.5, 1.0]).unwrap(), 2f64.sqrt());
        assert!(normalizer(&[1.0, 0.0]).is_err());
        assert!(normalizer(&[]).is_err());
    }

    #[test]
    fn tabulated_density_validation_and_cdf() {
        // uniform density on [0, 1]
        let m = Measure::with_density(vec![], 0.0, 1.0, vec![1.0; 11]).unwrap();
        assert_abs_diff_eq!(m.cdf(0.35), 0.35, epsilon = 1e-14);
        assert_abs_diff_eq!(m.moments().mean, 0.5, epsilon = 1e-14);
        assert!(Measure::with_density(vec![], 0.0, 1.0, vec![2.0; 11]).is_err());
        assert!(Measure::with_density(vec![], 0.0, 1.0, vec![1.0, -1.0, 1.0]).is_err());
        // mixed: half an atom, half uniform on [0, 1]
        let mixed = Measure::with_density(
            vec![Atom { position: 2.0, weight: 0.5 }],
            0.0,
            1.0,
            vec![0.5; 5],
        )
        .unwrap();
        assert_eq!(mixed.cdf(2.0), 1.0);
        assert_abs_diff_eq!(mixed.cdf_left(2.0), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn family_normalization() {
        let fam = vec![
            Measure::bernoulli(1.0).unwrap(),
            Measure::bernoulli(3.0).unwrap(),
            Measure::semicircle(0.5, 101).unwrap(),
        ];
        let norm = normalize_family(&fam).unwrap();
        let total: f64 = norm.iter().map(|m| m.moments().m2).sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-10);
    }
}
