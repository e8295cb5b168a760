//! Stieltjes inversion of Cauchy transforms and Kolmogorov distances.

use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};

use crate::error::{Error, Result};
use crate::measure::{semicircle_cdf_scaled, Atom, DensityShape, Measure};
use crate::quadrature::adaptive_simpson_multi;
use crate::subordination::{FreeSum, SolverConfig};
use crate::tolerances;
use crate::transform::CauchyTransform;

#[derive(Debug, Clone, PartialEq)]
pub struct InversionConfig {
    /// Decreasing heights at which `-Im G / pi` is sampled.
    pub y_levels: Vec<f64>,
    /// Number of base points of the default x-grid.
    pub x_points: usize,
    /// Absolute tolerance of the per-cell adaptive integration.
    pub cell_tol: f64,
}

impl Default for InversionConfig {
    fn default() -> Self {
        Self {
            y_levels: tolerances::DEFAULT_Y_LEVELS.to_vec(),
            x_points: tolerances::DEFAULT_X_POINTS,
            cell_tol: 1e-7,
        }
    }
}

impl InversionConfig {
    pub fn validate(&self) -> Result<()> {
        validate_levels(&self.y_levels)?;
        if self.x_points < 3 {
            return Err(Error::InvalidInput("x-grid needs at least 3 points".into()));
        }
        if !(self.cell_tol > 0.0) {
            return Err(Error::InvalidInput("cell tolerance must be positive".into()));
        }
        Ok(())
    }
}

fn validate_levels(y_levels: &[f64]) -> Result<()> {
    if y_levels.is_empty() {
        return Err(Error::InvalidInput("no y levels".into()));
    }
    if y_levels.iter().any(|&y| !(y >= tolerances::MIN_IM) || !y.is_finite()) {
        return Err(Error::InvalidInput("y levels must be positive".into()));
    }
    if y_levels.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidInput("y levels must be strictly decreasing".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityEstimate {
    /// Extrapolated density, clamped at zero.
    pub value: f64,
    /// Extrapolation from the previous pair of levels (or the raw value at the
    /// smallest level when only two are given); `|value - previous|` is the
    /// bias indicator.
    pub previous: f64,
    /// `-Im G(x + i y) / pi` per level.
    pub raw: Vec<f64>,
    /// The extrapolation correction grew from one pair of levels to the next.
    pub non_monotone: bool,
    /// `y |Im G|` at the smallest level exceeds the atom threshold.
    pub atom_suspected: bool,
}

/// Linear extrapolation to `y = 0` through `(y0, f0)` and `(y1, f1)`.
fn richardson(y0: f64, f0: f64, y1: f64, f1: f64) -> f64 {
    (y0 * f1 - y1 * f0) / (y0 - y1)
}

fn estimate_from_values(y_levels: &[f64], g_vals: &[Complex64]) -> DensityEstimate {
    let raw: Vec<f64> = g_vals.iter().map(|g| -g.im / PI).collect();
    let k = raw.len();
    let y_min = y_levels[k - 1];
    let atom_suspected = y_min * g_vals[k - 1].im.abs() > tolerances::ATOM_FLAG;
    if k == 1 {
        let v = raw[0].max(0.0);
        return DensityEstimate { value: v, previous: v, raw, non_monotone: false, atom_suspected };
    }
    let ex: Vec<f64> = (0..k - 1)
        .map(|i| richardson(y_levels[i], raw[i], y_levels[i + 1], raw[i + 1]))
        .collect();
    let value = ex[k - 2];
    let previous = if k >= 3 { ex[k - 3] } else { raw[k - 1] };
    let non_monotone = k >= 3 && (ex[k - 2] - raw[k - 1]).abs() > (ex[k - 3] - raw[k - 2]).abs() + 1e-12;
    DensityEstimate {
        value: value.max(0.0),
        previous: previous.max(0.0),
        raw,
        non_monotone,
        atom_suspected,
    }
}

/// Density of the measure behind `g` at `x`, by Richardson extrapolation of
/// `-Im G(x + i y) / pi` to `y = 0`.
pub fn density_at<G: CauchyTransform + ?Sized>(g: &G, x: f64, y_levels: &[f64]) -> Result<DensityEstimate> {
    validate_levels(y_levels)?;
    let vals = g.cauchy_on_vertical(x, y_levels)?;
    Ok(estimate_from_values(y_levels, &vals))
}

/// A sampled distribution function: a piecewise-linear continuous part on
/// `xs` plus explicit jumps at `atoms`.
#[derive(Debug, Clone, PartialEq)]
pub struct CdfTable {
    pub xs: Vec<f64>,
    /// Total distribution function at `xs`, jumps included.
    pub cdf: Vec<f64>,
    /// Atoms extracted from the transform, sorted by position.
    pub atoms: Vec<Atom>,
    pub est_error: f64,
    /// Grid cells (left endpoints) still flagged as carrying an atom after
    /// extraction.
    pub suspected_atoms: Vec<f64>,
    /// Number of density evaluations whose extrapolation was flagged.
    pub non_monotone_points: usize,
}

impl CdfTable {
    pub fn new(xs: Vec<f64>, cdf: Vec<f64>, est_error: f64) -> Result<Self> {
        if xs.len() != cdf.len() || xs.len() < 2 {
            return Err(Error::InvalidInput("table needs matching xs and cdf with >= 2 entries".into()));
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput("table xs must be strictly increasing".into()));
        }
        if cdf.windows(2).any(|w| w[1] < w[0]) || cdf[0] < 0.0 || cdf[cdf.len() - 1] > 1.0 + 1e-12 {
            return Err(Error::InvalidInput("table cdf must be non-decreasing within [0, 1]".into()));
        }
        Ok(Self {
            xs,
            cdf,
            atoms: Vec::new(),
            est_error,
            suspected_atoms: Vec::new(),
            non_monotone_points: 0,
        })
    }

    fn jumps_through(&self, x: f64, inclusive: bool) -> f64 {
        self.atoms
            .iter()
            .filter(|a| if inclusive { a.position <= x } else { a.position < x })
            .map(|a| a.weight)
            .sum()
    }

    fn continuous(&self, x: f64) -> f64 {
        let n = self.xs.len();
        let cont = |k: usize| self.cdf[k] - self.jumps_through(self.xs[k], true);
        if x < self.xs[0] {
            return 0.0;
        }
        if x >= self.xs[n - 1] {
            return cont(n - 1);
        }
        let k = self.xs.partition_point(|&t| t <= x) - 1;
        let t = (x - self.xs[k]) / (self.xs[k + 1] - self.xs[k]);
        let (c0, c1) = (cont(k), cont(k + 1));
        c0 + t * (c1 - c0)
    }

    /// Value at `x`: linear interpolation of the continuous part plus jumps;
    /// 0 left of the table.
    pub fn eval(&self, x: f64) -> f64 {
        (self.continuous(x) + self.jumps_through(x, true)).clamp(0.0, 1.0)
    }

    pub fn eval_left(&self, x: f64) -> f64 {
        (self.continuous(x) + self.jumps_through(x, false)).clamp(0.0, 1.0)
    }
}

/// Grid over the effective support of the free sum of `measures`.
///
/// Centered at the summed mean with half-width `2 + 4 s`, `s` the larger of
/// the largest component standard deviation and the standard deviation of the
/// sum.
pub fn default_x_grid(measures: &[Measure], points: usize) -> Vec<f64> {
    let moments: Vec<_> = measures.iter().map(Measure::moments).collect();
    let center: f64 = moments.iter().map(|m| m.mean).sum();
    let max_sd = moments.iter().map(|m| m.variance.sqrt()).fold(0.0, f64::max);
    let total_sd = moments.iter().map(|m| m.variance).sum::<f64>().sqrt();
    let half = 2.0 + 4.0 * max_sd.max(total_sd);
    linspace(center - half, center + half, points)
}

pub(crate) fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.5 * (lo + hi)];
    }
    let h = (hi - lo) / (n - 1) as f64;
    (0..n).map(|k| if k == n - 1 { hi } else { lo + k as f64 * h }).collect()
}

/// `g` with the poles of `atoms` removed.
struct WithoutAtoms<'a, G: ?Sized> {
    inner: &'a G,
    atoms: &'a [Atom],
}

impl<G: CauchyTransform + ?Sized> WithoutAtoms<'_, G> {
    fn poles(&self, z: Complex64) -> Complex64 {
        self.atoms.iter().map(|a| a.weight / (z - a.position)).sum()
    }
}

impl<G: CauchyTransform + ?Sized> CauchyTransform for WithoutAtoms<'_, G> {
    fn cauchy(&self, z: Complex64) -> Result<Complex64> {
        Ok(self.inner.cauchy(z)? - self.poles(z))
    }

    fn cauchy_on_vertical(&self, x: f64, heights: &[f64]) -> Result<Vec<Complex64>> {
        let vals = self.inner.cauchy_on_vertical(x, heights)?;
        Ok(vals
            .into_iter()
            .zip(heights)
            .map(|(g, &y)| g - self.poles(Complex64::new(x, y)))
            .collect())
    }
}

struct Cell {
    value: f64,
    previous: f64,
    error: f64,
    atom: bool,
    flagged: usize,
}

fn integrate_cells<G: CauchyTransform + ?Sized>(
    g: &G,
    x_grid: &[f64],
    y_levels: &[f64],
    cell_tol: f64,
) -> Result<Vec<Cell>> {
    x_grid
        .par_windows(2)
        .map(|w| {
            let flags = AtomicUsize::new(0);
            let atom = AtomicBool::new(false);
            let q = adaptive_simpson_multi(
                |x| {
                    let d = density_at(g, x, y_levels)?;
                    if d.non_monotone {
                        flags.fetch_add(1, Ordering::Relaxed);
                    }
                    if d.atom_suspected {
                        atom.store(true, Ordering::Relaxed);
                    }
                    Ok([d.value, d.previous])
                },
                w[0],
                w[1],
                cell_tol,
            )?;
            Ok(Cell {
                value: q.values[0],
                previous: q.values[1],
                error: q.error,
                atom: atom.into_inner(),
                flagged: flags.into_inner(),
            })
        })
        .collect()
}

/// Smallest atom mass accepted by the extraction.
const MIN_ATOM_MASS: f64 = 1e-4;
/// Rounds of locate-and-subtract before giving up on remaining peaks.
const ATOM_ROUNDS: usize = 4;

/// Maximizer of `f` on `[lo, hi]` by golden-section search.
fn golden_max(f: impl Fn(f64) -> Result<f64>, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64> {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let (mut f1, mut f2) = (f(x1)?, f(x2)?);
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = f(x2)?;
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = f(x1)?;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Locates the peak of `y |Im G(x + i y)|` on `[lo, hi]` and estimates its
/// mass by extrapolating `-y Im G(a + i y)` to `y = 0`. Returns `None` when the
/// peak does not behave like a pole.
fn extract_atom<G: CauchyTransform + ?Sized>(g: &G, lo: f64, hi: f64, y: f64) -> Result<Option<Atom>> {
    let weight_at = |x: f64, h: f64| -> Result<f64> { Ok(-h * g.cauchy(Complex64::new(x, h))?.im) };
    let coarse = golden_max(|x| weight_at(x, y), lo, hi, 1e-3 * y)?;
    let fine_y = y / 16.0;
    let a = golden_max(|x| weight_at(x, fine_y), coarse - 4.0 * y, coarse + 4.0 * y, 1e-9 * y)?;
    let heights = [fine_y, fine_y / 2.0];
    let vals = g.cauchy_on_vertical(a, &heights)?;
    let w0 = -heights[0] * vals[0].im;
    let w1 = -heights[1] * vals[1].im;
    let mass = richardson(heights[0], w0, heights[1], w1);
    if mass < MIN_ATOM_MASS || (w0 - w1).abs() > 0.1 * mass {
        return Ok(None);
    }
    Ok(Some(Atom { position: a, weight: mass }))
}

/// Groups consecutive flagged cells and widens each group by one cell.
fn flagged_windows(cells: &[Cell], x_grid: &[f64]) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut k = 0;
    while k < cells.len() {
        if !cells[k].atom {
            k += 1;
            continue;
        }
        let start = k;
        while k < cells.len() && cells[k].atom {
            k += 1;
        }
        out.push((x_grid[start.saturating_sub(1)], x_grid[(k + 1).min(x_grid.len() - 1)]));
    }
    out
}

/// Distribution function of the measure behind `g`, assembled from the
/// inverted density on `x_grid`.
///
/// Cells flagged as carrying an atom trigger its extraction: the pole is
/// located and weighed, subtracted from `g`, and restored as an exact jump.
/// Each grid cell of the remainder is integrated by adaptive Simpson.
/// `est_error` adds the quadrature error, the largest gap between the
/// cumulative integrals of the final and the previous extrapolation, and the
/// mass defect before renormalization.
pub fn cdf_from_g<G: CauchyTransform + ?Sized>(
    g: &G,
    x_grid: &[f64],
    y_levels: &[f64],
    cell_tol: f64,
) -> Result<CdfTable> {
    validate_levels(y_levels)?;
    if x_grid.len() < 2 || x_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("x-grid must be strictly increasing with >= 2 points".into()));
    }
    let y_min = y_levels[y_levels.len() - 1];
    let mut atoms: Vec<Atom> = Vec::new();
    let mut cells = integrate_cells(g, x_grid, y_levels, cell_tol)?;
    for _ in 0..ATOM_ROUNDS {
        let windows = flagged_windows(&cells, x_grid);
        if windows.is_empty() {
            break;
        }
        let remainder = WithoutAtoms { inner: g, atoms: &atoms };
        let found = windows
            .par_iter()
            .map(|&(lo, hi)| extract_atom(&remainder, lo, hi, y_min))
            .collect::<Result<Vec<_>>>()?;
        let before = atoms.len();
        atoms.extend(found.into_iter().flatten());
        if atoms.len() == before {
            break;
        }
        let remainder = WithoutAtoms { inner: g, atoms: &atoms };
        cells = integrate_cells(&remainder, x_grid, y_levels, cell_tol)?;
    }
    atoms.sort_by(|a, b| a.position.total_cmp(&b.position));

    let mut continuous = Vec::with_capacity(x_grid.len());
    let mut acc = 0.0;
    let mut acc_prev = 0.0;
    let mut bias: f64 = 0.0;
    let mut quad_err = 0.0;
    continuous.push(0.0);
    for c in &cells {
        acc += c.value;
        acc_prev += c.previous;
        quad_err += c.error;
        bias = bias.max((acc - acc_prev).abs());
        continuous.push(acc);
    }
    let atom_mass: f64 = atoms.iter().map(|a| a.weight).sum();
    let total = acc + atom_mass;
    if total < tolerances::MIN_RECOVERED_MASS {
        return Err(Error::MassDeficit(total));
    }
    for a in &mut atoms {
        a.weight /= total;
    }
    let cdf = x_grid
        .iter()
        .zip(&continuous)
        .map(|(&x, &c)| {
            let jumps: f64 = atoms.iter().filter(|a| a.position <= x).map(|a| a.weight).sum();
            (c / total + jumps).min(1.0)
        })
        .collect();
    let suspected_atoms = cells
        .iter()
        .zip(x_grid)
        .filter(|(c, _)| c.atom)
        .map(|(_, &x)| x)
        .collect();
    Ok(CdfTable {
        xs: x_grid.to_vec(),
        cdf,
        atoms,
        est_error: quad_err + bias + (1.0 - total).abs(),
        suspected_atoms,
        non_monotone_points: cells.iter().map(|c| c.flagged).sum(),
    })
}

/// Distribution function of the standard semicircle law.
pub fn semicircle_cdf(x: f64) -> f64 {
    semicircle_cdf_scaled(x, 1.0)
}

/// A distribution function the Kolmogorov distance can be taken of.
pub trait DistributionFunction: Sync {
    /// `F(x)`, right-continuous.
    fn value(&self, x: f64) -> f64;
    /// `F(x-)`.
    fn left_limit(&self, x: f64) -> f64 {
        self.value(x)
    }
    /// Jumps and sample points that must be part of any comparison grid.
    fn breakpoints(&self) -> Vec<f64>;
    /// Interval outside of which `F` is constant.
    fn range(&self) -> (f64, f64);
    fn est_error(&self) -> f64 {
        0.0
    }
}

impl DistributionFunction for CdfTable {
    fn value(&self, x: f64) -> f64 {
        self.eval(x)
    }
    fn left_limit(&self, x: f64) -> f64 {
        self.eval_left(x)
    }
    fn breakpoints(&self) -> Vec<f64> {
        let mut pts = self.xs.clone();
        pts.extend(self.atoms.iter().map(|a| a.position));
        pts
    }
    fn range(&self) -> (f64, f64) {
        (self.xs[0], self.xs[self.xs.len() - 1])
    }
    fn est_error(&self) -> f64 {
        self.est_error
    }
}

impl DistributionFunction for Measure {
    fn value(&self, x: f64) -> f64 {
        self.cdf(x)
    }
    fn left_limit(&self, x: f64) -> f64 {
        self.cdf_left(x)
    }
    fn breakpoints(&self) -> Vec<f64> {
        let mut pts: Vec<f64> = self.atoms().iter().map(|a| a.position).collect();
        if let Some(d) = self.density() {
            let (lo, hi) = d.support();
            pts.push(lo);
            pts.push(hi);
            if d.shape() == DensityShape::Tabulated {
                pts.extend((0..d.samples().len()).map(|k| d.abscissa(k)));
            }
        }
        pts
    }
    fn range(&self) -> (f64, f64) {
        self.support_span()
    }
}

/// Closed-form semicircle law with the given variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SemicircleLaw {
    pub variance: f64,
}

impl Default for SemicircleLaw {
    fn default() -> Self {
        Self { variance: 1.0 }
    }
}

impl DistributionFunction for SemicircleLaw {
    fn value(&self, x: f64) -> f64 {
        semicircle_cdf_scaled(x, self.variance)
    }
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
    fn range(&self) -> (f64, f64) {
        let r = 2.0 * self.variance.sqrt();
        (-r, r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KolmogorovDistance {
    /// Largest difference found on the merged grid (both one-sided limits).
    pub value: f64,
    /// `est_error` of both inputs plus the largest possible excess of the
    /// true supremum over `value` between grid points.
    pub uncertainty: f64,
    /// Where `value` was attained.
    pub at: f64,
}

/// Uniform points added to the merged grid.
const KOLMOGOROV_GRID: usize = 4001;

/// `sup_x |a(x) - b(x)|`.
///
/// Between consecutive grid points both functions are non-decreasing, so
/// `|a - b|` there is at most `max(a(x_{k+1}-) - b(x_k), b(x_{k+1}-) - a(x_k))`;
/// the excess of that bound over the grid maximum enters the uncertainty.
pub fn kolmogorov<A, B>(a: &A, b: &B) -> Result<KolmogorovDistance>
where
    A: DistributionFunction + ?Sized,
    B: DistributionFunction + ?Sized,
{
    let (alo, ahi) = a.range();
    let (blo, bhi) = b.range();
    if alo > bhi || blo > ahi {
        return Err(Error::DisjointSupport);
    }
    let lo = alo.min(blo);
    let hi = ahi.max(bhi);
    let mut pts: Vec<f64> = a
        .breakpoints()
        .into_iter()
        .chain(b.breakpoints())
        .filter(|x| *x >= lo && *x <= hi)
        .collect();
    if hi > lo {
        pts.extend(linspace(lo, hi, KOLMOGOROV_GRID));
    } else {
        pts.push(lo);
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup();

    let vals: Vec<[f64; 4]> = pts
        .iter()
        .map(|&x| [a.value(x), a.left_limit(x), b.value(x), b.left_limit(x)])
        .collect();
    let mut value = 0.0;
    let mut at = pts[0];
    for (&x, v) in pts.iter().zip(&vals) {
        let d = (v[0] - v[2]).abs().max((v[1] - v[3]).abs());
        if d > value {
            value = d;
            at = x;
        }
    }
    let mut bound: f64 = value;
    for w in vals.windows(2) {
        let (l, r) = (&w[0], &w[1]);
        bound = bound.max(r[1] - l[2]).max(r[3] - l[0]);
    }
    Ok(KolmogorovDistance {
        value,
        uncertainty: a.est_error() + b.est_error() + (bound - value),
        at,
    })
}

/// Inverted distribution of the free sum of `measures` and its Kolmogorov
/// distance to the standard semicircle law.
///
/// The measures are used as given; normalize the family first to compare
/// against the free CLT limit.
pub fn free_sum_distance(
    measures: &[Measure],
    solver: &SolverConfig,
    inversion: &InversionConfig,
) -> Result<(CdfTable, KolmogorovDistance)> {
    inversion.validate()?;
    let sum = FreeSum::new(measures.to_vec(), *solver)?;
    let xs = default_x_grid(measures, inversion.x_points);
    let table = cdf_from_g(&sum, &xs, &inversion.y_levels, inversion.cell_tol)?;
    let k = kolmogorov(&table, &SemicircleLaw::default())?;
    Ok((table, k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transform::{FnTransform, StandardSemicircle};
    use approx::assert_abs_diff_eq;

    #[test]
    fn density_of_semicircle() {
        let y = tolerances::DEFAULT_Y_LEVELS;
        let d = density_at(&StandardSemicircle, 0.0, &y).unwrap();
        assert_abs_diff_eq!(d.value, 1.0 / PI, epsilon = 1e-6);
        let d = density_at(&StandardSemicircle, 3.0, &y).unwrap();
        assert_abs_diff_eq!(d.value, 0.0, epsilon = 1e-6);
    }

    #[test]
    fn level_validation() {
        assert!(density_at(&StandardSemicircle, 0.0, &[]).is_err());
        assert!(density_at(&StandardSemicircle, 0.0, &[1e-3, 1e-2]).is_err());
        assert!(density_at(&StandardSemicircle, 0.0, &[1e-2, 0.0]).is_err());
    }

    #[test]
    fn atom_is_flagged() {
        let d0 = Measure::point_mass(0.0);
        let d = density_at(&d0, 0.0, &tolerances::DEFAULT_Y_LEVELS).unwrap();
        assert!(d.atom_suspected);
        assert!(d.non_monotone);
    }

    #[test]
    fn semicircle_cdf_values() {
        assert_eq!(semicircle_cdf(0.0), 0.5);
        assert_eq!(semicircle_cdf(2.0), 1.0);
        assert_eq!(semicircle_cdf(-2.0), 0.0);
        let exact = 0.5 + 3f64.sqrt() / (4.0 * PI) + (0.5f64).asin() / PI;
        assert_abs_diff_eq!(semicircle_cdf(1.0), exact, epsilon = 1e-15);
        assert_abs_diff_eq!(semicircle_cdf(1.0), 0.8044989, epsilon = 1e-7);
    }

    #[test]
    fn kolmogorov_point_mass_and_bernoulli() {
        let k = kolmogorov(&Measure::point_mass(0.0), &SemicircleLaw::default()).unwrap();
        assert_abs_diff_eq!(k.value, 0.5, epsilon = 1e-15);
        let k = kolmogorov(&Measure::bernoulli(1.0).unwrap(), &SemicircleLaw::default()).unwrap();
        assert_abs_diff_eq!(k.value, 0.3044989, epsilon = 1e-4);
        assert_abs_diff_eq!(k.at.abs(), 1.0, epsilon = 1e-15);
        assert!(k.uncertainty < 1e-3);
    }

    #[test]
    fn kolmogorov_identity_and_disjoint() {
        let w = SemicircleLaw::default();
        let k = kolmogorov(&w, &w).unwrap();
        assert_eq!(k.value, 0.0);
        assert!(k.uncertainty < 1e-3);
        assert!(matches!(
            kolmogorov(&Measure::point_mass(5.0), &w),
            Err(Error::DisjointSupport)
        ));
    }

    #[test]
    fn cdf_of_semicircle_transform() {
        let xs = linspace(-3.0, 3.0, 2001);
        let t = cdf_from_g(&StandardSemicircle, &xs, &tolerances::DEFAULT_Y_LEVELS, 1e-7).unwrap();
        assert_abs_diff_eq!(t.eval(0.0), 0.5, epsilon = 1e-4);
        assert_abs_diff_eq!(t.eval(1.0), 0.8044989, epsilon = 1e-4);
        assert!(t.suspected_atoms.is_empty());
    }

    #[test]
    fn mass_deficit_on_narrow_window() {
        let xs = linspace(-1.0, 1.0, 201);
        let r = cdf_from_g(&StandardSemicircle, &xs, &tolerances::DEFAULT_Y_LEVELS, 1e-7);
        assert!(matches!(r, Err(Error::MassDeficit(_))));
    }

    #[test]
    fn evaluator_errors_propagate() {
        let bad = FnTransform(|_z: Complex64| -> Result<Complex64> { Err(Error::InvalidInput("x".into())) });
        assert!(density_at(&bad, 0.0, &[0.1]).is_err());
    }
}
