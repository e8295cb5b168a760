//! Interval-halving adaptive Simpson quadrature.

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    /// Sum of the local `|S_fine - S_coarse| / 15` estimates.
    pub error: f64,
    pub evaluations: usize,
}

const MAX_DEPTH: u32 = 40;

/// Integrate `f` over `[a, b]` to absolute tolerance `tol`.
///
/// `f` may fail; the first error aborts the integration. Subintervals that hit
/// the depth limit are accepted with their error estimate included.
pub fn adaptive_simpson<F>(f: F, a: f64, b: f64, tol: f64) -> Result<Quadrature>
where
    F: Fn(f64) -> Result<f64>,
{
    let q = adaptive_simpson_multi(|x| Ok([f(x)?]), a, b, tol)?;
    Ok(Quadrature { value: q.values[0], error: q.error, evaluations: q.evaluations })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MultiQuadrature<const N: usize> {
    pub values: [f64; N],
    /// Error estimate of the first (controlling) component.
    pub error: f64,
    pub evaluations: usize,
}

/// Adaptive Simpson for `N` integrands sharing one set of nodes; refinement
/// is driven by the first component.
pub fn adaptive_simpson_multi<F, const N: usize>(
    f: F,
    a: f64,
    b: f64,
    tol: f64,
) -> Result<MultiQuadrature<N>>
where
    F: Fn(f64) -> Result<[f64; N]>,
{
    let mut out = MultiQuadrature { values: [0.0; N], error: 0.0, evaluations: 0 };
    if a == b {
        return Ok(out);
    }
    let fa = f(a)?;
    let fb = f(b)?;
    let m = 0.5 * (a + b);
    let fm = f(m)?;
    out.evaluations = 3;
    let whole = simpson(b - a, &fa, &fm, &fb);
    recurse(&f, (a, b), [fa, fm, fb], whole, tol, 0, &mut out)?;
    Ok(out)
}

fn simpson<const N: usize>(width: f64, fa: &[f64; N], fm: &[f64; N], fb: &[f64; N]) -> [f64; N] {
    std::array::from_fn(|k| width / 6.0 * (fa[k] + 4.0 * fm[k] + fb[k]))
}

fn recurse<F, const N: usize>(
    f: &F,
    (a, b): (f64, f64),
    [fa, fm, fb]: [[f64; N]; 3],
    whole: [f64; N],
    tol: f64,
    depth: u32,
    out: &mut MultiQuadrature<N>,
) -> Result<()>
where
    F: Fn(f64) -> Result<[f64; N]>,
{
    let m = 0.5 * (a + b);
    let flm = f(0.5 * (a + m))?;
    let frm = f(0.5 * (m + b))?;
    out.evaluations += 2;
    let left = simpson(m - a, &fa, &flm, &fm);
    let right = simpson(b - m, &fm, &frm, &fb);
    let delta = left[0] + right[0] - whole[0];
    if delta.abs() <= 15.0 * tol || depth >= MAX_DEPTH || m <= a || m >= b {
        for k in 0..N {
            out.values[k] += left[k] + right[k] + (left[k] + right[k] - whole[k]) / 15.0;
        }
        out.error += delta.abs() / 15.0;
        return Ok(());
    }
    recurse(f, (a, m), [fa, flm, fm], left, 0.5 * tol, depth + 1, out)?;
    recurse(f, (m, b), [fm, frm, fb], right, 0.5 * tol, depth + 1, out)
}
