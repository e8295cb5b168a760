//! Lyapunov fractions, the exponent schedule of the rate recursion, and
//! empirical rate sweeps in the free central limit theorem.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::inversion::{free_sum_distance, InversionConfig};
use crate::measure::{normalizer, Measure};
use crate::subordination::SolverConfig;

fn check_pairs(sigmas2: &[f64], other: &[f64], what: &str) -> Result<f64> {
    if sigmas2.len() != other.len() {
        return Err(Error::InvalidInput(format!(
            "{} variances but {} {what}",
            sigmas2.len(),
            other.len()
        )));
    }
    if other.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
        return Err(Error::InvalidInput(format!("{what} must be finite and non-negative")));
    }
    normalizer(sigmas2)
}

/// `sum beta3_i / B^3` with `B^2 = sum sigma_i^2`.
pub fn lyapunov3(sigmas2: &[f64], beta3s: &[f64]) -> Result<f64> {
    let b = check_pairs(sigmas2, beta3s, "third absolute moments")?;
    Ok(beta3s.iter().sum::<f64>() / b.powi(3))
}

/// `sum m4_i / B^4`.
pub fn lyapunov4(sigmas2: &[f64], m4s: &[f64]) -> Result<f64> {
    let b = check_pairs(sigmas2, m4s, "fourth moments")?;
    Ok(m4s.iter().sum::<f64>() / b.powi(4))
}

/// `sum L_i^3 / B^3` for supports in `[-L_i, L_i]`.
pub fn lyapunov_support(sigmas2: &[f64], bounds: &[f64]) -> Result<f64> {
    let b = check_pairs(sigmas2, bounds, "support bounds")?;
    if let Some(i) = (0..bounds.len()).find(|&i| bounds[i] * bounds[i] < sigmas2[i]) {
        return Err(Error::InvalidInput(format!(
            "support bound {} is below the standard deviation {}",
            bounds[i],
            sigmas2[i].sqrt()
        )));
    }
    Ok(bounds.iter().map(|l| l.powi(3)).sum::<f64>() / b.powi(3))
}

/// `(2^i - 1) / 2^(i+1) + k / 2^i`.
pub fn exponent_schedule(k: f64, i: u32) -> Result<f64> {
    if !(0.0..0.5).contains(&k) {
        return Err(Error::InvalidInput(format!("k = {k} must lie in [0, 1/2)")));
    }
    if !(1..=1000).contains(&i) {
        return Err(Error::InvalidInput(format!("step {i} must lie in 1..=1000")));
    }
    let p = 2f64.powi(i as i32);
    Ok((p - 1.0) / (2.0 * p) + k / p)
}

/// `ceil(log(1 / (4 eps)) / log 2)`: the number of steps after which
/// `exponent_schedule(1/4, i) >= 1/2 - eps`.
pub fn recursion_depth(eps: f64) -> Result<u32> {
    if !(eps > 0.0 && eps < 0.25) {
        return Err(Error::InvalidInput(format!("eps = {eps} must lie in (0, 1/4)")));
    }
    let raw = (1.0 / (4.0 * eps)).log2();
    // Absorb rounding so exact powers of two land on their integer.
    let near = raw.round();
    let depth = if (raw - near).abs() < 1e-12 { near } else { raw.ceil() };
    Ok(depth.max(1.0) as u32)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateEntry {
    pub n: usize,
    #[serde(rename = "L3n")]
    pub l3n: f64,
    #[serde(rename = "L4n")]
    pub l4n: f64,
    pub delta: f64,
    pub delta_uncertainty: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateReport {
    pub entries: Vec<RateEntry>,
    /// Least-squares slope of `log delta` against `log L4n`; absent with fewer
    /// than two entries or a non-positive delta.
    pub fitted_exponent: Option<f64>,
    pub c_eps_estimate: f64,
    pub eps_used: f64,
}

/// `max delta / L4n^(1/2 - eps)` over `entries`.
pub fn c_eps_of(entries: &[RateEntry], eps: f64) -> f64 {
    entries
        .iter()
        .map(|e| e.delta / e.l4n.powf(0.5 - eps))
        .fold(0.0, f64::max)
}

/// Whether `c_eps` fitted on `head` bounds every entry of `tail` within its
/// uncertainty.
pub fn predicts(head: &[RateEntry], tail: &[RateEntry], eps: f64) -> bool {
    let c = c_eps_of(head, eps);
    tail.iter()
        .all(|e| e.delta - e.delta_uncertainty <= c * e.l4n.powf(0.5 - eps))
}

fn least_squares_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Assembles a report; entries are sorted by `n`.
pub fn rate_report(mut entries: Vec<RateEntry>, eps: f64) -> RateReport {
    entries.sort_by_key(|e| e.n);
    let logs: Option<Vec<(f64, f64)>> = entries
        .iter()
        .map(|e| (e.delta > 0.0).then(|| (e.l4n.ln(), e.delta.ln())))
        .collect();
    RateReport {
        fitted_exponent: logs.and_then(|p| least_squares_slope(&p)),
        c_eps_estimate: c_eps_of(&entries, eps),
        eps_used: eps,
        entries,
    }
}

/// Measures `Delta(S_n, omega)` for each `n` in `ns`.
///
/// The family for a given `n` cycles through `bases` (a single base gives the
/// iid case), is normalized by `B_n`, convolved by subordination, inverted and
/// compared with the standard semicircle law. Entries are computed
/// concurrently; failures carry the offending `n`.
pub fn rate_sweep(
    bases: &[Measure],
    ns: &[usize],
    eps: f64,
    solver: &SolverConfig,
    inversion: &InversionConfig,
) -> Result<RateReport> {
    if bases.is_empty() {
        return Err(Error::InvalidInput("need at least one base measure".into()));
    }
    if ns.is_empty() || ns[0] == 0 || ns.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("ns must be positive and strictly increasing".into()));
    }
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::InvalidInput(format!("eps = {eps} must lie in (0, 1/2)")));
    }
    let moments: Vec<_> = bases.iter().map(Measure::moments).collect();
    for (i, m) in moments.iter().enumerate() {
        if !(m.variance > 0.0) {
            return Err(Error::InvalidInput(format!("base {i} has zero variance")));
        }
        if m.mean.abs() > 1e-9 {
            return Err(Error::InvalidInput(format!("base {i} has mean {} (must be 0)", m.mean)));
        }
    }
    solver.validate()?;
    inversion.validate()?;

    let entry = |n: usize| -> Result<RateEntry> {
        let pick = |i: usize| i % bases.len();
        let sigmas2: Vec<f64> = (0..n).map(|i| moments[pick(i)].variance).collect();
        let beta3: Vec<f64> = (0..n).map(|i| moments[pick(i)].beta3).collect();
        let m4: Vec<f64> = (0..n).map(|i| moments[pick(i)].m4).collect();
        let b = normalizer(&sigmas2)?;
        let family = (0..n)
            .map(|i| bases[pick(i)].rescale(b))
            .collect::<Result<Vec<_>>>()?;
        let (_, k) = free_sum_distance(&family, solver, inversion)?;
        Ok(RateEntry {
            n,
            l3n: lyapunov3(&sigmas2, &beta3)?,
            l4n: lyapunov4(&sigmas2, &m4)?,
            delta: k.value,
            delta_uncertainty: k.uncertainty,
        })
    };
    use rayon::prelude::*;
    let entries = ns
        .par_iter()
        .map(|&n| entry(n).map_err(|e| Error::AtEntry { n, source: Box::new(e) }))
        .collect::<Result<Vec<_>>>()?;
    Ok(rate_report(entries, eps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn lyapunov_examples() {
        for n in [1usize, 4, 9] {
            let s = vec![1.0; n];
            assert_abs_diff_eq!(lyapunov3(&s, &s).unwrap(), (n as f64).powf(-0.5), epsilon = 1e-15);
            assert_abs_diff_eq!(lyapunov4(&s, &s).unwrap(), 1.0 / n as f64, epsilon = 1e-15);
            assert_abs_diff_eq!(lyapunov_support(&s, &s).unwrap(), (n as f64).powf(-0.5), epsilon = 1e-15);
        }
        assert_abs_diff_eq!(lyapunov3(&[1.0, 4.0], &[1.0, 8.0]).unwrap(), 9.0 / 5f64.powf(1.5), epsilon = 1e-15);
        assert_abs_diff_eq!(lyapunov4(&[1.0, 4.0], &[1.0, 16.0]).unwrap(), 0.68, epsilon = 1e-15);
        assert_abs_diff_eq!(lyapunov_support(&[1.0, 1.0], &[1.0, 2.0]).unwrap(), 9.0 / 2f64.powf(1.5), epsilon = 1e-14);
    }

    #[test]
    fn lyapunov_errors() {
        assert!(lyapunov3(&[1.0], &[1.0, 1.0]).is_err());
        assert!(lyapunov4(&[0.0], &[1.0]).is_err());
        assert!(lyapunov4(&[1.0], &[-1.0]).is_err());
        assert!(lyapunov_support(&[4.0], &[1.0]).is_err());
    }

    #[test]
    fn schedule_examples() {
        assert_eq!(exponent_schedule(0.25, 1).unwrap(), 0.375);
        assert_eq!(exponent_schedule(0.0, 3).unwrap(), 7.0 / 16.0);
        assert!(exponent_schedule(0.1, 30).unwrap() > 0.5 - 1e-8);
        assert!(exponent_schedule(0.5, 1).is_err());
        assert!(exponent_schedule(0.1, 0).is_err());
    }

    #[test]
    fn depth_examples() {
        assert_eq!(recursion_depth(1.0 / 16.0).unwrap(), 2);
        assert_eq!(exponent_schedule(0.25, 2).unwrap(), 0.5 - 1.0 / 16.0);
        assert_eq!(recursion_depth(0.125).unwrap(), 1);
        assert_eq!(exponent_schedule(0.25, 1).unwrap(), 0.5 - 0.125);
        assert_eq!(recursion_depth(0.01).unwrap(), 5);
        assert_eq!(exponent_schedule(0.25, 5).unwrap(), 0.4921875);
        assert!(recursion_depth(0.25).is_err());
        assert!(recursion_depth(0.0).is_err());
    }

    #[test]
    fn report_fit_and_constant() {
        let entries: Vec<RateEntry> = [4usize, 16, 64]
            .iter()
            .map(|&n| {
                let l4n = 1.0 / n as f64;
                RateEntry { n, l3n: l4n.sqrt(), l4n, delta: 0.3 * l4n.sqrt(), delta_uncertainty: 0.0 }
            })
            .rev()
            .collect();
        let r = rate_report(entries, 0.1);
        assert_eq!(r.entries.iter().map(|e| e.n).collect::<Vec<_>>(), vec![4, 16, 64]);
        assert_abs_diff_eq!(r.fitted_exponent.unwrap(), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(r.c_eps_estimate, 0.3 * 0.25f64.powf(0.1), epsilon = 1e-12);
        assert!(predicts(&r.entries[..1], &r.entries[1..], 0.1));
    }

    #[test]
    fn sweep_rejects_bad_input() {
        let s = SolverConfig::default();
        let i = InversionConfig::default();
        let b = Measure::bernoulli(1.0).unwrap();
        assert!(rate_sweep(&[], &[2], 0.1, &s, &i).is_err());
        assert!(rate_sweep(&[b.clone()], &[4, 2], 0.1, &s, &i).is_err());
        assert!(rate_sweep(&[Measure::point_mass(0.0)], &[2], 0.1, &s, &i).is_err());
        assert!(rate_sweep(&[Measure::point_mass(1.0).clone()], &[2], 0.1, &s, &i).is_err());
    }
}
