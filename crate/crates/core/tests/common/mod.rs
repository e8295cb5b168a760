//! Closed-form references shared by the integration tests. None of these go
//! through the library's solver or inversion code.
#![allow(dead_code)]

use num_complex::Complex64;
use std::f64::consts::PI;

/// Square root with the cut on [0, inf) and non-negative imaginary part,
/// via the polar form.
pub fn sqrt_upper(w: Complex64) -> Complex64 {
    let r = w.norm().sqrt();
    let mut t = w.arg();
    if t < 0.0 {
        t += 2.0 * PI;
    }
    Complex64::from_polar(r, 0.5 * t)
}

/// `1 / sqrt(z^2 - 4)`: the transform of Bernoulli + Bernoulli (arcsine on [-2, 2]).
pub fn arcsine_g(z: Complex64) -> Complex64 {
    // Product form keeps the branch correct on all of C+.
    1.0 / ((z - 2.0).sqrt() * (z + 2.0).sqrt())
}

/// Semicircle transform with variance `s`, from the product-form root.
pub fn semicircle_g(z: Complex64, s: f64) -> Complex64 {
    let r = 2.0 * s.sqrt();
    (z - (z - r).sqrt() * (z + r).sqrt()) / (2.0 * s)
}

/// Standard semicircle distribution function by Simpson's rule in the angle
/// `x = 2 cos(theta)`.
pub fn semicircle_cdf_by_angle(x: f64) -> f64 {
    if x <= -2.0 {
        return 0.0;
    }
    if x >= 2.0 {
        return 1.0;
    }
    let t0 = (x / 2.0).acos();
    let n = 2000;
    let h = (PI - t0) / n as f64;
    let f = |t: f64| 2.0 * t.sin().powi(2) / PI;
    let mut s = f(t0) + f(PI);
    for k in 1..n {
        s += f(t0 + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// `n`-fold free power of the two-atom law `w_a delta_a + w_b delta_b`,
/// scaled by `1 / scale`, evaluated through the quadratic satisfied by the
/// common subordination function.
#[derive(Clone, Copy, Debug)]
pub struct TwoAtomPower {
    pub a: f64,
    pub b: f64,
    pub w_a: f64,
    pub n: usize,
    pub scale: f64,
}

impl TwoAtomPower {
    pub fn new(a: f64, b: f64, w_a: f64, n: usize) -> Self {
        let mean = w_a * a + (1.0 - w_a) * b;
        let var = w_a * (a - mean).powi(2) + (1.0 - w_a) * (b - mean).powi(2);
        Self { a, b, w_a, n, scale: (n as f64 * var).sqrt() }
    }

    fn atoms(&self) -> (f64, f64, f64, f64) {
        (self.a / self.scale, self.b / self.scale, self.w_a, 1.0 - self.w_a)
    }

    /// Root with the larger imaginary part of
    /// `Z^2 - (z + n c - (n-1)(a+b)) Z + z c - (n-1) a b = 0`,
    /// `c` the zero of the component transform.
    pub fn subordination(&self, z: Complex64) -> Complex64 {
        let (a, b, wa, wb) = self.atoms();
        let n = self.n as f64;
        let c = wa * b + wb * a;
        let p = z + n * c - (n - 1.0) * (a + b);
        let q = z * c - (n - 1.0) * a * b;
        let d = (p * p - 4.0 * q).sqrt();
        let r1 = 0.5 * (p + d);
        let r2 = 0.5 * (p - d);
        if r1.im >= r2.im { r1 } else { r2 }
    }

    pub fn component_g(&self, w: Complex64) -> Complex64 {
        let (a, b, wa, wb) = self.atoms();
        wa / (w - a) + wb / (w - b)
    }

    pub fn g(&self, z: Complex64) -> Complex64 {
        self.component_g(self.subordination(z))
    }
}

/// Standard semicircle distribution function, integrated in the angle:
/// `(pi - t + sin(2 t) / 2) / pi` with `x = 2 cos(t)`.
pub fn semicircle_cdf_angle_form(x: f64) -> f64 {
    let t = (x.clamp(-2.0, 2.0) / 2.0).acos();
    (PI - t + 0.5 * (2.0 * t).sin()) / PI
}

impl TwoAtomPower {
    /// Atom of the power: position and mass, when the mass is positive.
    pub fn atom(&self) -> Option<(f64, f64)> {
        let (a, b, wa, wb) = self.atoms();
        let n = self.n as f64;
        [(a, wa), (b, wb)]
            .into_iter()
            .map(|(x, w)| (n * x, n * w - (n - 1.0)))
            .find(|&(_, m)| m > 1e-12)
    }

    /// Density of the absolutely continuous part at real `x`.
    pub fn density(&self, x: f64) -> f64 {
        let z = Complex64::new(x, 0.0);
        let (a, b, wa, wb) = self.atoms();
        let n = self.n as f64;
        let c = wa * b + wb * a;
        let p = z + n * c - (n - 1.0) * (a + b);
        let q = z * c - (n - 1.0) * a * b;
        let disc = (p * p - 4.0 * q).re;
        if disc >= 0.0 {
            return 0.0;
        }
        let zz = Complex64::new(0.5 * p.re, 0.5 * (-disc).sqrt());
        (-self.component_g(zz).im / PI).max(0.0)
    }

    /// Kolmogorov distance to the standard semicircle law, by midpoint
    /// integration of the density on `points` cells over `[-lim, lim]`.
    pub fn distance_to_semicircle(&self, lim: f64, points: usize) -> f64 {
        let h = 2.0 * lim / points as f64;
        let atom = self.atom();
        let mut acc = 0.0;
        let mut best: f64 = 0.0;
        let mut x = -lim;
        let mut atom_added = false;
        for _ in 0..points {
            let mid = x + 0.5 * h;
            let next = x + h;
            if let Some((pos, m)) = atom {
                if !atom_added && pos < next {
                    acc += self.density(mid) * (pos - x).max(0.0);
                    best = best.max((acc - semicircle_cdf_angle_form(pos)).abs());
                    acc += m;
                    best = best.max((acc - semicircle_cdf_angle_form(pos)).abs());
                    acc += self.density(mid) * (next - pos);
                    atom_added = true;
                    x = next;
                    best = best.max((acc - semicircle_cdf_angle_form(x)).abs());
                    continue;
                }
            }
            acc += self.density(mid) * h;
            x = next;
            best = best.max((acc - semicircle_cdf_angle_form(x)).abs());
        }
        best
    }
}
