//! Entries of the 4×4 Lax pair and the matrices `U` (in ζ), `V` (in s) and
//! `W` (in τ), together with finite-difference checks of every
//! compatibility identity.

use nalgebra::Matrix4;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::painleve::PIISolution;

pub type CMat4 = Matrix4<Complex64>;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Parameters of the model problem. Both radii are pinned to one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MParams {
    pub nu: f64,
    pub r1: f64,
    pub r2: f64,
    pub s: f64,
    pub tau: f64,
}

impl MParams {
    pub fn new(nu: f64, s: f64, tau: f64) -> Result<Self> {
        let p = Self { nu, r1: 1.0, r2: 1.0, s, tau };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nu > -0.5) || !self.nu.is_finite() {
            return domain(format!("nu must exceed -1/2, got {}", self.nu));
        }
        if self.r1 != 1.0 || self.r2 != 1.0 {
            return domain("only r1 = r2 = 1 is supported");
        }
        if !self.s.is_finite() || !self.tau.is_finite() {
            return domain("s and tau must be finite");
        }
        Ok(())
    }
}

/// Scalars entering `U`, `V`, `W` at fixed `(nu, s, tau)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaxEntries {
    pub nu: f64,
    pub s: f64,
    pub tau: f64,
    /// Painlevé argument the entries were read at.
    pub x_star: f64,
    pub d: f64,
    pub c: f64,
    pub b: f64,
    pub h: f64,
    pub f: f64,
    pub g_plus_a: f64,
}

/// Painlevé argument `2^{2/3} (2s - tau^2)`.
pub fn painleve_argument(s: f64, tau: f64) -> f64 {
    2f64.powf(2.0 / 3.0) * (2.0 * s - tau * tau)
}

pub fn entries_from_pii(sol: &PIISolution, s: f64, tau: f64) -> Result<LaxEntries> {
    let nu = sol.nu();
    let x_star = painleve_argument(s, tau);
    if !sol.contains(x_star) {
        let (a, b) = sol.interval();
        return domain(format!("(s, tau) = ({s}, {tau}) maps to x = {x_star}, outside [{a}, {b}]"));
    }
    let q = sol.q(x_star)?;
    let qp = sol.qprime(x_star)?;
    let u = sol.hamiltonian(x_star)?;
    let d = 2f64.powf(-1.0 / 3.0) * q;
    let c = -(2f64.powf(-1.0 / 3.0)) * u + s * s;
    let b = -(2f64.powf(-2.0 / 3.0)) * qp + c * d + tau * d;
    let h = b - 2.0 * tau * d;
    let f = -2.0 * b * c + c * c * d + 2.0 * tau * c * d + 2.0 * tau * tau * d - d * d * d - 2.0 * s * d + nu;
    let g_plus_a = -c * c + d * d + s;
    Ok(LaxEntries { nu, s, tau, x_star, d, c, b, h, f, g_plus_a })
}

/// `dM/dζ = U M`. Simple pole at the origin.
pub fn lax_u(e: &LaxEntries, zeta: Complex64) -> Result<CMat4> {
    if zeta == Complex64::new(0.0, 0.0) {
        return domain("U has a pole at zeta = 0");
    }
    let (c, d, t) = (e.c, e.d, e.tau);
    let pole = e.nu / zeta;
    let gas = re(e.g_plus_a + e.s);
    let bh = re(e.b + e.h);
    Ok(CMat4::new(
        re(-c + t), re(d) + pole, I, re(0.0),
        re(-d) + pole, re(c - t), re(0.0), I,
        -I * (-zeta + gas), -I * bh, re(c + t), re(d) - pole,
        -I * bh, -I * (zeta + gas), re(-d) - pole, re(-c - t),
    ))
}

/// `dM/ds = V M`. Linear in ζ.
pub fn lax_v(e: &LaxEntries, zeta: Complex64) -> CMat4 {
    let (c, d) = (re(e.c), re(e.d));
    let ag = re(e.g_plus_a);
    let bmh = re(e.b - e.h);
    let z = re(0.0);
    CMat4::new(
        c, d, -I, z,
        d, c, z, I,
        I * (-zeta + ag), I * bmh, -c, -d,
        -I * bmh, -I * (zeta + ag), -d, -c,
    ) * re(2.0)
}

/// `dM/dτ = W M`. Linear in ζ.
pub fn lax_w(e: &LaxEntries, zeta: Complex64) -> CMat4 {
    let z = re(0.0);
    let (b, h) = (re(2.0 * e.b), re(2.0 * e.h));
    let id = I * (2.0 * e.d);
    let jf = I * (2.0 * e.f);
    CMat4::new(
        zeta, -b, z, -id,
        -b, -zeta, id, z,
        z, -jf, zeta, -h,
        jf, z, -h, -zeta,
    )
}

/// Largest residuals of the compatibility identities at one `(s, tau)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompatibilityReport {
    pub s: f64,
    pub tau: f64,
    /// `c' - 4d^2 - 2s`
    pub c_prime: f64,
    /// `d' - 4(-b + cd + tau d)`
    pub d_prime: f64,
    /// `d'' - 32d^3 - 32sd + 16 tau^2 d + 8 nu`
    pub d_second: f64,
    /// `(1/4tau) d_tau d - (b - cd - tau d)`; absent at `tau = 0`.
    pub tau_derivative: Option<f64>,
    /// `max |dU/ds - dV/dζ - VU + UV|` over the probe points.
    pub zero_curvature: f64,
}

impl CompatibilityReport {
    pub fn first_order_max(&self) -> f64 {
        self.c_prime.abs().max(self.d_prime.abs()).max(self.tau_derivative.unwrap_or(0.0).abs())
    }
}

pub const ZERO_CURVATURE_PROBES: [Complex64; 3] =
    [Complex64 { re: 1.0, im: 1.0 }, Complex64 { re: -2.0, im: 0.0 }, Complex64 { re: 0.0, im: 0.5 }];

/// Richardson-extrapolated centered first difference.
fn diff1<T>(f: impl Fn(f64) -> Result<T>, x: f64, h: f64, sub: impl Fn(&T, &T) -> T, scale: impl Fn(&T, f64) -> T, add: impl Fn(&T, &T) -> T) -> Result<T> {
    let d = |h: f64| -> Result<T> { Ok(scale(&sub(&f(x + h)?, &f(x - h)?), 0.5 / h)) };
    let coarse = d(h)?;
    let fine = d(h / 2.0)?;
    Ok(add(&scale(&fine, 4.0 / 3.0), &scale(&coarse, -1.0 / 3.0)))
}

fn diff1_scalar(f: impl Fn(f64) -> Result<f64>, x: f64, h: f64) -> Result<f64> {
    diff1(f, x, h, |a, b| a - b, |a, k| a * k, |a, b| a + b)
}

fn diff2_scalar(f: impl Fn(f64) -> Result<f64>, x: f64, h: f64) -> Result<f64> {
    let mid = f(x)?;
    let d = |h: f64| -> Result<f64> { Ok((f(x + h)? - 2.0 * mid + f(x - h)?) / (h * h)) };
    let coarse = d(h)?;
    let fine = d(h / 2.0)?;
    Ok((4.0 * fine - coarse) / 3.0)
}

fn max_abs(m: &CMat4) -> f64 {
    m.iter().fold(0.0f64, |acc, z| acc.max(z.norm()))
}

/// Verify the compatibility identities at `(s, tau)`. `step` is used for
/// first derivatives and `10·step` for second derivatives.
pub fn check_compatibility(sol: &PIISolution, s: f64, tau: f64, step: f64) -> Result<CompatibilityReport> {
    if !(step > 0.0) {
        return domain("step must be positive");
    }
    let at = |s: f64| entries_from_pii(sol, s, tau);
    let e = at(s)?;
    let c_prime = diff1_scalar(|x| Ok(at(x)?.c), s, step)? - 4.0 * e.d * e.d - 2.0 * s;
    let d_prime = diff1_scalar(|x| Ok(at(x)?.d), s, step)? - 4.0 * (-e.b + e.c * e.d + tau * e.d);
    let d_second = diff2_scalar(|x| Ok(at(x)?.d), s, 10.0 * step)?
        - (32.0 * e.d.powi(3) + 32.0 * s * e.d - 16.0 * tau * tau * e.d - 8.0 * e.nu);
    let tau_derivative = if tau != 0.0 {
        let dtau = diff1_scalar(|t| Ok(entries_from_pii(sol, s, t)?.d), tau, step)?;
        Some(dtau / (4.0 * tau) - (e.b - e.c * e.d - tau * e.d))
    } else {
        None
    };

    let mut zero_curvature = 0.0f64;
    for &zeta in &ZERO_CURVATURE_PROBES {
        let du = diff1(|x| lax_u(&at(x)?, zeta), s, step, |a, b| a - b, |a, k| a * re(k), |a, b| a + b)?;
        let hz = Complex64::new(step, 0.0);
        let dv = (lax_v(&e, zeta + hz) - lax_v(&e, zeta - hz)) / (hz * 2.0);
        let u = lax_u(&e, zeta)?;
        let v = lax_v(&e, zeta);
        zero_curvature = zero_curvature.max(max_abs(&(du - dv - v * u + u * v)));
    }
    Ok(CompatibilityReport { s, tau, c_prime, d_prime, d_second, tau_derivative, zero_curvature })
}
