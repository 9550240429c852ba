//! Large-ζ behaviour of `M`: the quarter-power diagonal, the mixing matrix,
//! the column exponents, and the formal power series in `1/ζ` that
//! multiplies them.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{Error, Result};
use crate::laxpair::{CMat4, LaxEntries};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Which closed half plane a point belongs to. Points on the positive real
/// axis exist in both, as the limits from above and below.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Half {
    Upper,
    Lower,
}

/// A point in polar form that remembers its side of the real axis, so that
/// both `ζ^a` and `(-ζ)^a` are evaluated on the correct side of their cuts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Polar {
    pub r: f64,
    pub theta: f64,
    pub half: Half,
}

impl Polar {
    /// `theta` in `[0, π]`.
    pub fn upper(r: f64, theta: f64) -> Self {
        debug_assert!((0.0..=PI).contains(&theta));
        Self { r, theta, half: Half::Upper }
    }

    /// `theta` in `[-π, 0]`.
    pub fn lower(r: f64, theta: f64) -> Self {
        debug_assert!((-PI..=0.0).contains(&theta));
        Self { r, theta, half: Half::Lower }
    }

    /// Off-axis points pick their half plane from the sign of the imaginary
    /// part; real positive points are taken from above.
    pub fn from_complex(z: Complex64) -> Self {
        let theta = z.arg();
        if z.im < 0.0 {
            Self::lower(z.norm(), theta)
        } else {
            Self::upper(z.norm(), theta.abs())
        }
    }

    pub fn zeta(&self) -> Complex64 {
        Complex64::from_polar(self.r, self.theta)
    }

    /// `ζ^a`, principal branch.
    pub fn pow(&self, a: f64) -> Complex64 {
        Complex64::from_polar(self.r.powf(a), a * self.theta)
    }

    /// `(-ζ)^a`, principal branch.
    pub fn neg_pow(&self, a: f64) -> Complex64 {
        let arg = match self.half {
            Half::Upper => self.theta - PI,
            Half::Lower => self.theta + PI,
        };
        Complex64::from_polar(self.r.powf(a), a * arg)
    }

    pub fn conj(&self) -> Self {
        let half = match self.half {
            Half::Upper => Half::Lower,
            Half::Lower => Half::Upper,
        };
        Self { r: self.r, theta: -self.theta, half }
    }

    pub fn negate(&self) -> Self {
        match self.half {
            Half::Upper => Self::lower(self.r, self.theta - PI),
            Half::Lower => Self::upper(self.r, self.theta + PI),
        }
    }

    pub fn with_radius(&self, r: f64) -> Self {
        Self { r, ..*self }
    }

    pub fn with_angle(&self, theta: f64) -> Self {
        Self { theta, ..*self }
    }
}

pub fn mixing() -> CMat4 {
    let (o, z) = (c(1.0), c(0.0));
    CMat4::new(
        o, z, -I, z,
        z, o, z, I,
        -I, z, o, z,
        z, I, z, o,
    ) * c(FRAC_1_SQRT_2)
}

pub fn mixing_inverse() -> CMat4 {
    // unitary, so the inverse is the conjugate transpose
    mixing().adjoint()
}

fn diag(d: [Complex64; 4]) -> CMat4 {
    CMat4::from_diagonal(&nalgebra::Vector4::from(d))
}

/// Coefficients of the formal solution `S(ζ) = Σ_k M_k ζ^{-k}`.
#[derive(Debug, Clone)]
pub struct AsymptoticFrame {
    pub nu: f64,
    pub s: f64,
    pub tau: f64,
    coeffs: Vec<CMat4>,
}

/// Number of series coefficients computed.
pub const SERIES_TERMS: usize = 60;

impl AsymptoticFrame {
    pub fn new(e: &LaxEntries) -> Result<Self> {
        let coeffs = formal_series(e, SERIES_TERMS)?;
        Ok(Self { nu: e.nu, s: e.s, tau: e.tau, coeffs })
    }

    pub fn coefficients(&self) -> &[CMat4] {
        &self.coeffs
    }

    /// `diag((-ζ)^{-1/4}, ζ^{-1/4}, (-ζ)^{1/4}, ζ^{1/4})`
    pub fn quarter(&self, p: Polar) -> [Complex64; 4] {
        [p.neg_pow(-0.25), p.pow(-0.25), p.neg_pow(0.25), p.pow(0.25)]
    }

    pub fn theta(&self, p: Polar) -> (Complex64, Complex64) {
        let t1 = p.neg_pow(1.5) * (2.0 / 3.0) + p.neg_pow(0.5) * (2.0 * self.s);
        let t2 = p.pow(1.5) * (2.0 / 3.0) + p.pow(0.5) * (2.0 * self.s);
        (t1, t2)
    }

    /// Column exponents `(-θ₁+τζ, -θ₂-τζ, θ₁+τζ, θ₂-τζ)`.
    pub fn phases(&self, p: Polar) -> [Complex64; 4] {
        let (t1, t2) = self.theta(p);
        let tz = p.zeta() * self.tau;
        [-t1 + tz, -t2 - tz, t1 + tz, t2 - tz]
    }

    pub fn phase_derivatives(&self, p: Polar) -> [Complex64; 4] {
        let d1 = -p.neg_pow(0.5) - p.neg_pow(-0.5) * self.s;
        let d2 = p.pow(0.5) + p.pow(-0.5) * self.s;
        let t = c(self.tau);
        [-d1 + t, -d2 - t, d1 + t, d2 - t]
    }

    /// `Q(ζ) 𝔸 E(ζ)` without the series factor.
    pub fn leading(&self, p: Polar) -> CMat4 {
        let e = self.phases(p).map(|x| x.exp());
        diag(self.quarter(p)) * mixing() * diag(e)
    }

    /// Optimally truncated `S(ζ)`: summed up to, not including, the
    /// smallest term.
    pub fn series(&self, p: Polar) -> CMat4 {
        let w = Complex64::new(1.0, 0.0) / p.zeta();
        let mut power = c(1.0);
        let terms: Vec<CMat4> = self.coeffs[1..]
            .iter()
            .map(|m| {
                power *= w;
                m * power
            })
            .collect();
        let size = |t: &CMat4| t.iter().fold(0.0f64, |a, z| a.max(z.norm()));
        let stop = terms
            .iter()
            .enumerate()
            .min_by(|a, b| size(a.1).total_cmp(&size(b.1)))
            .map_or(0, |(k, t)| if size(t) < 1e-18 { k + 1 } else { k });
        terms[..stop].iter().fold(CMat4::identity(), |acc, t| acc + t)
    }

    /// `S(ζ) Q(ζ) 𝔸`, the algebraic part of the asymptotic frame.
    pub fn prefactor(&self, p: Polar) -> CMat4 {
        self.series(p) * diag(self.quarter(p)) * mixing()
    }
}

/// Pieces of `U = ζ U1 + U0 + U_{-1}/ζ`.
pub(crate) fn u_parts(e: &LaxEntries) -> (CMat4, CMat4, CMat4) {
    let mut u1 = CMat4::zeros();
    u1[(2, 0)] = I;
    u1[(3, 1)] = -I;
    let (cc, d, t) = (e.c, e.d, e.tau);
    let gas = c(e.g_plus_a + e.s);
    let bh = c(e.b + e.h);
    let z = c(0.0);
    let u0 = CMat4::new(
        c(-cc + t), c(d), I, z,
        c(-d), c(cc - t), z, I,
        -I * gas, -I * bh, c(cc + t), c(d),
        -I * bh, -I * gas, c(-d), c(-cc - t),
    );
    let mut um1 = CMat4::zeros();
    um1[(0, 1)] = c(e.nu);
    um1[(1, 0)] = c(e.nu);
    um1[(2, 3)] = c(-e.nu);
    um1[(3, 2)] = c(-e.nu);
    (u1, u0, um1)
}

/// `(Q𝔸E)' (Q𝔸E)^{-1} = ζ L1 + L0 + L_{-1}/ζ`.
pub(crate) fn leading_log_derivative(s: f64, tau: f64) -> (CMat4, CMat4, CMat4) {
    let mut l1 = CMat4::zeros();
    l1[(2, 0)] = I;
    l1[(3, 1)] = -I;
    let mut l0 = CMat4::from_diagonal(&nalgebra::Vector4::new(c(tau), c(-tau), c(tau), c(-tau)));
    l0[(0, 2)] = I;
    l0[(1, 3)] = I;
    l0[(2, 0)] = -I * s;
    l0[(3, 1)] = -I * s;
    let mut lm1 = CMat4::from_diagonal(&nalgebra::Vector4::new(c(-0.25), c(-0.25), c(0.25), c(0.25)));
    lm1[(0, 2)] = -I * s;
    lm1[(1, 3)] = I * s;
    (l1, l0, lm1)
}

/// Number of consecutive orders solved together. The commutator with the
/// leading coefficient is nilpotent, so each order is only pinned down by
/// the equations of the next three.
const WINDOW: usize = 4;

fn formal_series(e: &LaxEntries, terms: usize) -> Result<Vec<CMat4>> {
    let (l1, l0, lm1) = leading_log_derivative(e.s, e.tau);
    let (u1, u0, um1) = u_parts(e);
    debug_assert_eq!(u1, l1);
    let shifted = |x: &CMat4| u0 * x - x * l0;
    let polar = |x: &CMat4, k: f64| um1 * x - x * lm1 + x * c(k);
    let comm = |x: &CMat4| x * l1 - l1 * x;

    let mut out = vec![CMat4::identity()];
    for k in 1..=terms {
        let prev1 = out[k - 1];
        let prev2 = if k >= 2 { out[k - 2] } else { CMat4::zeros() };
        // equation for order k + j involves M_{k+j}, M_{k+j-1}, M_{k+j-2}
        let mut rhs = DVector::<Complex64>::zeros(16 * WINDOW);
        let r0 = shifted(&prev1) + polar(&prev2, k as f64 - 2.0);
        let r1 = polar(&prev1, k as f64 - 1.0);
        for (idx, v) in r0.iter().enumerate() {
            rhs[idx] = *v;
        }
        if WINDOW > 1 {
            for (idx, v) in r1.iter().enumerate() {
                rhs[16 + idx] = *v;
            }
        }
        let mut a = DMatrix::<Complex64>::zeros(16 * WINDOW, 16 * WINDOW);
        for block in 0..WINDOW {
            for basis in 0..16 {
                let mut x = CMat4::zeros();
                x[basis] = c(1.0);
                let col = 16 * block + basis;
                // block sits at order k + block
                let eqs: [(usize, CMat4); 3] = [
                    (block, comm(&x)),
                    (block + 1, -shifted(&x)),
                    (block + 2, -polar(&x, (k + block) as f64)),
                ];
                for (row_block, img) in eqs {
                    if row_block < WINDOW {
                        for (idx, v) in img.iter().enumerate() {
                            a[(16 * row_block + idx, col)] = *v;
                        }
                    }
                }
            }
        }
        let svd = a.svd(true, true);
        let smax = svd.singular_values.max();
        let sol = svd.solve(&rhs, 1e-11 * smax).map_err(|_| Error::FitFailure { spread: f64::NAN })?;
        let mut mk = CMat4::zeros();
        for idx in 0..16 {
            mk[idx] = sol[idx];
        }
        if mk.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::FitFailure { spread: f64::INFINITY });
        }
        out.push(mk);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laxpair::{entries_from_pii, lax_u};
    use crate::painleve::{solve_hastings_mcleod, PIIConfig};

    fn entries(s: f64, tau: f64) -> LaxEntries {
        let sol = solve_hastings_mcleod(&PIIConfig::new(0.75)).unwrap();
        entries_from_pii(&sol, s, tau).unwrap()
    }

    fn norm(m: &CMat4) -> f64 {
        m.iter().fold(0.0f64, |a, z| a.max(z.norm()))
    }

    #[test]
    fn frame_is_unimodular() {
        let e = entries(0.3, 0.2);
        let f = AsymptoticFrame::new(&e).unwrap();
        for p in [Polar::upper(2.0, 0.0), Polar::upper(3.0, 2.0), Polar::lower(1.5, -0.4), Polar::lower(2.0, -PI)] {
            let det = (diag(f.quarter(p)) * mixing()).determinant();
            assert!((det - 1.0).norm() < 1e-13);
        }
    }

    #[test]
    fn leading_log_derivative_matches_finite_difference() {
        let e = entries(0.4, -0.3);
        let f = AsymptoticFrame::new(&e).unwrap();
        let (l1, l0, lm1) = leading_log_derivative(e.s, e.tau);
        for p in [Polar::upper(2.0, 0.7), Polar::lower(1.3, -2.5), Polar::upper(3.0, 2.9)] {
            let h = 1e-5;
            let z = p.zeta();
            // differentiate along the ray: d/dζ = e^{-iθ} d/dr
            let fd = (f.leading(p.with_radius(p.r + h)) - f.leading(p.with_radius(p.r - h))) / c(2.0 * h)
                * Complex64::from_polar(1.0, -p.theta);
            let l = fd * f.leading(p).try_inverse().unwrap();
            let want = l1 * z + l0 + lm1 / z;
            assert!(norm(&(l - want)) < 1e-7, "{}", norm(&(l - want)));
        }
    }

    #[test]
    fn first_coefficient_matches_lax_entries() {
        for (s, tau) in [(0.3, 0.0), (1.0, 0.4), (-1.0, 0.4), (2.0, -0.7)] {
            let e = entries(s, tau);
            let f = AsymptoticFrame::new(&e).unwrap();
            let m1 = f.coefficients()[1];
            assert!((m1[(0, 2)] - I * e.c).norm() < 1e-10);
            assert!((m1[(0, 3)] - I * e.d).norm() < 1e-10);
            assert!((m1[(0, 1)] - e.b).norm() < 1e-10);
            assert!((m1[(2, 3)] - e.h).norm() < 1e-10);
        }
    }

    #[test]
    fn truncated_series_solves_the_ode() {
        // each column e^{-φ_j} ψ_j solves v' = (U - φ_j') v
        let e = entries(0.5, 0.3);
        let f = AsymptoticFrame::new(&e).unwrap();
        for p in [Polar::upper(25.0, 0.3), Polar::lower(30.0, -2.0), Polar::upper(20.0, PI)] {
            let h = 1e-4;
            let rot = Complex64::from_polar(1.0, -p.theta);
            let fd = (f.prefactor(p.with_radius(p.r + h)) - f.prefactor(p.with_radius(p.r - h))) / c(2.0 * h) * rot;
            let u = lax_u(&e, p.zeta()).unwrap();
            let v = f.prefactor(p);
            let dphi = f.phase_derivatives(p);
            for j in 0..4 {
                let res = fd.column(j) - (u - CMat4::identity() * dphi[j]) * v.column(j);
                let scale = v.column(j).norm();
                assert!(res.norm() < 1e-7 * scale, "j={j} {}", res.norm() / scale);
            }
        }
    }

    #[test]
    fn branches() {
        let p = Polar::upper(4.0, 0.0);
        assert!((p.neg_pow(0.5) - Complex64::new(0.0, -2.0)).norm() < 1e-15);
        assert!((p.conj().neg_pow(0.5) - Complex64::new(0.0, 2.0)).norm() < 1e-15);
        let q = Polar::from_complex(Complex64::new(-1.0, 1.0));
        assert_eq!(q.half, Half::Upper);
        assert!((q.negate().zeta() - Complex64::new(1.0, -1.0)).norm() < 1e-15);
    }
}
