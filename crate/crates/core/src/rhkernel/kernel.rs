use nalgebra::{DMatrix, DVector, RowVector4, Vector4};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

use super::frame::{mixing_inverse, Polar};
use super::solve::{RhSolver, SolveConfig};
use crate::error::{domain, Error, Result};
use crate::laxpair::{lax_u, CMat4, LaxEntries, MParams};

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn blocks() -> CMat4 {
    let (o, z) = (c(1.0), c(0.0));
    CMat4::new(
        o, -o, z, z,
        o, o, z, z,
        z, z, o, o,
        z, z, -o, o,
    )
}

fn quarter_diag(u: f64) -> CMat4 {
    let (p, m) = (u.powf(0.25), u.powf(-0.25));
    CMat4::from_diagonal(&Vector4::new(c(p), c(m), c(p), c(m)))
}

/// `Mhat(u) = diag(u^¼, u^-¼, u^¼, u^-¼) · blockdiag(...) · M(√u)`, given
/// `m = M(√u)`.
pub fn hat_transform(m: &CMat4, u: f64) -> Result<CMat4> {
    if !(u > 0.0) {
        return domain(format!("hat transform needs u > 0, got {u}"));
    }
    Ok(quarter_diag(u) * blocks() * m)
}

/// Kernel value with the imaginary part kept as a diagnostic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelValue {
    pub value: f64,
    pub imag: f64,
}

/// Largest imaginary part tolerated without a warning.
pub const IMAG_TOL: f64 = 1e-7;

impl KernelValue {
    pub fn accuracy_warning(&self) -> bool {
        self.imag.abs() > IMAG_TOL
    }
}

/// `Mhat`, its inverse and its `u`-derivative at one point.
#[derive(Debug, Clone, Copy)]
pub struct HatPoint {
    pub u: f64,
    pub mhat: CMat4,
    pub inverse: CMat4,
    pub derivative: CMat4,
    pub det_drift: f64,
}

/// Kernel evaluator holding the prepared solver for one parameter set.
#[derive(Debug, Clone)]
pub struct TacnodeKernel {
    solver: RhSolver,
}

const LEFT: RowVector4<Complex64> =
    RowVector4::new(Complex64::new(-1.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0));
const RIGHT: Vector4<Complex64> =
    Vector4::new(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0));

/// Relative closeness below which the diagonal formula is used.
pub fn diagonal_threshold(u: f64) -> f64 {
    1e-4 * (1.0 + u)
}

impl TacnodeKernel {
    pub fn new(params: &MParams, entries: &LaxEntries, cfg: SolveConfig) -> Result<Self> {
        Ok(Self { solver: RhSolver::new(params, entries, cfg)? })
    }

    pub fn solver(&self) -> &RhSolver {
        &self.solver
    }

    pub fn hat(&self, u: f64) -> Result<HatPoint> {
        if !(u > 0.0) {
            return domain(format!("kernel arguments must be positive, got {u}"));
        }
        let z = u.sqrt();
        let m = self.solver.m_plus(z)?.m;
        let mhat = hat_transform(&m, u)?;
        let inverse = mhat.try_inverse().ok_or(Error::SingularGram { condition: f64::INFINITY })?;
        let um = lax_u(self.solver.entries(), c(z))? * m;
        let dq = CMat4::from_diagonal(&Vector4::new(
            c(0.25 * u.powf(-0.75)),
            c(-0.25 * u.powf(-1.25)),
            c(0.25 * u.powf(-0.75)),
            c(-0.25 * u.powf(-1.25)),
        ));
        let derivative = dq * blocks() * m + quarter_diag(u) * blocks() * um / c(2.0 * z);
        Ok(HatPoint { u, mhat, inverse, derivative, det_drift: (m.determinant() - 1.0).norm() })
    }

    pub fn from_hats(x: &HatPoint, y: &HatPoint) -> KernelValue {
        let (u, v) = (x.u, y.u);
        let k = if (u - v).abs() < diagonal_threshold(u) {
            (LEFT * x.inverse * x.derivative * RIGHT)[0] / Complex64::new(0.0, 2.0 * PI)
        } else {
            (LEFT * y.inverse * x.mhat * RIGHT)[0] / Complex64::new(0.0, 2.0 * PI * (u - v))
        };
        KernelValue { value: k.re, imag: k.im }
    }

    pub fn kernel(&self, u: f64, v: f64) -> Result<KernelValue> {
        let x = self.hat(u)?;
        if (u - v).abs() < diagonal_threshold(u) {
            return Ok(Self::from_hats(&x, &x));
        }
        Ok(Self::from_hats(&x, &self.hat(v)?))
    }

    pub fn hats(&self, points: &[f64]) -> Result<Vec<HatPoint>> {
        points.par_iter().map(|&u| self.hat(u)).collect()
    }

    /// `[K(u_i, u_j)]` for the given points.
    pub fn matrix(&self, points: &[f64]) -> Result<DMatrix<f64>> {
        let hats = self.hats(points)?;
        Ok(DMatrix::from_fn(points.len(), points.len(), |i, j| Self::from_hats(&hats[i], &hats[j]).value))
    }
}

/// One-off evaluation of `K(u, v)`.
pub fn tacnode_kernel(params: &MParams, entries: &LaxEntries, u: f64, v: f64) -> Result<KernelValue> {
    TacnodeKernel::new(params, entries, SolveConfig::default())?.kernel(u, v)
}

/// Kernel of the square-root process: `2 u^α v^-α √(uv) K(u², v²)` with
/// `α = ν - 1/2`.
pub fn bessel_process_kernel(params: &MParams, entries: &LaxEntries, u: f64, v: f64) -> Result<KernelValue> {
    bessel_from(&TacnodeKernel::new(params, entries, SolveConfig::default())?, u, v)
}

pub fn bessel_from(k: &TacnodeKernel, u: f64, v: f64) -> Result<KernelValue> {
    if !(u > 0.0 && v > 0.0) {
        return domain("kernel arguments must be positive");
    }
    let alpha = k.solver().entries().nu - 0.5;
    let pre = 2.0 * (u / v).powf(alpha) * (u * v).sqrt();
    let kv = k.kernel(u * u, v * v)?;
    Ok(KernelValue { value: pre * kv.value, imag: pre * kv.imag })
}

/// Estimate of the `1/ζ` coefficient of `M`.
#[derive(Debug, Clone, Serialize)]
pub struct ResidueEstimate {
    #[serde(skip)]
    pub m1: CMat4,
    pub d_hat: f64,
    pub c_hat: f64,
    /// Change in the first row of the estimate when the fit degree drops
    /// by one, relative to the size of that row.
    pub spread: f64,
    /// Argument of the sampling ray.
    pub angle: f64,
    pub radii: Vec<f64>,
}

/// Degree of the least-squares polynomial in `1/ζ`.
pub const FIT_DEGREE: usize = 6;

/// Default sampling radii: 13 points on `[12, 24]`, stretched for large
/// `|s|`, where the expansion coefficients grow.
pub fn default_residue_radii(s: f64) -> Vec<f64> {
    let stretch = (0.3 * s.abs()).max(1.0);
    (0..13).map(|i| stretch * (12.0 + i as f64)).collect()
}

/// Argument of the sampling ray: inside the first sector, away from the
/// directions where the exponentially small corrections to the expansion
/// peak, and reachable by every column without large transient growth.
pub const RESIDUE_ANGLE: f64 = 11.0 * PI / 36.0;

/// Largest spread accepted by [`extract_residue`].
pub const FIT_TOLERANCE: f64 = 1e-2;

/// Constant term of the least-squares polynomial of degree `deg` through
/// `(w_i, f_i)`, fitted entrywise in the variable `w / max|w|`.
fn constant_term(ws: &[Complex64], fs: &[CMat4], deg: usize) -> CMat4 {
    let scale = ws.iter().fold(0.0f64, |a, w| a.max(w.norm()));
    let a = DMatrix::from_fn(ws.len(), deg + 1, |i, k| (ws[i] / scale).powi(k as i32));
    let svd = a.svd(true, true);
    let mut out = CMat4::zeros();
    for r in 0..4 {
        for c in 0..4 {
            let b = DVector::from_fn(ws.len(), |i, _| fs[i][(r, c)]);
            out[(r, c)] = svd.solve(&b, 1e-13).expect("both factors were computed")[0];
        }
    }
    out
}

fn max_abs(m: &CMat4) -> f64 {
    m.iter().fold(0.0f64, |a, z| a.max(z.norm()))
}

/// Samples `(1/ζ, ζ (M (Q𝔸E)^{-1} - I))` along the sampling ray.
fn residue_samples(params: &MParams, entries: &LaxEntries, radii: &[f64]) -> Result<Vec<(Complex64, CMat4)>> {
    if radii.len() < 3 || radii.windows(2).any(|w| !(w[0] < w[1])) || radii[0] <= 0.0 {
        return domain("need at least three increasing positive radii");
    }
    let start = super::solve::default_radius(params.s).max(2.0 * radii[radii.len() - 1]);
    let solver = RhSolver::new(params, entries, SolveConfig { radius: Some(start), rtol: 1e-13, atol: 1e-16, ..SolveConfig::default() })?;
    let frame = solver.frame();
    radii
        .par_iter()
        .map(|&r| {
            let p = Polar::upper(r, RESIDUE_ANGLE);
            let scaled = solver.evaluate_normalized(p)?.m;
            let q = frame.quarter(p).map(|x| Complex64::new(1.0, 0.0) / x);
            let s = scaled * mixing_inverse() * CMat4::from_diagonal(&Vector4::from(q));
            let z = p.zeta();
            Ok((Complex64::new(1.0, 0.0) / z, (s - CMat4::identity()) * z))
        })
        .collect()
}

/// Read off `M₁` from `ζ (M(ζ) (Q𝔸E)^{-1}(ζ) - I)` sampled along one ray
/// in the first sector and extrapolated to `1/ζ = 0` by a least-squares
/// polynomial.
pub fn extract_residue(params: &MParams, entries: &LaxEntries, radii: &[f64]) -> Result<ResidueEstimate> {
    let est = fit_residue(params, entries, radii)?;
    if !(est.spread < FIT_TOLERANCE) {
        return Err(Error::FitFailure { spread: est.spread });
    }
    Ok(est)
}

/// The extrapolation behind [`extract_residue`] without the stability check.
pub fn fit_residue(params: &MParams, entries: &LaxEntries, radii: &[f64]) -> Result<ResidueEstimate> {
    if radii.len() < FIT_DEGREE + 2 {
        return domain(format!("need at least {} radii", FIT_DEGREE + 2));
    }
    let samples = residue_samples(params, entries, radii)?;
    let ws: Vec<Complex64> = samples.iter().map(|s| s.0).collect();
    let fs: Vec<CMat4> = samples.iter().map(|s| s.1).collect();
    let m1 = constant_term(&ws, &fs, FIT_DEGREE);
    let lower = constant_term(&ws, &fs, FIT_DEGREE - 1);
    let row = |m: &CMat4| (0..4).fold(0.0f64, |a, j| a.max(m[(0, j)].norm()));
    let spread = row(&(m1 - lower)) / row(&m1).max(1.0);
    let mi = |i: usize, j: usize| (m1[(i, j)] * Complex64::new(0.0, -1.0)).re;
    Ok(ResidueEstimate { m1, d_hat: mi(0, 3), c_hat: mi(0, 2), spread, angle: RESIDUE_ANGLE, radii: radii.to_vec() })
}

/// Residuals of the three symmetry relations.
#[derive(Debug, Clone, Copy, Serialize, Default)]
pub struct SymmetryReport {
    pub conjugate: f64,
    pub reflection: f64,
    pub inverse_transpose: f64,
}

impl SymmetryReport {
    pub fn max(&self) -> f64 {
        self.conjugate.max(self.reflection).max(self.inverse_transpose)
    }
}

fn block_diag(a: [[f64; 2]; 2], b: [[f64; 2]; 2]) -> CMat4 {
    let mut m = CMat4::zeros();
    for i in 0..2 {
        for j in 0..2 {
            m[(i, j)] = c(a[i][j]);
            m[(i + 2, j + 2)] = c(b[i][j]);
        }
    }
    m
}

/// Check the conjugation, reflection and inverse-transpose symmetries at
/// upper-half-plane points. `reflected` must hold the entries at `-tau`.
pub fn symmetry_residuals(
    params: &MParams,
    entries: &LaxEntries,
    reflected: &LaxEntries,
    points: &[Complex64],
    cfg: SolveConfig,
) -> Result<SymmetryReport> {
    if reflected.tau != -entries.tau || reflected.s != entries.s || reflected.nu != entries.nu {
        return domain("reflected entries must be taken at -tau");
    }
    let radius = cfg.radius.unwrap_or_else(|| super::solve::default_radius(params.s));
    let cfg = SolveConfig { radius: Some(radius), ..cfg };
    let here = RhSolver::new(params, entries, cfg)?;
    let there = RhSolver::new(&MParams { tau: -params.tau, ..*params }, reflected, cfg)?;
    let sign = block_diag([[1.0, 0.0], [0.0, 1.0]], [[-1.0, 0.0], [0.0, -1.0]]);
    let swap = block_diag([[0.0, 1.0], [1.0, 0.0]], [[0.0, -1.0], [-1.0, 0.0]]);
    let mut left = CMat4::zeros();
    let mut right = CMat4::zeros();
    for i in 0..2 {
        left[(i, i + 2)] = c(1.0);
        left[(i + 2, i)] = c(-1.0);
        right[(i, i + 2)] = c(-1.0);
        right[(i + 2, i)] = c(1.0);
    }
    let mut report = SymmetryReport::default();
    for &z in points {
        if z.im < 0.0 {
            return domain("symmetry points must lie in the closed upper half plane");
        }
        let p = Polar::from_complex(z);
        let m = here.evaluate(p)?.m;
        let scale = 1.0 + max_abs(&m);
        let mc = here.evaluate(p.conj())?.m.map(|x| x.conj());
        report.conjugate = report.conjugate.max(max_abs(&(mc - sign * m * sign)) / scale);
        let mn = here.evaluate(p.negate())?.m;
        report.reflection = report.reflection.max(max_abs(&(mn - swap * m * swap)) / scale);
        let inv_t = m.try_inverse().ok_or(Error::SingularGram { condition: f64::INFINITY })?.transpose();
        let mr = there.evaluate(p)?.m;
        report.inverse_transpose = report.inverse_transpose.max(max_abs(&(inv_t - left * mr * right)) / scale);
    }
    Ok(report)
}

/// `M` just above and just below the positive axis; the two must differ by
/// the jump on that axis. Returns the relative mismatch.
pub fn axis_jump_residual(params: &MParams, entries: &LaxEntries, x: f64) -> Result<f64> {
    let solver = RhSolver::new(params, entries, SolveConfig::default())?;
    let above = solver.evaluate(Polar::upper(x, 0.0))?.m;
    let below = solver.evaluate(Polar::lower(x, 0.0))?.m;
    let jump = super::solve::jump(0, params.nu);
    Ok(max_abs(&(above - below * jump)) / (1.0 + max_abs(&above)))
}
