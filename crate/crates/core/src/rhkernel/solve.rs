//! Evaluation of `M(ζ)` by integrating `dM/dζ = U M` inward from the
//! asymptotic frame.
//!
//! A column can only be integrated inward stably along a direction in which
//! it is the most recessive of the four. Each column therefore starts on its
//! own ray (0, ±π/3, ±2π/3, ±π), runs radially to the target radius and then
//! along a circular arc to the target angle. On every anchor ray the column is
//! a known combination of the columns of `M` in the first sector, which is
//! recovered by undoing the jumps.

use nalgebra::Vector4;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

use super::frame::{AsymptoticFrame, Half, Polar};
use super::ode::{integrate, State, Tolerance};
use crate::error::{domain, Error, Result};
use crate::laxpair::{lax_u, CMat4, LaxEntries, MParams};

const RAY_INNER: f64 = PI / 6.0;
const RAY_OUTER: f64 = 5.0 * PI / 12.0;
/// Smallest radius at which a column may turn.
const ARC_FLOOR: f64 = 1.0;
const PLAN_STEPS: usize = 16;
/// Log size of a transient contamination that still leaves the column
/// itself resolved at the integration tolerance.
const TRANSIENT_ALLOWANCE: f64 = 20.0;

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Jump matrix on ray `k`.
pub fn jump(k: usize, nu: f64) -> CMat4 {
    let ep = Complex64::from_polar(1.0, nu * PI);
    let em = ep.conj();
    let mut m = CMat4::identity();
    match k {
        0 => {
            m = CMat4::zeros();
            m[(0, 2)] = c(1.0);
            m[(1, 1)] = c(1.0);
            m[(2, 0)] = c(-1.0);
            m[(3, 3)] = c(1.0);
        }
        1 | 9 => m[(2, 0)] = c(1.0),
        2 => {
            m[(1, 0)] = -ep;
            m[(2, 3)] = ep;
        }
        3 => {
            m[(0, 1)] = em;
            m[(3, 2)] = -em;
        }
        4 | 6 => m[(3, 1)] = c(-1.0),
        5 => {
            m = CMat4::zeros();
            m[(0, 0)] = c(1.0);
            m[(1, 3)] = c(-1.0);
            m[(2, 2)] = c(1.0);
            m[(3, 1)] = c(1.0);
        }
        7 => {
            m[(0, 1)] = -ep;
            m[(3, 2)] = ep;
        }
        8 => {
            m[(1, 0)] = em;
            m[(2, 3)] = -em;
        }
        _ => panic!("no ray {k}"),
    }
    m
}

/// Sector index of a point; points on a ray belong to the sector on its
/// counterclockwise side.
pub fn sector(p: Polar) -> usize {
    let t = p.theta;
    match p.half {
        Half::Upper => {
            if t < RAY_INNER {
                0
            } else if t < RAY_OUTER {
                1
            } else if t < PI - RAY_OUTER {
                2
            } else if t < PI - RAY_INNER {
                3
            } else {
                4
            }
        }
        Half::Lower => {
            if t < -PI + RAY_INNER {
                5
            } else if t < -PI + RAY_OUTER {
                6
            } else if t < -RAY_OUTER {
                7
            } else if t < -RAY_INNER {
                8
            } else {
                9
            }
        }
    }
}

fn inv(m: &CMat4) -> CMat4 {
    m.try_inverse().expect("jump matrices are unimodular")
}

/// `M` on sector `k` equals the continuation of `M` on sector 0 (through the
/// half plane containing `k`) times the returned matrix.
pub fn sector_transfer(k: usize, nu: f64) -> CMat4 {
    match k {
        0 => CMat4::identity(),
        1..=4 => (1..=k).fold(CMat4::identity(), |acc, j| acc * jump(j, nu)),
        5..=9 => ((k + 1)..=9).rev().fold(inv(&jump(0, nu)), |acc, j| acc * inv(&jump(j, nu))),
        _ => panic!("no sector {k}"),
    }
}

/// Direction in which column `j` is recessive, per half plane.
fn anchor_angle(j: usize, half: Half) -> f64 {
    let up = [PI, 0.0, PI / 3.0, 2.0 * PI / 3.0][j];
    match half {
        Half::Upper => up,
        Half::Lower => -up,
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SolveConfig {
    /// Starting radius; `None` picks `max(30, 10 (1 + |s|)^2)`.
    pub radius: Option<f64>,
    pub rtol: f64,
    pub atol: f64,
    /// Allowed `|det M - 1|` before a point is flagged.
    pub det_tol: f64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self { radius: None, rtol: 1e-12, atol: 1e-14, det_tol: 1e-8 }
    }
}

pub fn default_radius(s: f64) -> f64 {
    30f64.max(10.0 * (1.0 + s.abs()).powi(2))
}

/// Prepared solver for one parameter set.
#[derive(Debug, Clone)]
pub struct RhSolver {
    entries: LaxEntries,
    frame: AsymptoticFrame,
    radius: f64,
    tol: Tolerance,
    det_tol: f64,
    /// Inverse of the anchor combination matrix, per half plane.
    unmix: [CMat4; 2],
}

/// `M` at one point with integration statistics.
#[derive(Debug, Clone, Copy)]
pub struct PointValue {
    pub m: CMat4,
    pub steps: usize,
}

impl RhSolver {
    pub fn new(params: &MParams, entries: &LaxEntries, cfg: SolveConfig) -> Result<Self> {
        params.validate()?;
        if params.nu != entries.nu || params.s != entries.s || params.tau != entries.tau {
            return domain("entries were computed for different parameters");
        }
        let radius = cfg.radius.unwrap_or_else(|| default_radius(params.s));
        if !(radius > 1.0) {
            return domain(format!("radius {radius} is too small"));
        }
        let frame = AsymptoticFrame::new(entries)?;
        let nu = params.nu;
        let unmix = [Half::Upper, Half::Lower].map(|half| {
            let mut b = CMat4::zeros();
            for j in 0..4 {
                let k = sector(Polar { r: 1.0, theta: anchor_angle(j, half), half });
                b.set_column(j, &sector_transfer(k, nu).column(j));
            }
            inv(&b)
        });
        Ok(Self {
            entries: *entries,
            frame,
            radius,
            tol: Tolerance { rtol: cfg.rtol, atol: cfg.atol, floor: 1e-12 },
            det_tol: cfg.det_tol,
            unmix,
        })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn entries(&self) -> &LaxEntries {
        &self.entries
    }

    pub fn frame(&self) -> &AsymptoticFrame {
        &self.frame
    }

    pub fn det_tol(&self) -> f64 {
        self.det_tol
    }

    fn rhs(&self, p: Polar, j: usize, v: &State) -> State {
        let u = lax_u(&self.entries, p.zeta()).expect("integration path avoids the origin");
        let shift = self.frame.phase_derivatives(p)[j];
        let w = (u - CMat4::identity() * shift) * Vector4::from(*v);
        [w[0], w[1], w[2], w[3]]
    }

    /// Predicted log error growth along a path, for column `j`. An error
    /// committed where `Re(phase_k - phase_j)` is low grows with every later
    /// rise of that difference. What is left at the end counts in full; a
    /// transient rise only costs precision once the contamination it carries
    /// approaches the size of the column itself.
    fn path_cost(&self, j: usize, points: impl Iterator<Item = Polar>) -> f64 {
        let mut low = [f64::INFINITY; 4];
        let mut last = [0.0f64; 4];
        let mut peak = 0.0f64;
        for p in points {
            let ph = self.frame.phases(p);
            for k in (0..4).filter(|&k| k != j) {
                last[k] = (ph[k] - ph[j]).re;
                low[k] = low[k].min(last[k]);
                peak = peak.max(last[k] - low[k]);
            }
        }
        let end = (0..4).filter(|&k| k != j).map(|k| last[k] - low[k]).fold(0.0, f64::max);
        end + (peak - TRANSIENT_ALLOWANCE).max(0.0)
    }

    /// Radius of the arc for column `j` and the predicted log growth of
    /// errors along the resulting path. The arc runs at that radius and is
    /// followed by a radial leg to the target.
    fn plan(&self, j: usize, target: Polar) -> (f64, f64) {
        const SAMPLES: usize = 48;
        let alpha = anchor_angle(j, target.half);
        let floor = target.r.min(ARC_FLOOR);
        let mut best = (target.r, f64::INFINITY);
        for i in (0..=PLAN_STEPS).rev() {
            let rho = floor * (target.r / floor).powf(i as f64 / PLAN_STEPS as f64);
            let start = Polar { r: rho, theta: alpha, half: target.half };
            let arc = (0..=SAMPLES).map(|i| start.with_angle(alpha + (target.theta - alpha) * i as f64 / SAMPLES as f64));
            let leg = (1..=SAMPLES).map(|i| target.with_radius(rho + (target.r - rho) * i as f64 / SAMPLES as f64));
            let cost = self.path_cost(j, arc.chain(leg));
            // larger radii come first; only switch for a real gain
            if cost < best.1 - 0.5 {
                best = (rho, cost);
            }
            if alpha == target.theta {
                break;
            }
        }
        best
    }

    fn wrap<T>(r: Result<T>, at: f64) -> Result<T> {
        r.map_err(|e| match e {
            Error::Stiffness { step, .. } => Error::Stiffness { step, at },
            other => other,
        })
    }

    /// Column `j` of the recessive solution anchored in `target`'s half
    /// plane, continued to `target`, with `e^{phase_j}` divided out.
    fn column(&self, j: usize, target: Polar) -> Result<(Vector4<Complex64>, usize)> {
        let half = target.half;
        let alpha = anchor_angle(j, half);
        let rho = self.plan(j, target).0;
        let start = Polar { r: self.radius, theta: alpha, half };
        let pre = self.frame.prefactor(start);
        let v0: State = [pre[(0, j)], pre[(1, j)], pre[(2, j)], pre[(3, j)]];
        let radial = |ray: Polar| {
            let dir = Complex64::from_polar(1.0, ray.theta);
            move |r: f64, v: &State| self.rhs(ray.with_radius(r), j, v).map(|x| x * dir)
        };
        let (v1, n1) = Self::wrap(integrate(radial(start), self.radius, rho, v0, self.tol), target.r)?;
        let ring = start.with_radius(rho);
        let arc = |theta: f64, v: &State| {
            let p = ring.with_angle(theta);
            let dz = p.zeta() * Complex64::i();
            self.rhs(p, j, v).map(|x| x * dz)
        };
        let (v2, n2) = Self::wrap(integrate(arc, alpha, target.theta, v1, self.tol), target.r)?;
        let (v3, n3) = Self::wrap(integrate(radial(target), rho, target.r, v2, self.tol), target.r)?;
        Ok((Vector4::from(v3), n1 + n2 + n3))
    }

    /// Columns with their exponential factors removed, and the matrix that
    /// combines them into `M` at `p`.
    fn factored(&self, p: Polar) -> Result<(CMat4, CMat4, usize)> {
        if !(p.r > 0.0) || !p.r.is_finite() {
            return domain("evaluation point must be nonzero and finite");
        }
        if p.r * 1.5 > self.radius {
            return domain(format!("|zeta| = {} needs a starting radius above {}", p.r, 1.5 * p.r));
        }
        let mut v = CMat4::zeros();
        let mut steps = 0;
        for j in 0..4 {
            let (col, n) = self.column(j, p)?;
            v.set_column(j, &col);
            steps += n;
        }
        let idx = if p.half == Half::Upper { 0 } else { 1 };
        let combine = self.unmix[idx] * sector_transfer(sector(p), self.entries.nu);
        Ok((v, combine, steps))
    }

    /// `M` at `p`, from the side recorded in `p`.
    pub fn evaluate(&self, p: Polar) -> Result<PointValue> {
        let (v, combine, steps) = self.factored(p)?;
        let e = self.frame.phases(p).map(|x| x.exp());
        Ok(PointValue { m: v * CMat4::from_diagonal(&Vector4::from(e)) * combine, steps })
    }

    /// `M(p) diag(e^{-phase_j})`, formed without evaluating any growing
    /// exponential on its own, so it stays finite far from the origin.
    pub fn evaluate_normalized(&self, p: Polar) -> Result<PointValue> {
        let (v, combine, steps) = self.factored(p)?;
        let phases = self.frame.phases(p);
        let mut m = CMat4::zeros();
        for j in 0..4 {
            for k in 0..4 {
                if combine[(k, j)] == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let w = combine[(k, j)] * (phases[k] - phases[j]).exp();
                for i in 0..4 {
                    m[(i, j)] += v[(i, k)] * w;
                }
            }
        }
        Ok(PointValue { m, steps })
    }

    /// `M_+(x)` on the positive axis, limit from above.
    pub fn m_plus(&self, x: f64) -> Result<PointValue> {
        if !(x > 0.0) {
            return domain(format!("m_plus needs x > 0, got {x}"));
        }
        self.evaluate(Polar::upper(x, 0.0))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub radius: f64,
    pub rtol: f64,
    pub total_steps: usize,
    pub max_steps: usize,
    pub series_terms: usize,
}

/// `M_+` and the hat transform at a list of points `u`, with `M` sampled at
/// `ζ = √u`.
#[derive(Debug, Clone)]
pub struct MEvaluation {
    pub points: Vec<f64>,
    pub m_plus: Vec<CMat4>,
    pub mhat_plus: Vec<CMat4>,
    pub det_drift: Vec<f64>,
    pub provenance: Provenance,
}

impl MEvaluation {
    pub fn worst_det_drift(&self) -> f64 {
        self.det_drift.iter().fold(0.0f64, |a, &b| a.max(b))
    }
}

pub fn solve_m_plus(params: &MParams, entries: &LaxEntries, points: &[f64], cfg: SolveConfig) -> Result<MEvaluation> {
    if points.iter().any(|&u| !(u > 0.0)) {
        return domain("points must be positive");
    }
    if points.windows(2).any(|w| w[0] > w[1]) {
        return domain("points must be sorted");
    }
    let solver = RhSolver::new(params, entries, cfg)?;
    let values: Vec<PointValue> = points.par_iter().map(|&u| solver.m_plus(u.sqrt())).collect::<Result<_>>()?;
    let m_plus: Vec<CMat4> = values.iter().map(|v| v.m).collect();
    let mhat_plus = points.iter().zip(&m_plus).map(|(&u, m)| super::kernel::hat_transform(m, u)).collect::<Result<_>>()?;
    let det_drift = m_plus.iter().map(|m| (m.determinant() - 1.0).norm()).collect();
    let provenance = Provenance {
        radius: solver.radius,
        rtol: cfg.rtol,
        total_steps: values.iter().map(|v| v.steps).sum(),
        max_steps: values.iter().map(|v| v.steps).max().unwrap_or(0),
        series_terms: solver.frame.coefficients().len(),
    };
    Ok(MEvaluation { points: points.to_vec(), m_plus, mhat_plus, det_drift, provenance })
}
