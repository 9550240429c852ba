//! Hastings-McLeod solution of the inhomogeneous Painlevé II equation
//! `q'' = x q + 2 q^3 - nu` and its Hamiltonian.
//!
//! The boundary value problem is discretised with the fourth-order Numerov
//! scheme on a uniform grid and solved by damped Newton iteration. The left
//! end is pinned to `sqrt(-x/2)`; the right end carries a Robin condition
//! taken from the decaying tail.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PIIConfig {
    pub nu: f64,
    pub x_min: f64,
    pub x_max: f64,
    pub grid_size: usize,
    /// Bound on the discrete ODE residual at interior nodes.
    pub tol: f64,
    pub max_iter: usize,
}

impl PIIConfig {
    pub fn new(nu: f64) -> Self {
        Self { nu, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nu > -0.5) || !self.nu.is_finite() {
            return domain(format!("nu must exceed -1/2, got {}", self.nu));
        }
        if !(self.x_min < 0.0 && self.x_max > 0.0) {
            return domain(format!("need x_min < 0 < x_max, got [{}, {}]", self.x_min, self.x_max));
        }
        if self.grid_size < 16 {
            return domain(format!("grid_size {} is too small", self.grid_size));
        }
        if !(self.tol > 0.0) {
            return domain("tolerance must be positive");
        }
        Ok(())
    }
}

impl Default for PIIConfig {
    fn default() -> Self {
        Self { nu: 0.5, x_min: -20.0, x_max: 20.0, grid_size: 4001, tol: 1e-9, max_iter: 60 }
    }
}

/// Tabulated Hastings-McLeod solution. Immutable once built.
#[derive(Debug, Clone)]
pub struct PIISolution {
    nu: f64,
    x_min: f64,
    h: f64,
    grid: Vec<f64>,
    q: Vec<f64>,
    qprime: Vec<f64>,
    u: Vec<f64>,
    /// Largest interior discrete residual at convergence.
    pub residual: f64,
    pub iterations: usize,
}

fn rhs(nu: f64, x: f64, q: f64) -> f64 {
    x * q + 2.0 * q * q * q - nu
}

fn hamiltonian_value(nu: f64, x: f64, q: f64, qp: f64) -> f64 {
    qp * qp - x * q * q - q.powi(4) + 2.0 * nu * q
}

/// Banded matrix with `LO` sub-diagonals and one super-diagonal, solved by
/// Gaussian elimination without pivoting (the Newton Jacobian is diagonally
/// dominant).
struct Banded<const LO: usize> {
    n: usize,
    // row i holds columns i-LO ..= i+1
    rows: Vec<[f64; 6]>,
}

impl<const LO: usize> Banded<LO> {
    fn new(n: usize) -> Self {
        assert!(LO + 2 <= 6);
        Self { n, rows: vec![[0.0; 6]; n] }
    }

    fn set(&mut self, i: usize, j: usize, v: f64) {
        self.rows[i][j + LO - i] = v;
    }

    fn solve(mut self, b: &mut [f64]) {
        let n = self.n;
        for k in 0..n {
            let pivot = self.rows[k][LO];
            for i in (k + 1)..n.min(k + LO + 1) {
                let off = LO + k - i;
                let factor = self.rows[i][off] / pivot;
                if factor == 0.0 {
                    continue;
                }
                self.rows[i][off] = 0.0;
                // only the super-diagonal of row k can create fill in row i
                if k + 1 < n {
                    self.rows[i][off + 1] -= factor * self.rows[k][LO + 1];
                }
                b[i] -= factor * b[k];
            }
        }
        for k in (0..n).rev() {
            let mut acc = b[k];
            if k + 1 < n {
                acc -= self.rows[k][LO + 1] * b[k + 1];
            }
            b[k] = acc / self.rows[k][LO];
        }
    }
}

struct Discretisation {
    nu: f64,
    x: Vec<f64>,
    h: f64,
    left: f64,
    robin: f64,
}

const BACKWARD4: [f64; 5] = [3.0, -16.0, 36.0, -48.0, 25.0];

impl Discretisation {
    fn new(cfg: &PIIConfig) -> Self {
        let n = cfg.grid_size;
        let h = (cfg.x_max - cfg.x_min) / (n - 1) as f64;
        let x = (0..n).map(|i| cfg.x_min + i as f64 * h).collect();
        let robin = if cfg.nu == 0.0 { cfg.x_max.sqrt() } else { 1.0 / cfg.x_max };
        Self { nu: cfg.nu, x, h, left: (-cfg.x_min / 2.0).sqrt(), robin }
    }

    fn residual(&self, q: &[f64], out: &mut [f64]) {
        let n = q.len();
        let h2 = self.h * self.h;
        out[0] = q[0] - self.left;
        for i in 1..n - 1 {
            let f = |j: usize| rhs(self.nu, self.x[j], q[j]);
            out[i] = (q[i + 1] - 2.0 * q[i] + q[i - 1]) / h2 - (f(i + 1) + 10.0 * f(i) + f(i - 1)) / 12.0;
        }
        let d: f64 = BACKWARD4.iter().enumerate().map(|(k, c)| c * q[n - 5 + k]).sum::<f64>() / (12.0 * self.h);
        out[n - 1] = d + self.robin * q[n - 1];
    }

    fn jacobian(&self, q: &[f64]) -> Banded<4> {
        let n = q.len();
        let h2 = self.h * self.h;
        let mut jac = Banded::<4>::new(n);
        jac.set(0, 0, 1.0);
        let df = |j: usize| self.x[j] + 6.0 * q[j] * q[j];
        for i in 1..n - 1 {
            jac.set(i, i - 1, 1.0 / h2 - df(i - 1) / 12.0);
            jac.set(i, i, -2.0 / h2 - 10.0 * df(i) / 12.0);
            jac.set(i, i + 1, 1.0 / h2 - df(i + 1) / 12.0);
        }
        for (k, c) in BACKWARD4.iter().enumerate() {
            jac.set(n - 1, n - 5 + k, c / (12.0 * self.h));
        }
        let last = jac.rows[n - 1][4];
        jac.set(n - 1, n - 1, last + self.robin);
        jac
    }

    fn initial_guess(&self) -> Vec<f64> {
        self.x
            .iter()
            .map(|&x| {
                let switch = 0.5 * (1.0 + x.tanh());
                let left = (((x * x + 1.0).sqrt() - x) / 4.0).sqrt();
                let right = if self.nu == 0.0 { 0.1 * (-x.max(0.0)).exp() } else { self.nu * x / (1.0 + x * x) };
                (1.0 - switch) * left + switch * right
            })
            .collect()
    }
}

fn interior_max(r: &[f64]) -> f64 {
    r[1..r.len() - 1].iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

fn all_max(r: &[f64]) -> f64 {
    r.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

fn newton(cfg: &PIIConfig, disc: &Discretisation, mut q: Vec<f64>) -> Result<(Vec<f64>, f64, usize)> {
    let n = q.len();
    let mut res = vec![0.0; n];
    disc.residual(&q, &mut res);
    let mut norm = all_max(&res);
    let mut trial = vec![0.0; n];
    let mut trial_res = vec![0.0; n];
    for it in 0..cfg.max_iter {
        let mut step = res.clone();
        disc.jacobian(&q).solve(&mut step);
        let mut lambda = 1.0;
        loop {
            for i in 0..n {
                trial[i] = q[i] - lambda * step[i];
            }
            disc.residual(&trial, &mut trial_res);
            let t = all_max(&trial_res);
            if t < norm || lambda < 1e-6 {
                break;
            }
            lambda *= 0.5;
        }
        let step_size = lambda * all_max(&step);
        std::mem::swap(&mut q, &mut trial);
        std::mem::swap(&mut res, &mut trial_res);
        norm = all_max(&res);
        if step_size < 1e-13 * (1.0 + all_max(&q)) || norm < 1e-14 {
            let r = interior_max(&res);
            if r < cfg.tol {
                return Ok((q, r, it + 1));
            }
        }
    }
    let r = interior_max(&res);
    if r < cfg.tol && norm < cfg.tol {
        return Ok((q, r, cfg.max_iter));
    }
    Err(Error::NonConvergence { iterations: cfg.max_iter, residual: r })
}

/// Sixth-order one-sided first-derivative weights.
const FORWARD6: [f64; 7] = [-49.0 / 20.0, 6.0, -15.0 / 2.0, 20.0 / 3.0, -15.0 / 4.0, 6.0 / 5.0, -1.0 / 6.0];

fn derivative(disc: &Discretisation, q: &[f64]) -> Vec<f64> {
    let n = q.len();
    let h = disc.h;
    let f = |j: usize| rhs(disc.nu, disc.x[j], q[j]);
    let mut d = vec![0.0; n];
    for i in 1..n - 1 {
        d[i] = (q[i + 1] - q[i - 1]) / (2.0 * h) - h / 12.0 * (f(i + 1) - f(i - 1));
    }
    d[0] = FORWARD6.iter().enumerate().map(|(k, c)| c * q[k]).sum::<f64>() / h;
    d[n - 1] = -FORWARD6.iter().enumerate().map(|(k, c)| c * q[n - 1 - k]).sum::<f64>() / h;
    d
}

fn solve_direct(cfg: &PIIConfig, guess: Option<&PIISolution>) -> Result<PIISolution> {
    let disc = Discretisation::new(cfg);
    let start = match guess {
        Some(prev) if prev.q.len() == cfg.grid_size && prev.x_min == cfg.x_min && prev.h == disc.h => prev.q.clone(),
        Some(prev) => disc.x.iter().map(|&x| prev.q_clamped(x)).collect(),
        None => disc.initial_guess(),
    };
    let (q, residual, iterations) = newton(cfg, &disc, start)?;
    let qprime = derivative(&disc, &q);
    let u = disc
        .x
        .iter()
        .zip(q.iter().zip(&qprime))
        .map(|(&x, (&q, &qp))| hamiltonian_value(cfg.nu, x, q, qp))
        .collect();
    Ok(PIISolution { nu: cfg.nu, x_min: cfg.x_min, h: disc.h, grid: disc.x, q, qprime, u, residual, iterations })
}

/// Solve for the Hastings-McLeod solution on `[x_min, x_max]`.
///
/// For `|nu| > 1` the solve walks up from `nu = 1` in steps of at most 0.25,
/// each step seeded by the previous solution.
pub fn solve_hastings_mcleod(cfg: &PIIConfig) -> Result<PIISolution> {
    cfg.validate()?;
    if cfg.nu.abs() <= 1.0 {
        return solve_direct(cfg, None);
    }
    let steps = ((cfg.nu.abs() - 1.0) / 0.25).ceil() as usize;
    let mut sol = solve_direct(&PIIConfig { nu: cfg.nu.signum(), ..*cfg }, None)?;
    for k in 1..=steps {
        let nu = cfg.nu.signum() * (1.0 + (cfg.nu.abs() - 1.0) * k as f64 / steps as f64);
        sol = solve_direct(&PIIConfig { nu, ..*cfg }, Some(&sol))?;
    }
    Ok(sol)
}

/// Solve for a new `nu` using `previous` as the Newton starting point.
pub fn continue_from(cfg: &PIIConfig, previous: &PIISolution) -> Result<PIISolution> {
    cfg.validate()?;
    solve_direct(cfg, Some(previous))
}

/// Quintic Hermite interpolation on `[0, 1]` from values, first and second
/// derivatives (already multiplied by the appropriate powers of h).
fn quintic(t: f64, y0: f64, d0: f64, s0: f64, y1: f64, d1: f64, s1: f64) -> f64 {
    let t2 = t * t;
    let t3 = t2 * t;
    let t4 = t3 * t;
    let t5 = t4 * t;
    let h0 = 1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5;
    let h1 = t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5;
    let h2 = 0.5 * (t2 - 3.0 * t3 + 3.0 * t4 - t5);
    let h3 = 0.5 * (t3 - 2.0 * t4 + t5);
    let h4 = -4.0 * t3 + 7.0 * t4 - 3.0 * t5;
    let h5 = 10.0 * t3 - 15.0 * t4 + 6.0 * t5;
    h0 * y0 + h1 * d0 + h2 * s0 + h3 * s1 + h4 * d1 + h5 * y1
}

impl PIISolution {
    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn q_values(&self) -> &[f64] {
        &self.q
    }

    pub fn qprime_values(&self) -> &[f64] {
        &self.qprime
    }

    pub fn u_values(&self) -> &[f64] {
        &self.u
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.grid[0], *self.grid.last().unwrap())
    }

    pub fn contains(&self, x: f64) -> bool {
        let (a, b) = self.interval();
        x >= a && x <= b
    }

    fn locate(&self, x: f64) -> (usize, f64) {
        let n = self.grid.len();
        let j = (((x - self.x_min) / self.h).floor() as isize).clamp(0, n as isize - 2) as usize;
        (j, (x - self.grid[j]) / self.h)
    }

    fn check(&self, x: f64) -> Result<()> {
        if !self.contains(x) {
            let (a, b) = self.interval();
            return domain(format!("x = {x} outside solved interval [{a}, {b}]"));
        }
        Ok(())
    }

    fn third(&self, j: usize) -> f64 {
        let (x, q, qp) = (self.grid[j], self.q[j], self.qprime[j]);
        q + x * qp + 6.0 * q * q * qp
    }

    fn q_clamped(&self, x: f64) -> f64 {
        let (a, b) = self.interval();
        let x = x.clamp(a, b);
        let (j, t) = self.locate(x);
        let h = self.h;
        let s = |k: usize| rhs(self.nu, self.grid[k], self.q[k]) * h * h;
        quintic(t, self.q[j], self.qprime[j] * h, s(j), self.q[j + 1], self.qprime[j + 1] * h, s(j + 1))
    }

    /// Interpolated `q(x)`.
    pub fn q(&self, x: f64) -> Result<f64> {
        self.check(x)?;
        Ok(self.q_clamped(x))
    }

    /// Interpolated `q'(x)`.
    pub fn qprime(&self, x: f64) -> Result<f64> {
        self.check(x)?;
        let (j, t) = self.locate(x);
        let h = self.h;
        let s = |k: usize| rhs(self.nu, self.grid[k], self.q[k]) * h;
        Ok(quintic(
            t,
            self.qprime[j],
            s(j),
            self.third(j) * h * h,
            self.qprime[j + 1],
            s(j + 1),
            self.third(j + 1) * h * h,
        ))
    }

    /// Hamiltonian `u(x) = q'^2 - x q^2 - q^4 + 2 nu q`.
    pub fn hamiltonian(&self, x: f64) -> Result<f64> {
        Ok(hamiltonian_value(self.nu, x, self.q(x)?, self.qprime(x)?))
    }

    /// `q''(x)` from the equation itself.
    pub fn qsecond(&self, x: f64) -> Result<f64> {
        Ok(rhs(self.nu, x, self.q(x)?))
    }
}

/// Hamiltonian of `sol` at `x`; see [`PIISolution::hamiltonian`].
pub fn hamiltonian(sol: &PIISolution, x: f64) -> Result<f64> {
    sol.hamiltonian(x)
}
