//! Finite-n correlation kernel of the squared Bessel path ensemble at a fixed
//! time, built as a biorthogonal projection over the four Bessel weights, and
//! its comparison with the tacnode kernel under the triple scaling.
//!
//! The polynomial factors use Chebyshev polynomials on `[0, X_cut]` rather
//! than raw monomials. Both span the same space, so the kernel is the same,
//! but the Chebyshev Gram matrix is far better conditioned.

use dashu_float::FBig;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::laxpair::{entries_from_pii, MParams};
use crate::painleve::{solve_hastings_mcleod, PIIConfig};
use crate::phase::{scaling_params, t_star, ScalingParams};
use crate::quadrature;
use crate::rhkernel::{SolveConfig, TacnodeKernel};
use crate::special::{gamma, scaled_lowered, scaled_unchecked};

/// Environment variable overriding the working precision of the Gram solve.
pub const PRECISION_ENV: &str = "TACNODE_PRECISION_BITS";
pub const DEFAULT_PRECISION_BITS: usize = 256;

/// Bits of working precision: [`PRECISION_ENV`] if set and valid, else 256.
pub fn default_precision_bits() -> usize {
    precision_override().unwrap_or(DEFAULT_PRECISION_BITS)
}

fn precision_override() -> Option<usize> {
    std::env::var(PRECISION_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok()).filter(|&b| b >= 64)
}

/// Working precision for `n` paths. The Gram condition number grows like
/// `10^{1.4 n}`, so past `n ≈ 24` the default is raised to `10 n` bits unless
/// [`PRECISION_ENV`] is set.
pub fn precision_for_paths(n: usize) -> usize {
    precision_override().unwrap_or(DEFAULT_PRECISION_BITS.max(10 * n))
}

/// Largest entry of `G⁻¹G - I` tolerated after factorization.
pub const SOLVE_CHECK_TOL: f64 = 1e-10;

/// Parameters of the four weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightSystem {
    pub a: f64,
    pub b: f64,
    pub temperature: f64,
    pub t: f64,
    pub n: usize,
    pub alpha: f64,
}

impl WeightSystem {
    pub fn new(a: f64, b: f64, temperature: f64, t: f64, n: usize, alpha: f64) -> Result<Self> {
        let ws = Self { a, b, temperature, t, n, alpha };
        ws.validate()?;
        Ok(ws)
    }

    pub fn validate(&self) -> Result<()> {
        let Self { a, b, temperature, t, n, alpha } = *self;
        if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
            return domain(format!("endpoints must be positive, got a={a}, b={b}"));
        }
        if !(temperature > 0.0 && temperature.is_finite()) {
            return domain(format!("temperature must be positive, got {temperature}"));
        }
        if !(t > 0.0 && t < 1.0) {
            return domain(format!("time must lie in (0, 1), got {t}"));
        }
        if n == 0 || n % 2 != 0 {
            return domain(format!("path count must be even and positive, got {n}"));
        }
        if !(alpha > -1.0 && alpha.is_finite()) {
            return domain(format!("alpha must exceed -1, got {alpha}"));
        }
        Ok(())
    }

    /// Size of the first block, `⌈n/2⌉`.
    pub fn n1(&self) -> usize {
        self.n.div_ceil(2)
    }

    pub fn n2(&self) -> usize {
        self.n - self.n1()
    }

    /// `n / (T t)` and `n / (T (1 - t))`.
    fn rates(&self) -> (f64, f64) {
        let n = self.n as f64;
        (n / (self.temperature * self.t), n / (self.temperature * (1.0 - self.t)))
    }
}

/// `(w11, w12, w21, w22)` with the constant factors `e^{n a/(T t)}` and
/// `e^{n b/(T (1-t))}` removed. Those factors cancel in the kernel.
fn scaled_weights(ws: &WeightSystem, x: f64) -> [f64; 4] {
    let (r1, r2) = ws.rates();
    let al = ws.alpha;
    let y = x.sqrt();
    let (sa, sb) = (ws.a.sqrt(), ws.b.sqrt());
    let z1 = 2.0 * r1 * sa * y;
    let z2 = 2.0 * r2 * sb * y;
    let e1 = (-r1 * (y - sa).powi(2)).exp();
    let e2 = (-r2 * (y - sb).powi(2)).exp();
    let ln_x = x.ln();
    [
        (0.5 * al * ln_x).exp() * e1 * scaled_unchecked(al, z1),
        (0.5 * (al + 1.0) * ln_x).exp() * e1 * scaled_unchecked(al + 1.0, z1),
        (-0.5 * al * ln_x).exp() * e2 * scaled_unchecked(al, z2),
        (-0.5 * (al - 1.0) * ln_x).exp() * e2 * scaled_lowered(al, z2),
    ]
}

/// The four weights `(w11, w12, w21, w22)` at `x > 0`.
///
/// For `alpha` in `(-1, 0)` the last weight carries a Bessel function of
/// order below `-1` and is negative near the origin.
pub fn eval_weights(ws: &WeightSystem, x: f64) -> Result<[f64; 4]> {
    ws.validate()?;
    if !(x > 0.0 && x.is_finite()) {
        return domain(format!("weights need x > 0, got {x}"));
    }
    let (r1, r2) = ws.rates();
    let s = scaled_weights(ws, x);
    let (g1, g2) = ((r1 * ws.a).exp(), (r2 * ws.b).exp());
    Ok([s[0] * g1, s[1] * g1, s[2] * g2, s[3] * g2])
}

/// Leading small-`x` behaviour of `w11`, without the exponential factor.
pub fn w11_leading(ws: &WeightSystem, x: f64) -> f64 {
    let (r1, _) = ws.rates();
    x.powf(ws.alpha) * (r1 * ws.a.sqrt()).powf(ws.alpha) / gamma(ws.alpha + 1.0)
}

/// Numerical settings of [`build_model`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Gauss nodes per quadrature panel.
    pub quad_size: usize,
    /// Upper integration limit; chosen from the weights when `None`.
    pub x_cut: Option<f64>,
    pub precision_bits: usize,
}

impl ModelConfig {
    pub fn for_paths(n: usize) -> Self {
        Self { quad_size: (4 * n).max(40), x_cut: None, precision_bits: precision_for_paths(n) }
    }
}

/// Log-magnitude drop that defines the end of the weights' support.
const SUPPORT_DROP: f64 = 90.0;
/// Ratio between consecutive graded panels near the origin.
const GRADING: f64 = 0.2;
const MAX_GRADED: usize = 80;

/// Point beyond which every Gram integrand is below `e^{-90}` of its peak.
pub fn support_cutoff(ws: &WeightSystem) -> f64 {
    let env = |x: f64| {
        let w = scaled_weights(ws, x);
        let l = w[0].abs().max(w[1].abs());
        let r = w[2].abs().max(w[3].abs());
        (l * r).ln()
    };
    let start = ws.a.max(ws.b);
    let mut peak = f64::NEG_INFINITY;
    let mut x = 1e-3 * start;
    while x < start {
        peak = peak.max(env(x));
        x *= 1.05;
    }
    x = start;
    loop {
        let e = env(x);
        peak = peak.max(e);
        if x > 2.0 * start && (e < peak - SUPPORT_DROP || !e.is_finite()) {
            return x;
        }
        x *= 1.05;
    }
}

/// Panel edges in `y = √x`: geometric towards the origin, uniform beyond.
fn panel_edges(ws: &WeightSystem, x_cut: f64) -> Vec<f64> {
    let y_cut = x_cut.sqrt();
    let (r1, r2) = ws.rates();
    // Gaussian widths of the weights in the y variable
    let width = (0.5 / r1).sqrt().min((0.5 / r2).sqrt()).min(y_cut / 8.0);
    let y0 = width.min(0.1);
    // integrands behave like y^(2 alpha + 1) at the origin
    let target = -18.0 * std::f64::consts::LN_10 / (2.0 * ws.alpha + 2.0);
    let levels = (((target - y0.ln()) / GRADING.ln()).ceil().max(1.0) as usize).min(MAX_GRADED);
    let mut edges = vec![0.0];
    for k in (0..=levels).rev() {
        edges.push(y0 * GRADING.powi(k as i32));
    }
    let uniform = ((y_cut - y0) / width).ceil().max(1.0) as usize;
    let h = (y_cut - y0) / uniform as f64;
    for k in 1..=uniform {
        edges.push(y0 + h * k as f64);
    }
    edges
}

/// Composite Gauss rule for `∫_0^{x_cut} F(x) dx`, built in `y = √x` with
/// geometrically graded panels at the origin. Returns `(x, weight)` pairs.
pub fn quadrature_rule(ws: &WeightSystem, quad_size: usize, x_cut: f64) -> Vec<(f64, f64)> {
    let (gx, gw) = quadrature::gauss_legendre(quad_size);
    let edges = panel_edges(ws, x_cut);
    let mut rule = Vec::with_capacity(quad_size * (edges.len() - 1));
    for pair in edges.windows(2) {
        let (mid, half) = (0.5 * (pair[0] + pair[1]), 0.5 * (pair[1] - pair[0]));
        for (x, w) in gx.iter().zip(&gw) {
            let y = mid + half * x;
            rule.push((y * y, 2.0 * y * half * w));
        }
    }
    rule
}

/// Legendre nodes polished by Newton's method to `bits` bits.
fn legendre_nodes(n: usize, bits: usize) -> Vec<FBig> {
    let (rough, _) = quadrature::gauss_legendre(n);
    let one = big(1.0, bits);
    let sweeps = (bits as f64 / 50.0).log2().ceil().max(0.0) as usize + 2;
    let polish = |x0: f64| {
        let mut x = big(x0, bits);
        for _ in 0..sweeps {
            let (mut p0, mut p1) = (one.clone(), x.clone());
            for k in 2..=n {
                let kb = big(k as f64, bits);
                let p2 = (big(2.0 * k as f64 - 1.0, bits) * &x * &p1 - big(k as f64 - 1.0, bits) * &p0) / &kb;
                p0 = p1;
                p1 = p2;
            }
            let dp = big(n as f64, bits) * (&x * &p1 - &p0) / (&x * &x - &one);
            x = &x - &p1 / &dp;
        }
        x
    };
    // odd and even n both give the rule symmetric about zero
    let upper: Vec<FBig> = rough[n / 2..].par_iter().map(|&x| if x == 0.0 { big(0.0, bits) } else { polish(x) }).collect();
    let mut nodes: Vec<FBig> = upper.iter().rev().take(n / 2).map(|x| -x).collect();
    nodes.extend(upper);
    nodes
}

/// One quadrature node: exact abscissa, its rounded value, and the weight.
#[derive(Debug, Clone)]
struct Node {
    x: FBig,
    xf: f64,
    w: f64,
}

/// The rule of [`quadrature_rule`] with abscissae carried at `bits` bits.
///
/// Moving a node shifts mass, which the projection is sensitive to, while
/// rounding a weight only reweights the measure, which it is not.
fn exact_rule(ws: &WeightSystem, quad_size: usize, x_cut: f64, bits: usize) -> Vec<Node> {
    let (gx, gw) = quadrature::gauss_legendre(quad_size);
    let ex = legendre_nodes(quad_size, bits);
    let edges = panel_edges(ws, x_cut);
    let mut rule = Vec::with_capacity(quad_size * (edges.len() - 1));
    for pair in edges.windows(2) {
        let (mid, half) = (0.5 * (pair[0] + pair[1]), 0.5 * (pair[1] - pair[0]));
        let (midb, halfb) = (big(pair[0], bits) + big(pair[1], bits), big(pair[1], bits) - big(pair[0], bits));
        for ((x, w), xb) in gx.iter().zip(&gw).zip(&ex) {
            let y = mid + half * x;
            let yb = (&midb + &halfb * xb) / big(2.0, bits);
            let x = &yb * &yb;
            rule.push(Node { xf: small(&x), x, w: 2.0 * y * half * w });
        }
    }
    rule
}

/// Basis evaluation in extended precision.
///
/// Each weight is split into a factor shared by its whole block side
/// (`x^α e^{-n x/(T t)}` on the left, `e^{-n x/(T(1-t))}` on the right) and a
/// Bessel power series. Only the shared factors are rounded to double
/// precision; they act as a reweighting of the measure, which leaves the
/// projection unchanged. Series and polynomials are summed with `bits` bits,
/// since the two blocks of each side are nearly dependent and independent
/// rounding of each value would destroy the information in their difference.
#[derive(Debug, Clone, Copy)]
struct Basis {
    ws: WeightSystem,
    x_cut: f64,
    bits: usize,
    q1: f64,
    q2: f64,
}

impl Basis {
    fn new(ws: &WeightSystem, x_cut: f64, bits: usize) -> Self {
        let (r1, r2) = ws.rates();
        Self { ws: *ws, x_cut, bits, q1: r1 * r1 * ws.a, q2: r2 * r2 * ws.b }
    }

    /// `Σ_k (q x)^k / (k! (ν+1)_k)`, which is `Γ(ν+1) (√(qx))^{-ν} I_ν(2√(qx))`.
    fn series(&self, nu: f64, q: f64, x: &FBig, xf: f64) -> FBig {
        let bits = self.bits;
        let yb = big(q, bits) * x;
        let y = q * xf;
        let nub = big(nu, bits);
        let (mut term, mut sum) = (big(1.0, bits), big(1.0, bits));
        let (mut ln_term, mut ln_max) = (0.0f64, 0.0f64);
        let cutoff = (bits as f64 + 10.0) * std::f64::consts::LN_2;
        let peak = y.sqrt();
        let mut k = 1.0f64;
        loop {
            let kb = big(k, bits);
            term = &term * &yb / (&kb * (&nub + &kb));
            sum = &sum + &term;
            ln_term += y.ln() - k.ln() - (nu + k).ln();
            ln_max = ln_max.max(ln_term);
            if k > peak && ln_term < ln_max - cutoff {
                return sum;
            }
            k += 1.0;
        }
    }

    /// `e^{ln_value}` as an exact power of two times a double.
    fn shared(&self, ln_value: f64) -> FBig {
        let m = (ln_value / std::f64::consts::LN_2).floor();
        let rest = (ln_value - m * std::f64::consts::LN_2).exp();
        big(rest, self.bits) << (m as isize)
    }

    fn chebyshev(&self, m: usize, x: &FBig) -> Vec<FBig> {
        let bits = self.bits;
        let s = (x * big(2.0, bits) - big(self.x_cut, bits)) / big(self.x_cut, bits);
        let two_s = &s * big(2.0, bits);
        let mut out: Vec<FBig> = Vec::with_capacity(m);
        for k in 0..m {
            let next = match k {
                0 => big(1.0, bits),
                1 => s.clone(),
                _ => &two_s * &out[k - 1] - &out[k - 2],
            };
            out.push(next);
        }
        out
    }

    /// Left functions `f_i(x)`, block order.
    fn left(&self, x: &FBig, xf: f64) -> Vec<FBig> {
        let (r1, _) = self.ws.rates();
        let al = self.ws.alpha;
        let c = self.shared(al * xf.ln() - r1 * xf);
        let first = &c * self.series(al, self.q1, x, xf);
        let second = &c * x * self.series(al + 1.0, self.q1, x, xf);
        let (n1, n2) = (self.ws.n1(), self.ws.n2());
        let p = self.chebyshev(n1.max(n2), x);
        p[..n1].iter().map(|t| t * &first).chain(p[..n2].iter().map(|t| t * &second)).collect()
    }

    /// Right functions `g_j(x)`, block order. The second block uses
    /// `I_{α-1} = I_{α+1} + (2α/z) I_α`, which in series form reads
    /// `α S_α + q x S_{α+1} / (α+1)` up to a constant.
    fn right(&self, x: &FBig, xf: f64) -> Vec<FBig> {
        let (_, r2) = self.ws.rates();
        let al = self.ws.alpha;
        let bits = self.bits;
        let c = self.shared(-r2 * xf);
        let s0 = self.series(al, self.q2, x, xf);
        let s1 = self.series(al + 1.0, self.q2, x, xf);
        let first = &c * &s0;
        let second = &c * (big(al, bits) * &s0 + big(self.q2, bits) * x * s1 / big(al + 1.0, bits));
        let (n1, n2) = (self.ws.n1(), self.ws.n2());
        let p = self.chebyshev(n1.max(n2), x);
        p[..n1].iter().map(|t| t * &first).chain(p[..n2].iter().map(|t| t * &second)).collect()
    }
}

fn big(x: f64, bits: usize) -> FBig {
    FBig::try_from(x).expect("finite value").with_precision(bits).value()
}

fn small(x: &FBig) -> f64 {
    x.to_f64().value()
}

/// LU factors with partial pivoting, stored in place.
#[derive(Debug, Clone)]
struct BigLu {
    lu: Vec<Vec<FBig>>,
    perm: Vec<usize>,
    bits: usize,
}

impl BigLu {
    /// Factors `m`, returning the factors and the pivot ratio.
    fn factor(mut m: Vec<Vec<FBig>>, bits: usize) -> Result<(Self, f64)> {
        let n = m.len();
        let mut perm: Vec<usize> = (0..n).collect();
        let (mut largest, mut smallest) = (0.0f64, f64::INFINITY);
        for k in 0..n {
            let p = (k..n).max_by(|&i, &j| small(&m[i][k]).abs().total_cmp(&small(&m[j][k]).abs())).unwrap();
            let pivot = small(&m[p][k]).abs();
            if pivot == 0.0 {
                return Err(Error::SingularGram { condition: f64::INFINITY });
            }
            largest = largest.max(pivot);
            smallest = smallest.min(pivot);
            m.swap(k, p);
            perm.swap(k, p);
            let (head, tail) = m.split_at_mut(k + 1);
            let row_k = &head[k];
            tail.par_iter_mut().for_each(|row| {
                let factor = &row[k] / &row_k[k];
                for j in k + 1..n {
                    row[j] = &row[j] - &factor * &row_k[j];
                }
                row[k] = factor;
            });
        }
        Ok((Self { lu: m, perm, bits }, largest / smallest))
    }

    fn solve(&self, rhs: &[FBig]) -> Vec<FBig> {
        let n = self.lu.len();
        let mut z: Vec<FBig> = self.perm.iter().map(|&i| rhs[i].clone()).collect();
        for i in 0..n {
            for j in 0..i {
                z[i] = &z[i] - &self.lu[i][j] * &z[j];
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                z[i] = &z[i] - &self.lu[i][j] * &z[j];
            }
            z[i] = &z[i] / &self.lu[i][i];
        }
        z
    }
}

/// The projection kernel of one weight system, ready for evaluation.
#[derive(Debug, Clone)]
pub struct BiorthogonalModel {
    basis: Basis,
    rule: Vec<(f64, f64)>,
    factors: BigLu,
    condition: f64,
    solve_error: f64,
}

/// Assembles the Gram matrix `G_ij = ∫ f_i g_j` in extended precision and
/// factors it.
pub fn build_model(ws: &WeightSystem, cfg: &ModelConfig) -> Result<BiorthogonalModel> {
    ws.validate()?;
    if cfg.quad_size < 4 * ws.n {
        return domain(format!("quad_size must be at least 4n = {}, got {}", 4 * ws.n, cfg.quad_size));
    }
    if cfg.precision_bits < 64 {
        return domain(format!("precision must be at least 64 bits, got {}", cfg.precision_bits));
    }
    let x_cut = match cfg.x_cut {
        Some(x) if x > 0.0 && x.is_finite() => x,
        Some(x) => return domain(format!("x_cut must be positive, got {x}")),
        None => support_cutoff(ws),
    };
    let bits = cfg.precision_bits;
    let nodes = exact_rule(ws, cfg.quad_size, x_cut, bits);
    let basis = Basis::new(ws, x_cut, bits);
    let values: Vec<(Vec<FBig>, Vec<FBig>)> = nodes
        .par_iter()
        .map(|nd| {
            let wb = big(nd.w, bits);
            (basis.left(&nd.x, nd.xf).iter().map(|v| v * &wb).collect(), basis.right(&nd.x, nd.xf))
        })
        .collect();
    let rule = nodes.iter().map(|nd| (nd.xf, nd.w)).collect();
    let n = ws.n;
    let gram: Vec<Vec<FBig>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .map(|j| values.iter().fold(big(0.0, bits), |acc, (f, g)| acc + &f[i] * &g[j]))
                .collect()
        })
        .collect();
    let (factors, condition) = BigLu::factor(gram.clone(), bits)?;
    // the pivot ratio underestimates the true condition number, so the
    // factorization is also checked against the matrix it came from
    let solve_error = (0..n)
        .into_par_iter()
        .map(|j| {
            let col: Vec<FBig> = gram.iter().map(|row| row[j].clone()).collect();
            let z = factors.solve(&col);
            z.iter().enumerate().fold(0.0f64, |m, (i, zi)| m.max((small(zi) - if i == j { 1.0 } else { 0.0 }).abs()))
        })
        .reduce(|| 0.0, f64::max);
    if !(solve_error < SOLVE_CHECK_TOL) {
        return Err(Error::SingularGram { condition });
    }
    Ok(BiorthogonalModel { basis, rule, factors, condition, solve_error })
}

impl BiorthogonalModel {
    pub fn weights(&self) -> &WeightSystem {
        &self.basis.ws
    }

    pub fn x_cut(&self) -> f64 {
        self.basis.x_cut
    }

    /// Quadrature rule the Gram matrix was assembled with.
    pub fn rule(&self) -> &[(f64, f64)] {
        &self.rule
    }

    /// Ratio of the largest to the smallest pivot of the factorization.
    pub fn condition(&self) -> f64 {
        self.condition
    }

    /// Largest entry of `G⁻¹G - I` as computed from the stored factors.
    pub fn solve_error(&self) -> f64 {
        self.solve_error
    }

    pub fn precision_bits(&self) -> usize {
        self.factors.bits
    }

    /// `K_n(x, y) = Σ f_i(x) (G⁻¹)_ji g_j(y)`.
    pub fn kernel(&self, x: f64, y: f64) -> Result<f64> {
        if !(x > 0.0 && y > 0.0 && x.is_finite() && y.is_finite()) {
            return domain(format!("kernel arguments must be positive, got ({x}, {y})"));
        }
        let bits = self.factors.bits;
        let z = self.factors.solve(&self.basis.left(&big(x, bits), x));
        let g = self.basis.right(&big(y, bits), y);
        let acc = g.iter().zip(&z).fold(big(0.0, self.factors.bits), |acc, (gj, zj)| acc + gj * zj);
        Ok(small(&acc))
    }

    /// `[K_n(x_i, x_j)]`.
    pub fn matrix(&self, points: &[f64]) -> Result<nalgebra::DMatrix<f64>> {
        let rows: Vec<Vec<f64>> =
            points.par_iter().map(|&x| points.iter().map(|&y| self.kernel(x, y)).collect::<Result<_>>()).collect::<Result<_>>()?;
        Ok(nalgebra::DMatrix::from_fn(points.len(), points.len(), |i, j| rows[i][j]))
    }
}

pub fn finite_kernel(model: &BiorthogonalModel, x: f64, y: f64) -> Result<f64> {
    model.kernel(x, y)
}

/// Inputs of the finite-n versus limit comparison. `a`, `b` are the base
/// endpoints with `ab = 1/4`; `l1`, `l2` shift them with `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingSetup {
    pub a: f64,
    pub b: f64,
    pub alpha: f64,
    pub n: usize,
    pub k_shift: f64,
    pub l: f64,
    pub l1: f64,
    pub l2: f64,
}

impl ScalingSetup {
    pub fn new(n: usize, k_shift: f64, l: f64) -> Self {
        Self { a: 0.5, b: 0.5, alpha: 0.25, n, k_shift, l, l1: 0.0, l2: 0.0 }
    }

    /// Limit parameters. The endpoint shifts enter `s*` only.
    pub fn params(&self) -> Result<ScalingParams> {
        scaling_params(self.a, self.b, self.k_shift, self.l, self.l1, self.l2)
    }

    /// Weight system at this `n`, with time, temperature and endpoints tuned.
    pub fn weight_system(&self) -> Result<WeightSystem> {
        let n = self.n as f64;
        let t = t_star(self.a, self.b)? + self.k_shift * n.powf(-1.0 / 3.0);
        let temperature = 1.0 + self.l * n.powf(-2.0 / 3.0);
        let a = self.a * (1.0 + 2.0 * self.l1 * n.powf(-2.0 / 3.0));
        let b = self.b * (1.0 + 2.0 * self.l2 * n.powf(-2.0 / 3.0));
        WeightSystem::new(a, b, temperature, t, self.n, self.alpha)
    }

    /// Spatial magnification `κ² n^{4/3}`.
    pub fn magnification(&self) -> Result<f64> {
        Ok(self.params()?.kappa.powi(2) * (self.n as f64).powf(4.0 / 3.0))
    }

    /// Tacnode kernel at `(s*, τ*)` with `ν = α + 1/2`.
    pub fn limit_kernel(&self) -> Result<TacnodeKernel> {
        let p = self.params()?;
        let nu = self.alpha + 0.5;
        let sol = solve_hastings_mcleod(&PIIConfig::new(nu))?;
        let entries = entries_from_pii(&sol, p.s_star, p.tau_star)?;
        TacnodeKernel::new(&MParams::new(nu, p.s_star, p.tau_star)?, &entries, SolveConfig::default())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub u: f64,
    pub v: f64,
    pub finite: f64,
    pub limit: f64,
    pub reldev: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub setup: ScalingSetup,
    pub params: ScalingParams,
    pub weights: WeightSystem,
    pub condition: f64,
    pub rows: Vec<ScalingRow>,
}

impl ScalingReport {
    pub fn max_reldev(&self) -> f64 {
        self.rows.iter().fold(0.0, |m, r| m.max(r.reldev))
    }
}

/// Rescaled finite-n kernel against `u^{α/2} v^{-α/2} K^tacnode(u, v)` on
/// `grid`, reusing a prepared limit kernel.
pub fn scaling_compare_with(setup: &ScalingSetup, grid: &[(f64, f64)], cfg: &ModelConfig, limit: &TacnodeKernel) -> Result<ScalingReport> {
    let ws = setup.weight_system()?;
    let model = build_model(&ws, cfg)?;
    let c = setup.magnification()?;
    let al = setup.alpha;
    let rows = grid
        .par_iter()
        .map(|&(u, v)| {
            let finite = model.kernel(u / c, v / c)? / c;
            let limit = (u / v).powf(0.5 * al) * limit.kernel(u, v)?.value;
            Ok(ScalingRow { u, v, finite, limit, reldev: (finite - limit).abs() / limit.abs() })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ScalingReport { setup: *setup, params: setup.params()?, weights: ws, condition: model.condition(), rows })
}

pub fn scaling_compare(setup: &ScalingSetup, grid: &[(f64, f64)], cfg: &ModelConfig) -> Result<ScalingReport> {
    scaling_compare_with(setup, grid, cfg, &setup.limit_kernel()?)
}

#[cfg(test)]
mod tests;
