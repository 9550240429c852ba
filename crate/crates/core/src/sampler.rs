//! Metropolis sampler for `n` non-intersecting squared Bessel bridges.
//!
//! Paths leave `a` at rescaled time 0 and arrive at `b` at time 1, observed
//! on `m + 1` equally spaced slices. Neighbouring slices are linked by the
//! transition density over diffusion time `T / (2 n m)`, and interior sites
//! are constrained to stay strictly ordered within each slice.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{domain, Result};
use crate::special::{ln_density_unchecked, rescale_time};

pub const TARGET_ACCEPTANCE: f64 = 0.3;
pub const DEFAULT_BURN_IN: usize = 10_000;
pub const DEFAULT_THIN: usize = 10;
pub const DEFAULT_ALPHA: f64 = 0.0;
/// Quantile levels reported by [`summarize`].
pub const QUANTILE_LEVELS: [f64; 7] = [0.01, 0.05, 0.25, 0.5, 0.75, 0.95, 0.99];

const TUNE_WINDOW: u64 = 25;
const INITIAL_STEP: f64 = 0.05;
const STEP_RANGE: (f64, f64) = (1e-6, 4.0);

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct AcceptanceStats {
    pub sweeps: u64,
    pub proposed: u64,
    pub accepted: u64,
}

impl AcceptanceStats {
    pub fn rate(&self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }
}

/// Burn-in length, production length and thinning for [`PathEnsemble::run`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainConfig {
    pub burn_in: usize,
    pub sweeps: usize,
    pub thin: usize,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self { burn_in: DEFAULT_BURN_IN, sweeps: DEFAULT_BURN_IN, thin: DEFAULT_THIN }
    }
}

#[derive(Debug, Clone)]
pub struct PathEnsemble {
    pub n: usize,
    pub m: usize,
    pub a: f64,
    pub b: f64,
    pub temperature: f64,
    pub alpha: f64,
    pub seed: u64,
    tau: f64,
    /// Row-major, path `i` occupies `x[i (m+1) .. (i+1)(m+1)]`.
    x: Vec<f64>,
    /// Log transition density between slices `j` and `j + 1` of each path.
    bonds: Vec<f64>,
    steps: Vec<f64>,
    window: Vec<(u64, u64)>,
    tuning: bool,
    rng: ChaCha8Rng,
    /// Counts during burn-in (tuning on).
    pub burn_in: AcceptanceStats,
    /// Counts once the step sizes are frozen.
    pub production: AcceptanceStats,
    samples: Vec<f64>,
}

/// Ordered, fanned-out straight lines from `a` to `b` with the default
/// order [`DEFAULT_ALPHA`].
pub fn init_ensemble(n: usize, m: usize, a: f64, b: f64, temperature: f64, seed: u64) -> Result<PathEnsemble> {
    PathEnsemble::new(n, m, a, b, temperature, DEFAULT_ALPHA, seed)
}

impl PathEnsemble {
    pub fn new(n: usize, m: usize, a: f64, b: f64, temperature: f64, alpha: f64, seed: u64) -> Result<Self> {
        if n == 0 || m < 2 {
            return domain(format!("need n >= 1 paths and m >= 2 slices, got n={n}, m={m}"));
        }
        if !(a >= 0.0 && a.is_finite()) || !(b > 0.0 && b.is_finite()) {
            return domain(format!("need a >= 0 and b > 0, got a={a}, b={b}"));
        }
        if !(alpha > -1.0 && alpha.is_finite()) {
            return domain(format!("alpha must exceed -1, got {alpha}"));
        }
        let tau = rescale_time(temperature, n, 1.0 / m as f64)?;
        let mut x = vec![0.0; n * (m + 1)];
        let stride = m + 1;
        for i in 0..n {
            // fan-out in (-1/2, 1/2), widest at mid-time
            let offset = (i as f64 + 1.0) / (n as f64 + 1.0) - 0.5;
            x[i * stride] = a;
            x[i * stride + m] = b;
            for j in 1..m {
                let t = j as f64 / m as f64;
                let line = (1.0 - t) * a + t * b;
                x[i * stride + j] = line * (1.0 + offset * (std::f64::consts::PI * t).sin());
            }
        }
        let mut ens = Self {
            n,
            m,
            a,
            b,
            temperature,
            alpha,
            seed,
            tau,
            x,
            bonds: vec![0.0; n * m],
            steps: vec![INITIAL_STEP; n],
            window: vec![(0, 0); n],
            tuning: true,
            rng: ChaCha8Rng::seed_from_u64(seed),
            burn_in: AcceptanceStats::default(),
            production: AcceptanceStats::default(),
            samples: Vec::new(),
        };
        for i in 0..n {
            for j in 0..m {
                ens.bonds[i * m + j] = ens.ln_bond(ens.at(i, j), ens.at(i, j + 1));
            }
        }
        Ok(ens)
    }

    fn ln_bond(&self, from: f64, to: f64) -> f64 {
        ln_density_unchecked(self.alpha, self.tau, from, to)
    }

    pub fn at(&self, path: usize, slice: usize) -> f64 {
        self.x[path * (self.m + 1) + slice]
    }

    pub fn path(&self, i: usize) -> &[f64] {
        &self.x[i * (self.m + 1)..(i + 1) * (self.m + 1)]
    }

    pub fn slice(&self, j: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.at(i, j)).collect()
    }

    /// Rescaled time of slice `j`.
    pub fn time(&self, j: usize) -> f64 {
        j as f64 / self.m as f64
    }

    /// Diffusion time between neighbouring slices.
    pub fn slice_tau(&self) -> f64 {
        self.tau
    }

    pub fn steps(&self) -> &[f64] {
        &self.steps
    }

    pub fn is_tuning(&self) -> bool {
        self.tuning
    }

    /// Stop adapting step sizes.
    pub fn freeze(&mut self) {
        self.tuning = false;
    }

    /// Positivity, strict ordering inside and pinning at both ends.
    pub fn is_valid(&self) -> bool {
        (0..self.n).all(|i| self.at(i, 0) == self.a && self.at(i, self.m) == self.b)
            && (1..self.m).all(|j| {
                (0..self.n).all(|i| self.at(i, j) > 0.0 && self.at(i, j).is_finite())
                    && (1..self.n).all(|i| self.at(i - 1, j) < self.at(i, j))
            })
    }

    /// Store the current configuration as a retained sample.
    pub fn record(&mut self) {
        self.samples.extend_from_slice(&self.x);
    }

    pub fn retained(&self) -> usize {
        self.samples.len() / self.x.len()
    }

    /// Position of path `i` at slice `j` in retained sample `k`.
    pub fn sample_at(&self, k: usize, i: usize, j: usize) -> f64 {
        self.samples[k * self.x.len() + i * (self.m + 1) + j]
    }

    /// Burn in with tuning, freeze, then run the production sweeps and keep
    /// every `thin`-th configuration. Returns the production acceptance rate.
    pub fn run(&mut self, cfg: &ChainConfig) -> Result<f64> {
        if cfg.thin == 0 {
            return domain("thinning must be at least 1");
        }
        for _ in 0..cfg.burn_in {
            mcmc_sweep(self);
        }
        self.freeze();
        for s in 1..=cfg.sweeps {
            mcmc_sweep(self);
            if s % cfg.thin == 0 {
                self.record();
            }
        }
        Ok(self.production.rate())
    }

    fn retune(&mut self) {
        for (step, win) in self.steps.iter_mut().zip(&mut self.window) {
            if win.0 > 0 {
                let rate = win.1 as f64 / win.0 as f64;
                *step = (*step * (2.0 * (rate - TARGET_ACCEPTANCE)).exp()).clamp(STEP_RANGE.0, STEP_RANGE.1);
            }
            *win = (0, 0);
        }
    }
}

/// One Metropolis pass over every interior site, slice by slice. Returns the
/// fraction of accepted proposals.
pub fn mcmc_sweep(ens: &mut PathEnsemble) -> f64 {
    let (n, m) = (ens.n, ens.m);
    let stride = m + 1;
    let mut accepted = 0u64;
    for j in 1..m {
        for i in 0..n {
            let k = i * stride + j;
            let old = ens.x[k];
            let xi: f64 = ens.rng.sample(StandardNormal);
            let new = old * (ens.steps[i] * xi).exp();
            ens.window[i].0 += 1;
            let lower = if i > 0 { ens.x[k - stride] } else { 0.0 };
            let upper = if i + 1 < n { ens.x[k + stride] } else { f64::INFINITY };
            if !(new > lower && new < upper) {
                continue;
            }
            let left = ens.ln_bond(ens.x[k - 1], new);
            let right = ens.ln_bond(new, ens.x[k + 1]);
            let (bl, br) = (i * m + j - 1, i * m + j);
            // the log-normal proposal is not symmetric: q(x|x')/q(x'|x) = x'/x
            let log_ratio = left + right - ens.bonds[bl] - ens.bonds[br] + (new / old).ln();
            if log_ratio >= 0.0 || ens.rng.random::<f64>().ln() < log_ratio {
                ens.x[k] = new;
                ens.bonds[bl] = left;
                ens.bonds[br] = right;
                ens.window[i].1 += 1;
                accepted += 1;
            }
        }
    }
    let proposed = (n * (m - 1)) as u64;
    let stats = if ens.tuning { &mut ens.burn_in } else { &mut ens.production };
    stats.sweeps += 1;
    stats.proposed += proposed;
    stats.accepted += accepted;
    if ens.tuning && stats.sweeps % TUNE_WINDOW == 0 {
        ens.retune();
    }
    accepted as f64 / proposed as f64
}

/// Run independent chains in parallel.
pub fn run_chains(chains: &mut [PathEnsemble], cfg: &ChainConfig) -> Result<Vec<f64>> {
    chains.par_iter_mut().map(|c| c.run(cfg)).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct SliceSummary {
    pub slice: usize,
    pub t: f64,
    pub samples: usize,
    pub min: f64,
    pub max: f64,
    /// Mean position of the `i`-th lowest path.
    pub mean_order: Vec<f64>,
    pub quantiles: Vec<(f64, f64)>,
    #[serde(skip)]
    values: Vec<f64>,
}

impl SliceSummary {
    /// Empirical quantile of all positions on the slice.
    pub fn quantile(&self, level: f64) -> f64 {
        let k = ((level * self.values.len() as f64).ceil() as usize).clamp(1, self.values.len());
        self.values[k - 1]
    }

    pub fn fraction_within(&self, lo: f64, hi: f64) -> f64 {
        let inside = self.values.iter().filter(|&&v| v >= lo && v <= hi).count();
        inside as f64 / self.values.len() as f64
    }
}

fn nearest_slice(ens: &PathEnsemble, t: f64) -> Result<usize> {
    if !(0.0..=1.0).contains(&t) {
        return domain(format!("query time must lie in [0, 1], got {t}"));
    }
    Ok((t * ens.m as f64).round() as usize)
}

/// Statistics of the slice nearest `t_query` over the retained samples, or
/// over the current state if none were kept.
pub fn summarize(ens: &PathEnsemble, t_query: f64) -> Result<SliceSummary> {
    let j = nearest_slice(ens, t_query)?;
    let count = ens.retained();
    let mut sums = vec![0.0; ens.n];
    let mut values = Vec::with_capacity(ens.n * count.max(1));
    if count == 0 {
        values.extend(ens.slice(j));
        sums.clone_from(&values);
    } else {
        for k in 0..count {
            for (i, s) in sums.iter_mut().enumerate() {
                let v = ens.sample_at(k, i, j);
                *s += v;
                values.push(v);
            }
        }
    }
    let samples = count.max(1);
    values.sort_by(f64::total_cmp);
    let mut out = SliceSummary {
        slice: j,
        t: ens.time(j),
        samples,
        min: values[0],
        max: values[values.len() - 1],
        mean_order: sums.iter().map(|s| s / samples as f64).collect(),
        quantiles: Vec::new(),
        values,
    };
    out.quantiles = QUANTILE_LEVELS.iter().map(|&l| (l, out.quantile(l))).collect();
    Ok(out)
}

/// Mean position of the lowest path at every slice.
pub fn lowest_profile(ens: &PathEnsemble) -> Vec<f64> {
    let count = ens.retained();
    (0..=ens.m)
        .map(|j| {
            if count == 0 {
                ens.at(0, j)
            } else {
                (0..count).map(|k| ens.sample_at(k, 0, j)).sum::<f64>() / count as f64
            }
        })
        .collect()
}

/// Time and height where the mean lowest path comes closest to the origin.
pub fn lowest_point(ens: &PathEnsemble) -> (f64, f64) {
    let profile = lowest_profile(ens);
    let (j, x) = profile
        .iter()
        .enumerate()
        .skip(1)
        .take(ens.m - 1)
        .fold((0, f64::INFINITY), |best, (j, &x)| if x < best.1 { (j, x) } else { best });
    (ens.time(j), x)
}
