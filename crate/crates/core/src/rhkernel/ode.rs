//! Adaptive Dormand-Prince 5(4) for `y' = f(t, y)` with `y` a complex
//! 4-vector and `t` real (it may decrease).

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type State = [Complex64; 4];

#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub rtol: f64,
    pub atol: f64,
    /// Smallest step accepted before giving up.
    pub floor: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self { rtol: 1e-12, atol: 1e-14, floor: 1e-12 }
    }
}

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// fifth-order weights minus embedded fourth-order weights
const E: [f64; 7] = [
    35.0 / 384.0 - 5179.0 / 57600.0,
    0.0,
    500.0 / 1113.0 - 7571.0 / 16695.0,
    125.0 / 192.0 - 393.0 / 640.0,
    -2187.0 / 6784.0 + 92097.0 / 339200.0,
    11.0 / 84.0 - 187.0 / 2100.0,
    -1.0 / 40.0,
];

fn axpy(y: &State, h: f64, ks: &[State], coeffs: &[f64]) -> State {
    let mut out = *y;
    for (k, &a) in ks.iter().zip(coeffs) {
        if a != 0.0 {
            for i in 0..4 {
                out[i] += k[i] * (h * a);
            }
        }
    }
    out
}

/// Integrate from `t0` to `t1`. Returns the final state and the number of
/// accepted steps.
pub fn integrate(f: impl Fn(f64, &State) -> State, t0: f64, t1: f64, y0: State, tol: Tolerance) -> Result<(State, usize)> {
    let span = t1 - t0;
    if span == 0.0 {
        return Ok((y0, 0));
    }
    let dir = span.signum();
    let mut t = t0;
    let mut y = y0;
    let mut h = dir * span.abs().min(0.05);
    let mut ks = [[Complex64::new(0.0, 0.0); 4]; 7];
    ks[0] = f(t, &y);
    let mut steps = 0;
    while (t1 - t) * dir > 0.0 {
        if (t + h - t1) * dir > 0.0 {
            h = t1 - t;
        }
        for stage in 1..7 {
            let ys = axpy(&y, h, &ks[..stage], &A[stage][..stage]);
            ks[stage] = f(t + C[stage] * h, &ys);
        }
        let y_new = axpy(&y, h, &ks[..6], &A[6][..6]);
        let mut err = 0.0f64;
        for i in 0..4 {
            let e: Complex64 = (0..7).map(|s| ks[s][i] * E[s]).sum::<Complex64>() * h;
            let scale = tol.atol + tol.rtol * y[i].norm().max(y_new[i].norm());
            err = err.max(e.norm() / scale);
        }
        if err <= 1.0 {
            t += h;
            y = y_new;
            ks[0] = ks[6];
            steps += 1;
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= factor;
        if h.abs() < tol.floor && (t1 - t).abs() > tol.floor {
            return Err(Error::Stiffness { step: h.abs(), at: t });
        }
    }
    Ok((y, steps))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rotation_is_exact() {
        // y' = i y on each component, plus coupling that keeps the norm
        let f = |_t: f64, y: &State| [y[0] * Complex64::i(), y[1] * -2.0, y[3], -y[2]];
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        let (y, _) = integrate(f, 0.0, 3.0, [one, one, one, zero], Tolerance::default()).unwrap();
        assert!((y[0] - Complex64::from_polar(1.0, 3.0)).norm() < 1e-11);
        assert!((y[1] - (-6.0f64).exp()).norm() < 1e-13);
        assert!((y[2] - 3f64.cos()).norm() < 1e-11);
        assert!((y[3] + 3f64.sin()).norm() < 1e-11);
    }

    #[test]
    fn backwards_in_time() {
        let f = |t: f64, y: &State| [y[0] * t, y[1], y[2], y[3]];
        let one = Complex64::new(1.0, 0.0);
        let (y, _) = integrate(f, 2.0, 0.0, [one; 4], Tolerance::default()).unwrap();
        assert!((y[0] - (-2.0f64).exp()).norm() < 1e-12);
    }
}
