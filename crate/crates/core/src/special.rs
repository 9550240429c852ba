//! Modified Bessel functions of the first kind and squared-Bessel transition
//! densities.
//!
//! The scaled function `e^{-z} I_a(z)` is the primitive everything else is
//! built on, so that products like `e^{-(x+y)/2t} I_a(sqrt(xy)/t)` never
//! overflow even when the Bessel argument is in the thousands.

use std::f64::consts::PI;

use crate::error::{domain, Result};

/// Order of a squared Bessel process, `alpha > -1`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct BesselOrder(f64);

impl BesselOrder {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > -1.0) || !alpha.is_finite() {
            return domain(format!("Bessel order must exceed -1, got {alpha}"));
        }
        Ok(Self(alpha))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Physical diffusion time together with the temperature/rescaled-time pair
/// it was derived from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffusionTime {
    pub tau: f64,
    pub temperature: f64,
    pub t: f64,
    pub n: usize,
}

impl DiffusionTime {
    pub fn from_rescaled(temperature: f64, n: usize, t: f64) -> Result<Self> {
        let tau = rescale_time(temperature, n, t)?;
        Ok(Self { tau, temperature, t, n })
    }
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Gamma function via the Lanczos approximation (g = 7), with reflection
/// below 1/2.
pub fn gamma(x: f64) -> f64 {
    if x < 0.5 {
        PI / ((PI * x).sin() * gamma(1.0 - x))
    } else {
        let x = x - 1.0;
        let mut acc = LANCZOS[0];
        let t = x + LANCZOS_G + 0.5;
        for (i, c) in LANCZOS.iter().enumerate().skip(1) {
            acc += c / (x + i as f64);
        }
        (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * acc
    }
}

/// Natural log of `|Gamma(x)|` for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        return gamma(x).abs().ln();
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    let t = x + LANCZOS_G + 0.5;
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Argument at which the evaluation switches from the power series to the
/// large-argument expansion.
pub fn crossover(order: f64) -> f64 {
    30.0 + 2.0 * order.abs()
}

/// `e^{-z} I_order(z)` from the power series. Every term is positive for
/// `order > -1`, so there is no cancellation.
pub fn scaled_series(order: f64, z: f64) -> f64 {
    if z == 0.0 {
        return if order == 0.0 {
            1.0
        } else if order > 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
    }
    let half = 0.5 * z;
    let lead = (order * half.ln() - ln_gamma(order + 1.0) - z).exp();
    let q = half * half;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    loop {
        term *= q / (k * (k + order));
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
        k += 1.0;
    }
    lead * sum
}

/// `e^{-z} I_order(z)` from the Hankel large-argument expansion, truncated at
/// its smallest term.
pub fn scaled_asymptotic(order: f64, z: f64) -> f64 {
    let mu = 4.0 * order * order;
    let mut term = 1.0_f64;
    let mut sum = 1.0;
    let mut k = 1.0_f64;
    loop {
        let next = -term * (mu - (2.0 * k - 1.0).powi(2)) / (8.0 * k * z);
        if next.abs() >= term.abs() || k > 200.0 {
            break;
        }
        term = next;
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
        k += 1.0;
    }
    sum / (2.0 * PI * z).sqrt()
}

/// `e^{-z} I_order(z)` without domain checks; `order` may be any real for
/// which the series converges with positive terms (`order > -1`).
pub(crate) fn scaled_unchecked(order: f64, z: f64) -> f64 {
    if z < crossover(order) {
        scaled_series(order, z)
    } else {
        scaled_asymptotic(order, z)
    }
}

fn check_args(order: f64, z: f64) -> Result<()> {
    if !(order > -1.0) {
        return domain(format!("Bessel order must exceed -1, got {order}"));
    }
    if !(z >= 0.0) {
        return domain(format!("Bessel argument must be nonnegative, got {z}"));
    }
    Ok(())
}

/// Exponentially scaled modified Bessel function `e^{-z} I_order(z)`.
pub fn bessel_i_scaled(order: f64, z: f64) -> Result<f64> {
    check_args(order, z)?;
    Ok(scaled_unchecked(order, z))
}

/// Modified Bessel function of the first kind `I_order(z)` for real
/// `order > -1` and `z >= 0`.
pub fn modified_bessel_i(order: f64, z: f64) -> Result<f64> {
    check_args(order, z)?;
    if z < crossover(order) {
        // The series is summed unscaled here to avoid the exp round trip.
        Ok(scaled_series(order, z) * z.exp())
    } else {
        Ok(scaled_asymptotic(order, z) * z.exp())
    }
}

/// `ln(e^{-z} I_order(z))` for `z > 0`.
pub(crate) fn ln_scaled(order: f64, z: f64) -> f64 {
    scaled_unchecked(order, z).ln()
}

/// `e^{-z} I_{order-1}(z)` for any `order > -1`, through the recurrence
/// `I_{a-1} = I_{a+1} + (2a/z) I_a`. This reaches orders in `(-2, -1]` that
/// the direct series does not cover.
pub(crate) fn scaled_lowered(order: f64, z: f64) -> f64 {
    if order - 1.0 > -1.0 {
        return scaled_unchecked(order - 1.0, z);
    }
    scaled_unchecked(order + 1.0, z) + 2.0 * order / z * scaled_unchecked(order, z)
}

/// Physical diffusion time for rescaled time `t` at temperature `T` with `n`
/// paths: `tau = T t / (2n)`.
pub fn rescale_time(temperature: f64, n: usize, t: f64) -> Result<f64> {
    if !(temperature > 0.0) || n == 0 || !(t > 0.0 && t <= 1.0) {
        return domain(format!(
            "rescale_time needs T > 0, n >= 1, 0 < t <= 1 (got T={temperature}, n={n}, t={t})"
        ));
    }
    Ok(temperature * t / (2.0 * n as f64))
}

fn check_density(alpha: f64, tau: f64, x: f64, y: f64) -> Result<()> {
    if !(alpha > -1.0) {
        return domain(format!("alpha must exceed -1, got {alpha}"));
    }
    if !(tau > 0.0) {
        return domain(format!("diffusion time must be positive, got {tau}"));
    }
    if !(x >= 0.0) || !(y > 0.0) {
        return domain(format!("need x >= 0 and y > 0, got x={x}, y={y}"));
    }
    Ok(())
}

/// Logarithm of the squared-Bessel transition density `p_tau^alpha(x, y)`.
pub fn ln_sbp_density(alpha: f64, tau: f64, x: f64, y: f64) -> Result<f64> {
    check_density(alpha, tau, x, y)?;
    Ok(ln_density_unchecked(alpha, tau, x, y))
}

pub(crate) fn ln_density_unchecked(alpha: f64, tau: f64, x: f64, y: f64) -> f64 {
    if x == 0.0 {
        return alpha * y.ln() - y / (2.0 * tau) - (alpha + 1.0) * (2.0 * tau).ln() - ln_gamma(alpha + 1.0);
    }
    let z = (x * y).sqrt() / tau;
    let gap = x.sqrt() - y.sqrt();
    -(2.0 * tau).ln() + 0.5 * alpha * (y / x).ln() - gap * gap / (2.0 * tau) + ln_scaled(alpha, z)
}

/// Squared-Bessel transition density `p_tau^alpha(x, y)` (per unit `y`).
///
/// At `x = 0` this is the gamma density with shape `alpha + 1` and scale
/// `2 tau`.
pub fn sbp_density(alpha: f64, tau: f64, x: f64, y: f64) -> Result<f64> {
    check_density(alpha, tau, x, y)?;
    if x == 0.0 {
        return Ok(ln_density_unchecked(alpha, tau, x, y).exp());
    }
    let z = (x * y).sqrt() / tau;
    let gap = x.sqrt() - y.sqrt();
    Ok((y / x).powf(0.5 * alpha) / (2.0 * tau) * (-gap * gap / (2.0 * tau)).exp() * scaled_unchecked(alpha, z))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    /// Independent oracle: direct series with `Gamma` evaluated by the
    /// product recurrence, summed in plain (unscaled) form.
    fn series_oracle(order: f64, z: f64) -> f64 {
        let mut sum = 0.0;
        let mut term = (0.5 * z).powf(order) / gamma(order + 1.0);
        for k in 0..400 {
            sum += term;
            let k = k as f64 + 1.0;
            term *= 0.25 * z * z / (k * (k + order));
        }
        sum
    }

    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(a + i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn trivial_values() {
        assert_eq!(modified_bessel_i(0.0, 0.0).unwrap(), 1.0);
        assert_eq!(modified_bessel_i(1.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn half_integer_closed_form() {
        let want = (2.0 / PI).sqrt() * 1.0f64.sinh();
        assert_relative_eq!(modified_bessel_i(0.5, 1.0).unwrap(), want, max_relative = 1e-14);
        assert_relative_eq!(series_oracle(0.5, 1.0), want, max_relative = 1e-14);
        assert_relative_eq!(want, 0.937_674_888, max_relative = 1e-8);
    }

    #[test]
    fn half_integer_large_argument() {
        // I_{1/2}(z) = sqrt(2/(pi z)) sinh z, scaled: sqrt(1/(2 pi z)) (1 - e^{-2z})
        for &z in &[35.0, 80.0, 250.0, 500.0] {
            let want = (1.0 / (2.0 * PI * z)).sqrt() * (1.0 - (-2.0 * z).exp());
            assert_relative_eq!(bessel_i_scaled(0.5, z).unwrap(), want, max_relative = 1e-13);
        }
    }

    #[test]
    fn matches_series_oracle_below_crossover() {
        for &order in &[-0.5, -0.25, 0.0, 0.25, 1.0, 2.5] {
            for &z in &[1e-6, 0.3, 2.0, 11.0, 25.0] {
                let got = modified_bessel_i(order, z).unwrap();
                assert_relative_eq!(got, series_oracle(order, z), max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn crossover_continuity() {
        for &order in &[-0.5, 0.0, 0.5, 1.0, 2.5] {
            let z = crossover(order);
            let s = scaled_series(order, z);
            let a = scaled_asymptotic(order, z);
            assert!(((s - a) / s).abs() < 1e-11, "order {order}: {s} vs {a}");
        }
    }

    #[test]
    fn domain_errors() {
        assert!(modified_bessel_i(0.0, -1.0).is_err());
        assert!(modified_bessel_i(-1.0, 1.0).is_err());
        assert!(sbp_density(0.0, 0.0, 1.0, 1.0).is_err());
        assert!(sbp_density(0.0, 1.0, -1.0, 1.0).is_err());
        assert!(rescale_time(0.0, 1, 0.5).is_err());
        assert!(rescale_time(1.0, 0, 0.5).is_err());
        assert!(rescale_time(1.0, 1, 1.5).is_err());
        assert!(BesselOrder::new(-1.0).is_err());
    }

    #[test]
    fn rescaling() {
        assert_eq!(rescale_time(1.0, 1, 1.0).unwrap(), 0.5);
        assert_relative_eq!(rescale_time(2.0, 10, 0.5).unwrap(), 0.05);
        let d = DiffusionTime::from_rescaled(2.0, 10, 0.5).unwrap();
        assert_relative_eq!(d.tau, 0.05);
        let mut last = f64::INFINITY;
        for n in 1..50 {
            let tau = rescale_time(1.0, n, 0.7).unwrap();
            assert!(tau < last);
            last = tau;
        }
    }

    #[test]
    fn density_at_origin_is_gamma() {
        let (alpha, tau) = (0.7, 0.3);
        for &y in &[0.1_f64, 0.8, 2.5] {
            let want = y.powf(alpha) * (-y / (2.0 * tau)).exp() / ((2.0 * tau).powf(alpha + 1.0) * gamma(alpha + 1.0));
            assert_relative_eq!(sbp_density(alpha, tau, 0.0, y).unwrap(), want, max_relative = 1e-13);
        }
    }

    #[test]
    fn density_normalised() {
        let (alpha, tau, x) = (0.5, 0.1, 1.0);
        // y = w^2 removes the y^alpha cusp at the origin
        let total = simpson(|w| if w == 0.0 { 0.0 } else { 2.0 * w * sbp_density(alpha, tau, x, w * w).unwrap() }, 0.0, 4.0, 40_000);
        assert!((total - 1.0).abs() < 1e-9, "{total}");
    }

    #[test]
    fn chapman_kolmogorov() {
        let alpha = 0.3;
        for &(s, t, x, y) in &[(0.05, 0.08, 0.7, 0.9), (0.1, 0.1, 1.2, 0.6), (0.02, 0.03, 0.4, 0.45)] {
            let lhs = simpson(
                |z| if z == 0.0 { 0.0 } else { sbp_density(alpha, s, x, z).unwrap() * sbp_density(alpha, t, z, y).unwrap() },
                0.0,
                8.0,
                80_000,
            );
            let rhs = sbp_density(alpha, s + t, x, y).unwrap();
            assert!((lhs - rhs).abs() < 1e-7, "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn lowered_order_matches_recurrence_oracle() {
        // I_{-3/2}(z) = sqrt(2/(pi z)) (cosh z... ) closed form:
        // I_{-3/2}(z) = sqrt(2/(pi z)) (sinh z - cosh z / z)
        for &z in &[0.5, 3.0, 40.0] {
            let want = (2.0 / (PI * z)).sqrt() * (z.sinh() - z.cosh() / z) * (-z).exp();
            assert_relative_eq!(scaled_lowered(-0.5, z), want, max_relative = 1e-12);
        }
    }

    proptest! {
        #[test]
        fn recurrence_holds(order in 0.01f64..3.0, z in 0.05f64..400.0) {
            let a = scaled_unchecked(order - 1.0, z);
            let b = scaled_unchecked(order + 1.0, z);
            let c = scaled_unchecked(order, z);
            let rhs = 2.0 * order / z * c;
            prop_assert!((a - b - rhs).abs() <= 1e-10 * a.abs().max(rhs.abs()));
        }

        #[test]
        fn density_symmetry(alpha in -0.5f64..2.0, tau in 0.01f64..2.0, x in 0.01f64..5.0, y in 0.01f64..5.0) {
            let l = x.powf(alpha) * sbp_density(alpha, tau, x, y).unwrap();
            let r = y.powf(alpha) * sbp_density(alpha, tau, y, x).unwrap();
            prop_assert!((l - r).abs() <= 1e-12 * l.abs().max(r.abs()).max(1e-300));
        }
    }
}
