//! Macroscopic geometry of the path ensemble: critical time, bulk support in
//! the low-temperature regime, the phase diagram and the triple-scaling maps.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Relative tolerance used for every equality test on temperatures and on the
/// product `ab`.
pub const PHASE_TOL: f64 = 1e-12;

/// Starting and ending points of the paths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EndpointPair {
    pub a: f64,
    pub b: f64,
}

impl EndpointPair {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        check_endpoints(a, b)?;
        Ok(Self { a, b })
    }

    /// Whether `ab = 1/4` up to [`PHASE_TOL`].
    pub fn is_critical(&self) -> bool {
        (4.0 * self.a * self.b - 1.0).abs() <= PHASE_TOL
    }

    pub fn require_critical(&self) -> Result<()> {
        if self.is_critical() {
            Ok(())
        } else {
            domain(format!("endpoints must satisfy ab = 1/4, got ab = {}", self.a * self.b))
        }
    }

    fn root_sum(&self) -> f64 {
        self.a.sqrt() + self.b.sqrt()
    }
}

fn check_endpoints(a: f64, b: f64) -> Result<()> {
    if !(a > 0.0 && a.is_finite() && b > 0.0 && b.is_finite()) {
        return domain(format!("endpoints must be positive and finite, got a={a}, b={b}"));
    }
    Ok(())
}

fn check_time(t: f64) -> Result<()> {
    if !(t > 0.0 && t < 1.0) {
        return domain(format!("time must lie in (0, 1), got {t}"));
    }
    Ok(())
}

/// Time at which the critical hull touches the hard edge.
pub fn t_star(a: f64, b: f64) -> Result<f64> {
    check_endpoints(a, b)?;
    Ok(a.sqrt() / (a.sqrt() + b.sqrt()))
}

/// `√p` as a signed quantity; negative means the bulk would cross zero.
pub fn lower_root(a: f64, b: f64, t: f64, temperature: f64) -> f64 {
    (1.0 - t) * a.sqrt() + t * b.sqrt() - (2.0 * t * (1.0 - t) * temperature).sqrt()
}

/// Support `[p, q]` of the bulk at time `t` for `T ≤ 1`.
pub fn mp_endpoints(a: f64, b: f64, t: f64, temperature: f64) -> Result<(f64, f64)> {
    check_endpoints(a, b)?;
    check_time(t)?;
    if !(temperature > 0.0) || temperature > 1.0 + PHASE_TOL {
        return domain(format!("bulk endpoints need 0 < T <= 1, got {temperature}"));
    }
    let centre = (1.0 - t) * a.sqrt() + t * b.sqrt();
    let spread = (2.0 * t * (1.0 - t) * temperature).sqrt();
    let lo = centre - spread;
    // rounding at the tangency point must not be mistaken for a crossing
    if lo < -PHASE_TOL * centre {
        return Err(Error::Case(lo));
    }
    let lo = lo.max(0.0);
    let hi = centre + spread;
    Ok((lo * lo, hi * hi))
}

/// Temperature separating the regime where paths reach the hard edge from the
/// one where they stay away from it, at time `t`.
pub fn boundary_temperature(a: f64, b: f64, t: f64) -> Result<f64> {
    check_endpoints(a, b)?;
    check_time(t)?;
    let s = 1.0 - t;
    Ok((a * s * s + b * t * t) / (t * s))
}

/// Samples `(t, T)` of the boundary curve, for plotting.
pub fn boundary_curve(a: f64, b: f64, times: &[f64]) -> Result<Vec<(f64, f64)>> {
    times.iter().map(|&t| Ok((t, boundary_temperature(a, b, t)?))).collect()
}

/// Region of the phase diagram. Boundary labels keep the case numerals.
#[allow(non_camel_case_types)]
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Phase {
    CaseI,
    CaseII,
    CaseIII,
    BoundaryI_II,
    BoundaryII_III,
    Tacnode,
}

impl Phase {
    pub fn label(self) -> &'static str {
        match self {
            Phase::CaseI => "CaseI",
            Phase::CaseII => "CaseII",
            Phase::CaseIII => "CaseIII",
            Phase::BoundaryI_II => "BoundaryI_II",
            Phase::BoundaryII_III => "BoundaryII_III",
            Phase::Tacnode => "Tacnode",
        }
    }
}

impl std::fmt::Display for Phase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Classifies `(t, T)` for endpoints with `ab = 1/4`, with relative
/// tolerance `tol` on the boundary equalities.
pub fn classify_phase_with(a: f64, b: f64, t: f64, temperature: f64, tol: f64) -> Result<Phase> {
    let ends = EndpointPair::new(a, b)?;
    ends.require_critical()?;
    check_time(t)?;
    if !(temperature > 0.0 && temperature.is_finite()) {
        return domain(format!("temperature must be positive, got {temperature}"));
    }
    let on_unit = (temperature - 1.0).abs() <= tol;
    let ts = t_star(a, b)?;
    if on_unit && (t - ts).abs() <= tol.max(f64::EPSILON) {
        return Ok(Phase::Tacnode);
    }
    if on_unit {
        return Ok(Phase::BoundaryI_II);
    }
    if temperature < 1.0 {
        return Ok(Phase::CaseI);
    }
    let edge = boundary_temperature(a, b, t)?;
    if (temperature - edge).abs() <= tol * edge {
        Ok(Phase::BoundaryII_III)
    } else if temperature > edge {
        Ok(Phase::CaseIII)
    } else {
        Ok(Phase::CaseII)
    }
}

pub fn classify_phase(a: f64, b: f64, t: f64, temperature: f64) -> Result<Phase> {
    classify_phase_with(a, b, t, temperature, PHASE_TOL)
}

/// Parameters of the limiting kernel reached by the triple scaling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingParams {
    pub s_star: f64,
    pub tau_star: f64,
    pub kappa: f64,
}

/// `(s*, τ*, κ)` for time shift `k`, temperature shift `l` and endpoint shifts
/// `l1`, `l2`. The endpoints passed in are the unshifted ones, `ab = 1/4`.
pub fn scaling_params(a: f64, b: f64, k: f64, l: f64, l1: f64, l2: f64) -> Result<ScalingParams> {
    let ends = EndpointPair::new(a, b)?;
    ends.require_critical()?;
    let sum2 = ends.root_sum().powi(2);
    Ok(ScalingParams { s_star: (k * k * sum2 * sum2 - l + l1 + l2) / 2.0, tau_star: -k * sum2, kappa: 2.0 * ends.root_sum() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn critical_time() {
        assert_relative_eq!(t_star(0.5, 0.5).unwrap(), 0.5);
        assert_relative_eq!(t_star(1.0, 0.25).unwrap(), 2.0 / 3.0, max_relative = 1e-15);
        assert!(t_star(0.0, 1.0).is_err());
    }

    #[test]
    fn bulk_support_at_tangency() {
        let (p, q) = mp_endpoints(0.5, 0.5, 0.5, 1.0).unwrap();
        assert!(p.abs() < 1e-15);
        assert_relative_eq!(q, 2.0, max_relative = 1e-14);
        let (p, q) = mp_endpoints(0.5, 0.5, 0.5, 0.8).unwrap();
        assert!(0.0 < p && p < q);
    }

    #[test]
    fn bulk_support_rejects_crossing() {
        // endpoints with ab < 1/4 reach the hard edge at T = 1
        assert!(matches!(mp_endpoints(0.01, 0.01, 0.5, 1.0), Err(Error::Case(_))));
        assert!(mp_endpoints(0.5, 0.5, 0.5, 1.5).is_err());
    }

    #[test]
    fn boundary_values() {
        assert_relative_eq!(boundary_temperature(0.5, 0.5, 0.5).unwrap(), 1.0);
        assert_relative_eq!(boundary_temperature(0.5, 0.5, 0.1).unwrap(), 0.41 / 0.09, max_relative = 1e-14);
        assert!(boundary_temperature(0.5, 0.5, 0.0).is_err());
        assert!(boundary_temperature(0.5, 0.5, 1.0).is_err());
    }

    #[test]
    fn boundary_minimum_by_golden_section() {
        for (a, b) in [(0.5, 0.5), (1.0, 0.25), (0.1, 2.5)] {
            let f = |t: f64| boundary_temperature(a, b, t).unwrap();
            let g = 0.5 * (5f64.sqrt() - 1.0);
            let (mut lo, mut hi) = (1e-6, 1.0 - 1e-6);
            for _ in 0..200 {
                let (x1, x2) = (hi - g * (hi - lo), lo + g * (hi - lo));
                if f(x1) < f(x2) {
                    hi = x2;
                } else {
                    lo = x1;
                }
            }
            let tmin = 0.5 * (lo + hi);
            assert!((tmin - t_star(a, b).unwrap()).abs() < 1e-6, "{a},{b}: {tmin}");
            assert_relative_eq!(f(tmin), 2.0 * (a * b).sqrt(), max_relative = 1e-10);
        }
    }

    #[test]
    fn classification_examples() {
        assert_eq!(classify_phase(0.5, 0.5, 0.5, 0.8).unwrap(), Phase::CaseI);
        assert_eq!(classify_phase(0.5, 0.5, 0.5, 1.5).unwrap(), Phase::CaseIII);
        assert_eq!(classify_phase(0.5, 0.5, 0.1, 1.5).unwrap(), Phase::CaseII);
        assert_eq!(classify_phase(0.5, 0.5, 0.5, 1.0).unwrap(), Phase::Tacnode);
        assert_eq!(classify_phase(0.5, 0.5, 0.3, 1.0).unwrap(), Phase::BoundaryI_II);
        let edge = boundary_temperature(0.5, 0.5, 0.2).unwrap();
        assert_eq!(classify_phase(0.5, 0.5, 0.2, edge).unwrap(), Phase::BoundaryII_III);
        assert!(classify_phase(1.0, 1.0, 0.5, 1.0).is_err());
    }

    #[test]
    fn scaling_examples() {
        let k = 2.0 * 2f64.sqrt();
        let p = scaling_params(0.5, 0.5, 0.0, 0.0, 0.0, 0.0).unwrap();
        assert_eq!((p.s_star, p.tau_star), (0.0, 0.0));
        assert_relative_eq!(p.kappa, k, max_relative = 1e-15);
        let p = scaling_params(0.5, 0.5, 1.0, 0.0, 0.0, 0.0).unwrap();
        assert_relative_eq!(p.s_star, 2.0, max_relative = 1e-14);
        assert_relative_eq!(p.tau_star, -2.0, max_relative = 1e-14);
        let p = scaling_params(0.5, 0.5, 0.0, 1.0, 1.0, 0.0).unwrap();
        assert_eq!(p.s_star, 0.0);
        assert!(scaling_params(0.5, 1.0, 0.0, 0.0, 0.0, 0.0).is_err());
    }

    fn critical_pair() -> impl Strategy<Value = (f64, f64)> {
        (0.05f64..5.0).prop_map(|a| (a, 0.25 / a))
    }

    proptest! {
        #[test]
        fn t_star_is_antisymmetric(a in 0.01f64..10.0, b in 0.01f64..10.0) {
            prop_assert!((t_star(a, b).unwrap() + t_star(b, a).unwrap() - 1.0).abs() < 1e-14);
        }

        #[test]
        fn classification_mirror_symmetry((a, b) in critical_pair(), t in 0.01f64..0.99, temp in 0.1f64..6.0) {
            prop_assert_eq!(classify_phase(a, b, t, temp).unwrap(), classify_phase(b, a, 1.0 - t, temp).unwrap());
        }

        #[test]
        fn boundary_mirror_symmetry(a in 0.05f64..5.0, b in 0.05f64..5.0, t in 0.01f64..0.99) {
            let l = boundary_temperature(a, b, t).unwrap();
            let r = boundary_temperature(b, a, 1.0 - t).unwrap();
            prop_assert!((l - r).abs() <= 1e-12 * l);
        }

        #[test]
        fn boundary_at_critical_time_is_one((a, b) in critical_pair()) {
            let ts = t_star(a, b).unwrap();
            prop_assert!((boundary_temperature(a, b, ts).unwrap() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn support_ordered(a in 0.1f64..3.0, b in 0.1f64..3.0, t in 0.01f64..0.99, temp in 0.01f64..1.0) {
            if let Ok((p, q)) = mp_endpoints(a, b, t, temp) {
                prop_assert!(0.0 <= p && p < q);
            }
        }

        #[test]
        fn lower_edge_vanishes_on_its_curve(a in 0.1f64..3.0, b in 0.1f64..3.0, t in 0.05f64..0.95) {
            // temperature at which the two sides of the defining equation agree
            let centre = (1.0 - t) * a.sqrt() + t * b.sqrt();
            let temp = centre * centre / (2.0 * t * (1.0 - t));
            prop_assert!(lower_root(a, b, t, temp).abs() < 1e-12 * centre);
            prop_assert!(lower_root(a, b, t, 0.9 * temp) > 0.0);
            prop_assert!(lower_root(a, b, t, 1.1 * temp) < 0.0);
        }
    }
}
