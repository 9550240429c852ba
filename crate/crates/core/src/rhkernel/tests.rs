use super::*;
use crate::error::Error;
use crate::laxpair::{entries_from_pii, CMat4, LaxEntries, MParams};
use crate::painleve::{solve_hastings_mcleod, PIIConfig, PIISolution};
use crate::quadrature;
use num_complex::Complex64;
use std::sync::OnceLock;

fn pii() -> &'static PIISolution {
    static S: OnceLock<PIISolution> = OnceLock::new();
    S.get_or_init(|| solve_hastings_mcleod(&PIIConfig::new(0.75)).unwrap())
}

fn setup(s: f64, tau: f64) -> (MParams, LaxEntries) {
    (MParams::new(0.75, s, tau).unwrap(), entries_from_pii(pii(), s, tau).unwrap())
}

fn kernel_at(s: f64, tau: f64) -> TacnodeKernel {
    let (p, e) = setup(s, tau);
    TacnodeKernel::new(&p, &e, SolveConfig::default()).unwrap()
}

fn max_abs(m: &CMat4) -> f64 {
    m.iter().fold(0.0f64, |a, z| a.max(z.norm()))
}

#[test]
fn unimodular_on_the_axis() {
    let (p, e) = setup(0.3, 0.0);
    let ev = solve_m_plus(&p, &e, &[0.5, 1.0, 2.0, 5.0], SolveConfig::default()).unwrap();
    assert!(ev.worst_det_drift() < 1e-8, "det drift {}", ev.worst_det_drift());
    assert_eq!(ev.m_plus.len(), 4);
    assert!(ev.provenance.total_steps > 0);
}

#[test]
fn unimodular_off_the_axis() {
    let (p, e) = setup(-0.7, 0.5);
    let solver = RhSolver::new(&p, &e, SolveConfig::default()).unwrap();
    for z in [Complex64::new(0.3, 1.1), Complex64::new(-1.5, 0.2), Complex64::new(0.9, -2.0), Complex64::new(-0.1, -0.4)] {
        let m = solver.evaluate(Polar::from_complex(z)).unwrap().m;
        assert!((m.determinant() - 1.0).norm() < 1e-8, "det at {z}");
    }
}

#[test]
fn symmetry_relations() {
    let (p, e) = setup(0.3, 0.2);
    let (_, reflected) = setup(0.3, -0.2);
    let pts = [Complex64::new(1.0, 0.7), Complex64::new(0.4, 1.5), Complex64::new(-0.8, 0.3)];
    let rep = symmetry_residuals(&p, &e, &reflected, &pts, SolveConfig::default()).unwrap();
    assert!(rep.max() < 1e-6, "{rep:?}");
}

#[test]
fn symmetry_needs_reflected_entries() {
    let (p, e) = setup(0.3, 0.2);
    assert!(symmetry_residuals(&p, &e, &e, &[Complex64::new(1.0, 1.0)], SolveConfig::default()).is_err());
}

#[test]
fn jump_on_positive_axis() {
    let (p, e) = setup(0.5, -0.3);
    for x in [0.4, 1.3, 2.5] {
        let r = axis_jump_residual(&p, &e, x).unwrap();
        assert!(r < 1e-8, "x={x}: {r}");
    }
}

#[test]
fn independent_of_starting_radius() {
    let (p, e) = setup(0.3, 0.1);
    let r0 = default_radius(0.3);
    let pts = [0.5, 1.0, 3.0];
    let a = solve_m_plus(&p, &e, &pts, SolveConfig { radius: Some(r0), ..SolveConfig::default() }).unwrap();
    let b = solve_m_plus(&p, &e, &pts, SolveConfig { radius: Some(1.5 * r0), ..SolveConfig::default() }).unwrap();
    for (x, y) in a.m_plus.iter().zip(&b.m_plus) {
        assert!(max_abs(&(x - y)) < 1e-7 * (1.0 + max_abs(x)));
    }
}

#[test]
fn hat_determinant_is_four() {
    let (p, e) = setup(0.3, 0.0);
    let ev = solve_m_plus(&p, &e, &[0.5, 1.0, 4.0], SolveConfig::default()).unwrap();
    for (mh, m) in ev.mhat_plus.iter().zip(&ev.m_plus) {
        assert!((mh.determinant() - 4.0).norm() < 1e-8);
        let _ = m;
    }
    // no power factor at u = 1
    let one = hat_transform(&ev.m_plus[1], 1.0).unwrap();
    assert!(max_abs(&(one - ev.mhat_plus[1])) == 0.0);
    assert!(hat_transform(&ev.m_plus[0], 0.0).is_err());
}

#[test]
fn diagonal_is_nonnegative() {
    let k = kernel_at(0.0, 0.0);
    for u in [0.5, 1.0, 2.0] {
        let v = k.kernel(u, u).unwrap();
        assert!(v.value >= -1e-8, "K({u},{u}) = {}", v.value);
        assert!(!v.accuracy_warning());
    }
}

#[test]
fn diagonal_limit_matches_direct_formula() {
    // K(u+e, u-e) + K(u-e, u+e) = 2 K(u, u) + O(e^2)
    let k = kernel_at(0.0, 0.0);
    let h = 1e-3;
    for u in [0.5, 1.0, 2.0] {
        let direct = 0.5 * (k.kernel(u + 0.5 * h, u - 0.5 * h).unwrap().value + k.kernel(u - 0.5 * h, u + 0.5 * h).unwrap().value);
        let diag = k.kernel(u, u).unwrap().value;
        assert!((direct - diag).abs() < 1e-5, "u={u}: {direct} vs {diag}");
    }
}

#[test]
fn two_point_determinant_nonnegative() {
    let k = kernel_at(0.0, 0.0);
    let m = k.matrix(&[1.0, 2.0]).unwrap();
    assert!(m.determinant() >= -1e-8, "{m}");
}

#[test]
fn kernel_is_real() {
    let k = kernel_at(0.4, -0.3);
    for (u, v) in [(0.3, 1.7), (2.0, 0.6), (1.1, 1.1)] {
        let kv = k.kernel(u, v).unwrap();
        assert!(kv.imag.abs() < IMAG_TOL, "Im K({u},{v}) = {}", kv.imag);
    }
}

#[test]
fn kernel_rejects_nonpositive_arguments() {
    let k = kernel_at(0.0, 0.0);
    assert!(matches!(k.kernel(0.0, 1.0), Err(Error::Domain(_))));
    assert!(matches!(k.kernel(1.0, -2.0), Err(Error::Domain(_))));
}

#[test]
fn residue_reproduces_entries() {
    let (p, e) = setup(1.0, 0.4);
    let est = extract_residue(&p, &e, &default_residue_radii(1.0)).unwrap();
    assert!((est.d_hat - e.d).abs() < 1e-4, "d {} vs {}", est.d_hat, e.d);
    assert!((est.c_hat - e.c).abs() < 1e-4, "c {} vs {}", est.c_hat, e.c);
    // first row: two real entries, then two imaginary ones
    let m1 = est.m1;
    assert!(m1[(0, 0)].im.abs() < 1e-6 && m1[(0, 1)].im.abs() < 1e-6, "{m1}");
    assert!(m1[(0, 2)].re.abs() < 1e-6 && m1[(0, 3)].re.abs() < 1e-6, "{m1}");
}

#[test]
fn residue_needs_enough_radii() {
    let (p, e) = setup(1.0, 0.0);
    assert!(extract_residue(&p, &e, &[10.0, 12.0, 14.0]).is_err());
    let mut bad = default_residue_radii(1.0);
    bad.swap(0, 1);
    assert!(extract_residue(&p, &e, &bad).is_err());
}

#[test]
fn bessel_diagonal_prefactor_collapses() {
    let k = kernel_at(0.0, 0.0);
    for u in [0.7, 1.2] {
        let b = bessel_from(&k, u, u).unwrap().value;
        let direct = 2.0 * u * k.kernel(u * u, u * u).unwrap().value;
        assert!((b - direct).abs() < 1e-12 * (1.0 + direct.abs()));
        assert!(b >= -1e-8);
    }
}

#[test]
fn bessel_change_of_variables() {
    let k = kernel_at(0.0, 0.0);
    let (l, r) = (0.8, 1.4);
    let lhs = quadrature::integrate(|x| bessel_from(&k, x, x).unwrap().value, l, r, 16);
    let rhs = quadrature::integrate(|y| k.kernel(y, y).unwrap().value, l * l, r * r, 16);
    assert!((lhs - rhs).abs() < 1e-6, "{lhs} vs {rhs}");
}

#[test]
fn domain_errors() {
    let (p, e) = setup(0.0, 0.0);
    assert!(solve_m_plus(&p, &e, &[1.0, 0.5], SolveConfig::default()).is_err());
    assert!(solve_m_plus(&p, &e, &[0.0, 0.5], SolveConfig::default()).is_err());
    let (p2, _) = setup(0.5, 0.0);
    assert!(RhSolver::new(&p2, &e, SolveConfig::default()).is_err());
    let solver = RhSolver::new(&p, &e, SolveConfig { radius: Some(30.0), ..SolveConfig::default() }).unwrap();
    assert!(solver.m_plus(25.0).is_err());
    assert!(solver.m_plus(-1.0).is_err());
}

#[test]
fn residue_follows_large_s_regime() {
    let (p, e) = setup(5.0, 0.0);
    let est = extract_residue(&p, &e, &default_residue_radii(5.0)).unwrap();
    assert!((est.d_hat - 0.75 / 20.0).abs() < 5e-3, "d {}", est.d_hat);
}
