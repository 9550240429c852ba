use super::*;
use crate::special::modified_bessel_i;
use proptest::prelude::*;
use std::sync::OnceLock;

fn reference() -> WeightSystem {
    WeightSystem::new(0.5, 0.5, 1.0, 0.5, 8, 0.25).unwrap()
}

fn model() -> &'static BiorthogonalModel {
    static M: OnceLock<BiorthogonalModel> = OnceLock::new();
    M.get_or_init(|| build_model(&reference(), &ModelConfig::for_paths(8)).unwrap())
}

/// A rule unrelated to the one the model was assembled with.
fn independent_rule(m: &BiorthogonalModel) -> Vec<(f64, f64)> {
    quadrature_rule(m.weights(), 2 * ModelConfig::for_paths(8).quad_size + 7, m.x_cut())
}

#[test]
fn block_sizes() {
    let ws = reference();
    assert_eq!((ws.n1(), ws.n2()), (4, 4));
    assert!(WeightSystem::new(0.5, 0.5, 1.0, 0.5, 7, 0.25).is_err());
    assert!(WeightSystem::new(0.5, 0.5, 1.0, 1.0, 8, 0.25).is_err());
    assert!(WeightSystem::new(0.5, 0.5, 1.0, 0.5, 8, -1.0).is_err());
}

#[test]
fn trace_equals_path_count() {
    let m = model();
    let tr: f64 = independent_rule(m).iter().map(|&(x, w)| w * m.kernel(x, x).unwrap()).sum();
    assert!((tr - 8.0).abs() < 1e-6, "trace {tr}");
}

#[test]
fn reproducing_property() {
    let m = model();
    let (x, y) = (0.01, 0.02);
    let direct = m.kernel(x, y).unwrap();
    let folded: f64 = independent_rule(m).iter().map(|&(z, w)| w * m.kernel(x, z).unwrap() * m.kernel(z, y).unwrap()).sum();
    assert!((folded - direct).abs() < 1e-6, "{folded} vs {direct}");
}

#[test]
fn doubling_the_rule_is_converged() {
    let cfg = ModelConfig::for_paths(8);
    let fine = build_model(&reference(), &ModelConfig { quad_size: 2 * cfg.quad_size, ..cfg }).unwrap();
    let d = (fine.kernel(0.01, 0.02).unwrap() - model().kernel(0.01, 0.02).unwrap()).abs();
    assert!(d < 1e-8, "{d}");
}

#[test]
fn correlation_positivity() {
    let m = model();
    let pair = m.matrix(&[0.01, 0.03]).unwrap();
    assert!(pair.determinant() >= -1e-8, "{pair}");
    let top = m.x_cut().ln();
    for k in 0..40 {
        let x = (1e-4f64.ln() + (top - 1e-4f64.ln()) * k as f64 / 40.0).exp();
        assert!(m.kernel(x, x).unwrap() >= -1e-8, "K({x},{x})");
    }
}

#[test]
fn two_paths_against_direct_inversion() {
    // n = 2: one function per block, so the Gram matrix is 2x2 and well
    // conditioned in double precision
    let ws = WeightSystem::new(0.7, 0.3, 1.2, 0.4, 2, 0.6).unwrap();
    let m = build_model(&ws, &ModelConfig::for_paths(2)).unwrap();
    let y_cut = m.x_cut().sqrt();
    let panels = 400;
    let h = y_cut / panels as f64;
    let mut g = [[0.0; 2]; 2];
    for p in 0..panels {
        for (y, w) in quadrature::mapped(20, p as f64 * h, (p + 1) as f64 * h) {
            let v = eval_weights(&ws, y * y).unwrap();
            for i in 0..2 {
                for j in 0..2 {
                    g[i][j] += 2.0 * y * w * v[i] * v[2 + j];
                }
            }
        }
    }
    let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
    let inv = [[g[1][1] / det, -g[0][1] / det], [-g[1][0] / det, g[0][0] / det]];
    for (x, y) in [(0.1, 0.4), (0.5, 0.5), (1.3, 0.2)] {
        let f = eval_weights(&ws, x).unwrap();
        let gv = eval_weights(&ws, y).unwrap();
        let mut k = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                k += f[i] * inv[j][i] * gv[2 + j];
            }
        }
        let got = m.kernel(x, y).unwrap();
        assert!((got - k).abs() < 1e-8 * (1.0 + k.abs()), "({x},{y}): {got} vs {k}");
    }
}

#[test]
fn weights_near_the_origin() {
    let ws = reference();
    let x = 1e-8;
    let r1 = ws.n as f64 / (ws.temperature * ws.t);
    let w = eval_weights(&ws, x).unwrap()[0] * (r1 * x).exp();
    // the whole I_alpha series summed directly
    let z2 = r1 * (ws.a * x).sqrt();
    let mut term = z2.powf(ws.alpha) / crate::special::gamma(ws.alpha + 1.0);
    let mut series = 0.0;
    for k in 0..30 {
        series += term;
        term *= z2 * z2 / ((k as f64 + 1.0) * (k as f64 + 1.0 + ws.alpha));
    }
    let oracle = x.powf(0.5 * ws.alpha) * series;
    assert!((w - oracle).abs() < 1e-12 * oracle, "{w} vs {oracle}");
    // leading term, with the first correction as the tolerance scale
    let lead = w11_leading(&ws, x);
    let next = z2 * z2 / (ws.alpha + 1.0);
    assert!((w / lead - 1.0).abs() < 2.0 * next, "{w} vs {lead}");
}

#[test]
fn weight_ratio_identity() {
    let ws = reference();
    let r1 = ws.n as f64 / (ws.temperature * ws.t);
    for x in [1e-3, 0.2, 1.0, 3.0] {
        let w = eval_weights(&ws, x).unwrap();
        let z = 2.0 * r1 * (ws.a * x).sqrt();
        let want = x.sqrt() * modified_bessel_i(ws.alpha + 1.0, z).unwrap() / modified_bessel_i(ws.alpha, z).unwrap();
        assert!((w[1] / w[0] - want).abs() < 1e-12 * want, "x={x}");
    }
}

#[test]
fn last_weight_changes_sign_for_negative_alpha() {
    let ws = WeightSystem::new(0.5, 0.5, 1.0, 0.5, 8, -0.5).unwrap();
    assert!(eval_weights(&ws, 1e-6).unwrap()[3] < 0.0);
    assert!(eval_weights(&ws, 0.5).unwrap()[3] > 0.0);
}

#[test]
fn weights_reject_nonpositive_x() {
    assert!(eval_weights(&reference(), 0.0).is_err());
    assert!(eval_weights(&reference(), -1.0).is_err());
}

#[test]
fn build_rejects_bad_settings() {
    let ws = reference();
    let cfg = ModelConfig::for_paths(8);
    assert!(build_model(&ws, &ModelConfig { quad_size: 31, ..cfg }).is_err());
    assert!(build_model(&ws, &ModelConfig { x_cut: Some(-1.0), ..cfg }).is_err());
    assert!(model().kernel(0.0, 1.0).is_err());
}

#[test]
fn too_little_precision_is_reported() {
    let ws = ScalingSetup::new(24, 0.0, 0.0).weight_system().unwrap();
    let cfg = ModelConfig { quad_size: 96, x_cut: None, precision_bits: 64 };
    assert!(matches!(build_model(&ws, &cfg), Err(Error::SingularGram { .. })));
}

#[test]
fn extended_precision_survives_refinement() {
    // n = 16 has a Gram pivot ratio near 1e25; the kernel must still be
    // insensitive to the rule
    let ws = ScalingSetup::new(16, 0.0, 0.0).weight_system().unwrap();
    let cfg = ModelConfig::for_paths(16);
    let a = build_model(&ws, &cfg).unwrap();
    let b = build_model(&ws, &ModelConfig { quad_size: cfg.quad_size + 8, ..cfg }).unwrap();
    assert!(a.condition() > 1e20);
    let (ka, kb) = (a.kernel(0.002, 0.004).unwrap(), b.kernel(0.002, 0.004).unwrap());
    assert!((ka - kb).abs() < 1e-8 * ka.abs(), "{ka} vs {kb}");
}

#[test]
fn scaling_setup_maps() {
    let s = ScalingSetup::new(8, 0.0, 0.0);
    let ws = s.weight_system().unwrap();
    assert_eq!((ws.t, ws.temperature), (0.5, 1.0));
    let p = s.params().unwrap();
    assert_eq!((p.s_star, p.tau_star), (0.0, 0.0));
    let s = ScalingSetup::new(16, 1.0, 0.0);
    let p = s.params().unwrap();
    assert!((p.s_star - 2.0).abs() < 1e-14 && (p.tau_star + 2.0).abs() < 1e-14);
    assert!((s.weight_system().unwrap().t - (0.5 + 16f64.powf(-1.0 / 3.0))).abs() < 1e-15);
    // t = 1/2 + 8^{-1/3} = 1 is outside the time interval
    assert!(ScalingSetup::new(8, 1.0, 0.0).weight_system().is_err());
}

#[test]
fn varying_endpoints_shift_only_s() {
    let base = ScalingSetup::new(16, 0.5, 0.3);
    let moved = ScalingSetup { l1: 0.4, l2: -0.1, ..base };
    let (p, q) = (base.params().unwrap(), moved.params().unwrap());
    assert!((q.s_star - p.s_star - 0.15).abs() < 1e-14);
    assert_eq!(q.tau_star, p.tau_star);
    let (w, v) = (base.weight_system().unwrap(), moved.weight_system().unwrap());
    assert!((v.a / w.a - (1.0 + 0.8 * 16f64.powf(-2.0 / 3.0))).abs() < 1e-14);
    assert_eq!((v.t, v.temperature), (w.t, w.temperature));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn weights_positive(alpha in 0.0f64..3.0, x in 1e-6f64..10.0, t in 0.1f64..0.9) {
        let ws = WeightSystem::new(0.5, 0.5, 1.0, t, 8, alpha).unwrap();
        let w = eval_weights(&ws, x).unwrap();
        prop_assert!(w.iter().all(|&v| v > 0.0), "{w:?}");
    }

    #[test]
    fn three_point_determinants(a in -9.0f64..1.0, b in -9.0f64..1.0, c in -9.0f64..1.0) {
        let pts = [a.exp(), b.exp(), c.exp()];
        let m = model().matrix(&pts).unwrap();
        prop_assert!(m.determinant() >= -1e-8, "{m}");
        for i in 0..3 {
            for j in 0..3 {
                let two = m[(i, i)] * m[(j, j)] - m[(i, j)] * m[(j, i)];
                prop_assert!(two >= -1e-8);
            }
        }
    }
}
