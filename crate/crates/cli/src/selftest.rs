//! Fast versions of the invariant checks, one row per check.

use tacnode_core::finiten::{build_model, quadrature_rule, ModelConfig, WeightSystem};
use tacnode_core::laxpair::{check_compatibility, entries_from_pii, MParams};
use tacnode_core::painleve::{solve_hastings_mcleod, PIIConfig, PIISolution};
use tacnode_core::phase::{classify_phase, mp_endpoints, Phase};
use tacnode_core::rhkernel::{solve_m_plus, SolveConfig, TacnodeKernel};
use tacnode_core::sampler::{init_ensemble, mcmc_sweep};
use tacnode_core::Result;

use crate::commands::Outcome;
use crate::output::Table;

struct Check {
    name: &'static str,
    /// Nonnegative defect; the check holds when it is at most `tol`.
    defect: f64,
    tol: f64,
}

fn pii_checks(sol: &PIISolution) -> Result<Vec<Check>> {
    let nu = sol.nu();
    let right = (sol.q(20.0)? * 20.0 / nu - 1.0).abs();
    let left = (sol.q(-20.0)? / 10f64.sqrt() - 1.0).abs();
    let h = 1e-3;
    let mut ham = 0.0f64;
    for k in 0..=200 {
        let x = -10.0 + 0.1 * k as f64;
        let du = (sol.hamiltonian(x + h)? - sol.hamiltonian(x - h)?) / (2.0 * h);
        ham = ham.max((du + sol.q(x)?.powi(2)).abs());
    }
    Ok(vec![
        Check { name: "pii_right_tail", defect: right, tol: 1e-2 },
        Check { name: "pii_left_tail", defect: left, tol: 5e-3 },
        Check { name: "hamiltonian_derivative", defect: ham, tol: 1e-5 },
    ])
}

fn lax_checks(sol: &PIISolution) -> Result<Vec<Check>> {
    let r = check_compatibility(sol, 0.5, 0.5, 1e-4)?;
    Ok(vec![
        Check { name: "lax_first_order", defect: r.first_order_max(), tol: 1e-6 },
        Check { name: "lax_second_order", defect: r.d_second.abs(), tol: 1e-4 },
        Check { name: "zero_curvature", defect: r.zero_curvature, tol: 1e-6 },
    ])
}

fn kernel_checks(sol: &PIISolution) -> Result<Vec<Check>> {
    let nu = sol.nu();
    let params = MParams::new(nu, 0.0, 0.0)?;
    let entries = entries_from_pii(sol, 0.0, 0.0)?;
    let ev = solve_m_plus(&params, &entries, &[0.5, 1.0, 2.0, 5.0], SolveConfig::default())?;
    let k = TacnodeKernel::new(&params, &entries, SolveConfig::default())?;
    let pts = [0.5, 1.0, 2.0];
    let hats = k.hats(&pts)?;
    let mut neg = 0.0f64;
    let mut imag = 0.0f64;
    for h in &hats {
        let v = TacnodeKernel::from_hats(h, h);
        neg = neg.max(-v.value);
        imag = imag.max(v.imag.abs());
    }
    let m = k.matrix(&pts)?;
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        neg = neg.max(-(m[(i, i)] * m[(j, j)] - m[(i, j)] * m[(j, i)]));
    }
    neg = neg.max(-m.determinant());
    Ok(vec![
        Check { name: "rh_unimodular", defect: ev.worst_det_drift(), tol: 1e-8 },
        Check { name: "kernel_positivity", defect: neg.max(0.0), tol: 1e-8 },
        Check { name: "kernel_real", defect: imag, tol: 1e-7 },
    ])
}

fn finite_checks() -> Result<Vec<Check>> {
    let ws = WeightSystem::new(0.5, 0.5, 1.0, 0.5, 8, 0.25)?;
    let cfg = ModelConfig::for_paths(8);
    let model = build_model(&ws, &cfg)?;
    let rule = quadrature_rule(&ws, 2 * cfg.quad_size + 7, model.x_cut());
    let mut trace = 0.0;
    for &(x, w) in &rule {
        trace += w * model.kernel(x, x)?;
    }
    Ok(vec![Check { name: "finite_trace", defect: (trace - 8.0).abs(), tol: 1e-6 }])
}

fn phase_checks() -> Result<Vec<Check>> {
    let tac = classify_phase(0.5, 0.5, 0.5, 1.0)? == Phase::Tacnode;
    let (p, q) = mp_endpoints(0.5, 0.5, 0.5, 0.8)?;
    let ordered = p > 0.0 && p < q;
    Ok(vec![Check { name: "phase_tacnode_point", defect: if tac && ordered { 0.0 } else { 1.0 }, tol: 0.0 }])
}

fn sampler_checks() -> Result<Vec<Check>> {
    let mut ens = init_ensemble(6, 16, 0.5, 0.5, 1.0, 1)?;
    let mut broken = 0usize;
    for _ in 0..200 {
        mcmc_sweep(&mut ens);
        broken += usize::from(!ens.is_valid());
    }
    Ok(vec![Check { name: "sampler_ordering", defect: broken as f64, tol: 0.0 }])
}

fn all_checks() -> Vec<(&'static str, Result<Vec<Check>>)> {
    let sol = solve_hastings_mcleod(&PIIConfig::new(0.75));
    let with_sol = |f: fn(&PIISolution) -> Result<Vec<Check>>| match &sol {
        Ok(s) => f(s),
        Err(e) => Err(e.clone()),
    };
    vec![
        ("pii", with_sol(pii_checks)),
        ("lax", with_sol(lax_checks)),
        ("kernel", with_sol(kernel_checks)),
        ("finite", finite_checks()),
        ("phase", phase_checks()),
        ("sampler", sampler_checks()),
    ]
}

pub fn run() -> Outcome {
    let mut t = Table::new("selftest", &["check", "defect", "tolerance", "status"]);
    let mut failed = false;
    for (group, result) in all_checks() {
        match result {
            Ok(checks) => {
                for c in checks {
                    let ok = c.defect <= c.tol;
                    failed |= !ok;
                    t.push(vec![c.name.into(), c.defect.into(), c.tol.into(), if ok { "PASS" } else { "FAIL" }.into()]);
                }
            }
            Err(e) => {
                failed = true;
                t.note(&format!("{group}_error"), e);
                t.push(vec![group.into(), f64::NAN.into(), 0.0.into(), "FAIL".into()]);
            }
        }
    }
    t.note("result", if failed { "FAIL" } else { "PASS" });
    Outcome { table: t, json: None, json_path: None, failed }
}
