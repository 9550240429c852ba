use std::path::PathBuf;

use rayon::prelude::*;
use serde_json::json;
use tacnode_core::finiten::{build_model, precision_for_paths, scaling_compare, ModelConfig, ScalingSetup, WeightSystem};
use tacnode_core::laxpair::{check_compatibility, entries_from_pii, MParams};
use tacnode_core::painleve::{solve_hastings_mcleod, PIIConfig};
use tacnode_core::phase::{boundary_curve, classify_phase_with, t_star};
use tacnode_core::rhkernel::{SolveConfig, TacnodeKernel};
use tacnode_core::sampler::{lowest_point, summarize, ChainConfig, PathEnsemble};

use crate::grid::{parse_list, parse_range};
use crate::output::{num, Cell, Table};
use crate::{selftest, CliError, CliResult, Command, FiniteArgs, KernelArgs, LaxArgs, PhaseArgs, PiiArgs, PrecisionArgs, SampleArgs, ScalingArgs};

/// What a subcommand produced.
#[derive(Debug)]
pub struct Outcome {
    pub table: Table,
    /// Flat JSON summary, if the command has one.
    pub json: Option<String>,
    pub json_path: Option<PathBuf>,
    /// Set when the command ran but a check it performs did not hold.
    pub failed: bool,
}

impl From<Table> for Outcome {
    fn from(table: Table) -> Self {
        Self { table, json: None, json_path: None, failed: false }
    }
}

pub fn dispatch(cmd: &Command) -> CliResult<Outcome> {
    match cmd {
        Command::Pii(a) => pii(a).map(Into::into),
        Command::LaxCheck(a) => lax_check(a).map(Into::into),
        Command::Kernel(a) => kernel(a).map(Into::into),
        Command::FiniteN(a) => finite_n(a).map(Into::into),
        Command::Scaling(a) => scaling(a).map(Into::into),
        Command::Phase(a) => phase(a).map(Into::into),
        Command::Sample(a) => sample(a),
        Command::Selftest => Ok(selftest::run()),
    }
}

fn pii(args: &PiiArgs) -> CliResult<Table> {
    if args.every == 0 {
        return Err(CliError::Validation("--every must be at least 1".into()));
    }
    let cfg = PIIConfig { nu: args.nu, x_min: args.x_min, x_max: args.x_max, grid_size: args.grid_size, ..PIIConfig::default() };
    let sol = solve_hastings_mcleod(&cfg)?;
    let mut t = Table::new("pii", &["x", "q", "qprime", "u"]);
    t.set_num("nu", cfg.nu);
    t.set_num("x_min", cfg.x_min);
    t.set_num("x_max", cfg.x_max);
    t.set("grid_size", cfg.grid_size);
    t.set_num("tol", cfg.tol);
    t.set("max_iter", cfg.max_iter);
    t.set("every", args.every);
    t.note("newton_iterations", sol.iterations);
    t.note("residual", num(sol.residual));
    let (x, q, dq, u) = (sol.grid(), sol.q_values(), sol.qprime_values(), sol.u_values());
    for k in (0..x.len()).step_by(args.every) {
        t.push(vec![x[k].into(), q[k].into(), dq[k].into(), u[k].into()]);
    }
    Ok(t)
}

fn lax_check(args: &LaxArgs) -> CliResult<Table> {
    let (ss, taus) = (parse_list(&args.s)?, parse_list(&args.tau)?);
    let sol = solve_hastings_mcleod(&PIIConfig::new(args.nu))?;
    let points: Vec<(f64, f64)> = taus.iter().flat_map(|&tau| ss.iter().map(move |&s| (s, tau))).collect();
    let reports = points
        .par_iter()
        .map(|&(s, tau)| check_compatibility(&sol, s, tau, args.step))
        .collect::<Result<Vec<_>, _>>()?;
    let mut t = Table::new("lax-check", &["identity", "s", "tau", "residual"]);
    t.set_num("nu", args.nu);
    t.set("s", &args.s);
    t.set("tau", &args.tau);
    t.set_num("step", args.step);
    let (mut first, mut second) = (0.0f64, 0.0f64);
    for r in &reports {
        let mut row = |name: &str, v: f64| t.push(vec![name.into(), r.s.into(), r.tau.into(), v.into()]);
        row("c_prime", r.c_prime);
        row("d_prime", r.d_prime);
        row("d_second", r.d_second);
        if let Some(v) = r.tau_derivative {
            row("tau_derivative", v);
        }
        row("zero_curvature", r.zero_curvature);
        first = first.max(r.first_order_max()).max(r.zero_curvature);
        second = second.max(r.d_second.abs());
    }
    t.note("max_first_order", num(first));
    t.note("max_second_order", num(second));
    Ok(t)
}

fn kernel(args: &KernelArgs) -> CliResult<Table> {
    let points = parse_range(&args.grid)?;
    let sol = solve_hastings_mcleod(&PIIConfig::new(args.nu))?;
    let entries = entries_from_pii(&sol, args.s, args.tau)?;
    let k = TacnodeKernel::new(&MParams::new(args.nu, args.s, args.tau)?, &entries, SolveConfig::default())?;
    let hats = k.hats(&points)?;
    let columns: &[&'static str] = if args.diag_only { &["u", "K"] } else { &["u", "v", "K"] };
    let mut t = Table::new("kernel", columns);
    t.set_num("nu", args.nu);
    t.set_num("s", args.s);
    t.set_num("tau", args.tau);
    t.set("grid", &args.grid);
    t.set("diag_only", args.diag_only);
    t.set_num("imag_tol", args.imag_tol);
    t.set_num("radius", k.solver().radius());
    let mut max_imag = 0.0f64;
    for (i, hu) in hats.iter().enumerate() {
        if args.diag_only {
            let kv = TacnodeKernel::from_hats(hu, hu);
            max_imag = max_imag.max(kv.imag.abs());
            t.push(vec![points[i].into(), kv.value.into()]);
            continue;
        }
        for (j, hv) in hats.iter().enumerate() {
            let kv = TacnodeKernel::from_hats(hu, hv);
            max_imag = max_imag.max(kv.imag.abs());
            t.push(vec![points[i].into(), points[j].into(), kv.value.into()]);
        }
    }
    t.note("max_abs_imag", num(max_imag));
    if max_imag > args.imag_tol {
        return Err(CliError::Numerical(format!("|Im K| reached {max_imag:.3e}, above {:.3e}", args.imag_tol)));
    }
    Ok(t)
}

fn model_config(n: usize, p: &PrecisionArgs) -> ModelConfig {
    let base = ModelConfig::for_paths(n);
    ModelConfig {
        quad_size: p.quad_size.unwrap_or(base.quad_size),
        precision_bits: p.precision_bits.unwrap_or_else(|| precision_for_paths(n)),
        ..base
    }
}

fn finite_n(args: &FiniteArgs) -> CliResult<Table> {
    let points = parse_range(&args.grid)?;
    let ws = WeightSystem::new(args.a, args.b, args.big_t, args.t, args.n, args.alpha)?;
    let cfg = model_config(args.n, &args.precision);
    let model = build_model(&ws, &cfg)?;
    let pairs: Vec<(f64, f64)> = if args.diag_only {
        points.iter().map(|&x| (x, x)).collect()
    } else {
        points.iter().flat_map(|&x| points.iter().map(move |&y| (x, y))).collect()
    };
    let values = pairs.par_iter().map(|&(x, y)| model.kernel(x, y)).collect::<Result<Vec<_>, _>>()?;
    let columns: &[&'static str] = if args.diag_only { &["x", "K_n"] } else { &["x", "y", "K_n"] };
    let mut t = Table::new("finite-n", columns);
    t.set("n", args.n);
    t.set_num("a", args.a);
    t.set_num("b", args.b);
    t.set_num("bigT", args.big_t);
    t.set_num("t", args.t);
    t.set_num("alpha", args.alpha);
    t.set("grid", &args.grid);
    t.set("diag_only", args.diag_only);
    t.set("quad_size", cfg.quad_size);
    t.set("precision_bits", cfg.precision_bits);
    t.note("x_cut", num(model.x_cut()));
    t.note("quadrature_nodes", model.rule().len());
    t.note("pivot_ratio", num(model.condition()));
    t.note("solve_error", num(model.solve_error()));
    for (&(x, y), &k) in pairs.iter().zip(&values) {
        if args.diag_only {
            t.push(vec![x.into(), k.into()]);
        } else {
            t.push(vec![x.into(), y.into(), k.into()]);
        }
    }
    Ok(t)
}

fn scaling(args: &ScalingArgs) -> CliResult<Table> {
    let points = parse_range(&args.grid)?;
    if points.iter().any(|&u| u <= 0.0) {
        return Err(CliError::Validation("scaling grid must be positive".into()));
    }
    let setup = ScalingSetup { a: args.a, b: args.b, alpha: args.alpha, n: args.n, k_shift: args.k, l: args.l, l1: args.l1, l2: args.l2 };
    let cfg = model_config(args.n, &args.precision);
    let grid: Vec<(f64, f64)> = points.iter().flat_map(|&u| points.iter().map(move |&v| (u, v))).collect();
    let report = scaling_compare(&setup, &grid, &cfg)?;
    let mut t = Table::new("scaling", &["u", "v", "finite", "limit", "reldev"]);
    t.set("n", args.n);
    t.set_num("K", args.k);
    t.set_num("L", args.l);
    t.set_num("L1", args.l1);
    t.set_num("L2", args.l2);
    t.set_num("a", args.a);
    t.set_num("b", args.b);
    t.set_num("alpha", args.alpha);
    t.set("grid", &args.grid);
    t.set("quad_size", cfg.quad_size);
    t.set("precision_bits", cfg.precision_bits);
    t.note("t", num(report.weights.t));
    t.note("bigT", num(report.weights.temperature));
    t.note("s_star", num(report.params.s_star));
    t.note("tau_star", num(report.params.tau_star));
    t.note("kappa", num(report.params.kappa));
    t.note("pivot_ratio", num(report.condition));
    t.note("max_reldev", num(report.max_reldev()));
    for r in &report.rows {
        t.push(vec![r.u.into(), r.v.into(), r.finite.into(), r.limit.into(), r.reldev.into()]);
    }
    Ok(t)
}

fn phase(args: &PhaseArgs) -> CliResult<Table> {
    let mut t = Table::new("phase", &["t", "T", "case"]);
    t.set_num("a", args.a);
    t.set_num("b", args.b);
    t.set_num("tol", args.tol);
    if let Ok(ts) = t_star(args.a, args.b) {
        t.note("t_star", num(ts));
    }
    let classify = |tt: f64, big: f64| -> CliResult<Vec<Cell>> {
        let case = classify_phase_with(args.a, args.b, tt, big, args.tol)?;
        Ok(vec![tt.into(), big.into(), case.label().into()])
    };
    match (&args.sweep_t, &args.sweep_big_t, args.t, args.big_t, &args.curve) {
        (Some(st), Some(sb), None, None, None) => {
            t.set("sweep_t", st);
            t.set("sweep_T", sb);
            let (times, temps) = (parse_range(st)?, parse_range(sb)?);
            for &big in &temps {
                for &tt in &times {
                    t.push(classify(tt, big)?);
                }
            }
        }
        (None, None, Some(tt), Some(big), None) => {
            t.set_num("t", tt);
            t.set_num("T", big);
            t.push(classify(tt, big)?);
        }
        (None, None, None, None, Some(c)) => {
            t.set("curve", c);
            t.columns = vec!["t", "T"];
            for (tt, big) in boundary_curve(args.a, args.b, &parse_range(c)?)? {
                t.push(vec![tt.into(), big.into()]);
            }
        }
        _ => {
            return Err(CliError::Validation(
                "phase needs exactly one of: --t with --T, --sweep-t with --sweep-T, or --curve".into(),
            ))
        }
    }
    Ok(t)
}

fn sample(args: &SampleArgs) -> CliResult<Outcome> {
    let mut ens = PathEnsemble::new(args.n, args.m, args.a, args.b, args.big_t, args.alpha, args.seed)?;
    let chain = ChainConfig { burn_in: args.burn_in, sweeps: args.sweeps, thin: args.thin };
    let rate = ens.run(&chain)?;
    let mut t = Table::new("sample", &["path_index", "slice_index", "t", "x"]);
    t.set("n", args.n);
    t.set("m", args.m);
    t.set_num("a", args.a);
    t.set_num("b", args.b);
    t.set_num("bigT", args.big_t);
    t.set_num("alpha", args.alpha);
    t.set("burn_in", args.burn_in);
    t.set("sweeps", args.sweeps);
    t.set("thin", args.thin);
    t.set("seed", args.seed);
    t.note("acceptance", num(rate));
    for i in 0..ens.n {
        for (j, &x) in ens.path(i).iter().enumerate() {
            t.push(vec![i.into(), j.into(), ens.time(j).into(), x.into()]);
        }
    }
    let mid = summarize(&ens, 0.5)?;
    let (low_t, low_x) = lowest_point(&ens);
    let steps = ens.steps();
    let json = json!({
        "n": ens.n,
        "m": ens.m,
        "a": ens.a,
        "b": ens.b,
        "bigT": ens.temperature,
        "alpha": ens.alpha,
        "seed": ens.seed,
        "burn_in_sweeps": ens.burn_in.sweeps,
        "burn_in_acceptance": ens.burn_in.rate(),
        "sweeps": ens.production.sweeps,
        "acceptance": ens.production.rate(),
        "thin": args.thin,
        "retained": ens.retained(),
        "step_min": steps.iter().copied().fold(f64::INFINITY, f64::min),
        "step_max": steps.iter().copied().fold(0.0, f64::max),
        "mid_slice_min": mid.min,
        "mid_slice_max": mid.max,
        "lowest_t": low_t,
        "lowest_x": low_x,
    });
    Ok(Outcome { table: t, json: Some(json.to_string()), json_path: args.stats.clone(), failed: false })
}
