//! Command-line pipeline: validate, solve, optimize, check gradients, export.
//!
//! Every command takes `--config PATH` (a [`RunConfig`](crate::config::RunConfig)
//! JSON file) plus optional `--out DIR` and `--verbose`. Exit codes: 0 on
//! success, 2 on validation failure, 3 when the optimizer stops without
//! converging (results are still written), 4 on solver failure.

use crate::config::{ConfigError, RunConfig};
use crate::fem::assemble::{assemble_conductor_mass_matrix, assemble_unweighted_curl_matrix};
use crate::geometry::validate_topology;
use crate::kernels::{ControlVector, Materials};
use crate::optimizer::{
    corner_certificate, optimize, ControlBox, CostWeights, Objective, OptOptions,
};
use crate::state::{Model, ModelError, MULTIPLIER_WARN_THRESHOLD};
use crate::targets::build_target;
use crate::{CMat3, CVec3, Vec3, C64};
use clap::{Parser, Subcommand};
use rand::{Rng, SeedableRng};
use std::path::{Path, PathBuf};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NON_CONVERGENCE: i32 = 3;
pub const EXIT_SOLVER: i32 = 4;

#[derive(Parser, Debug)]
#[command(
    name = "eddy-dipole",
    version,
    about = "Edge-element solver and dipole-intensity optimizer for the time-harmonic eddy-current system"
)]
pub struct Cli {
    /// Run configuration (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides the config's output_dir).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Print progress details to stderr.
    #[arg(long, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check mesh topology, the homogeneity precondition, kernel residuals
    /// and assembled-matrix invariants.
    Validate,
    /// Solve the state for the configured control and write DOFs, fields and
    /// a summary.
    SolveState,
    /// Solve state and adjoint pair for the configured control and targets.
    SolveAdjoint,
    /// Run the projected-gradient optimization.
    Optimize,
    /// Compare the adjoint gradient against central differences at random
    /// admissible controls.
    CheckGradient {
        /// Number of sample controls.
        #[arg(long, default_value_t = 10)]
        samples: usize,
        /// Finite-difference step (defaults to 1e-3 * p_max).
        #[arg(long)]
        step: Option<f64>,
    },
    /// Solve the state and write only the VTU field file.
    ExportVtu,
}

struct Failure {
    code: i32,
    stage: &'static str,
    message: String,
}

impl Failure {
    fn new(code: i32, stage: &'static str, message: impl ToString) -> Self {
        Failure { code, stage, message: message.to_string() }
    }
}

fn config_failure(e: ConfigError) -> Failure {
    Failure::new(EXIT_VALIDATION, "config", e)
}

fn model_failure(e: ModelError) -> Failure {
    match e {
        ModelError::Solver(s) => Failure::new(EXIT_SOLVER, "factorization", s),
        other => Failure::new(EXIT_VALIDATION, "model", other),
    }
}

fn solver_failure(e: crate::fem::solver::SolverError) -> Failure {
    Failure::new(EXIT_SOLVER, "solve", e)
}

fn io_failure(e: std::io::Error) -> Failure {
    Failure::new(EXIT_SOLVER, "output", e)
}

pub fn run(cli: Cli) -> i32 {
    match dispatch(cli) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error [{}]: {}", f.stage, f.message);
            f.code
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    let config_path = cli
        .config
        .as_deref()
        .ok_or_else(|| Failure::new(EXIT_VALIDATION, "config", "--config PATH is required"))?;
    let config = RunConfig::from_path(config_path).map_err(config_failure)?;
    let out_dir = cli.out.clone().unwrap_or_else(|| config.output_dir.clone());
    std::fs::create_dir_all(&out_dir).map_err(io_failure)?;
    let verbose = cli.verbose;

    match cli.command {
        Command::Validate => cmd_validate(&config, &out_dir, verbose),
        Command::SolveState => cmd_solve_state(&config, &out_dir, verbose),
        Command::SolveAdjoint => cmd_solve_adjoint(&config, &out_dir, verbose),
        Command::Optimize => cmd_optimize(&config, &out_dir, verbose),
        Command::CheckGradient { samples, step } => {
            cmd_check_gradient(&config, &out_dir, samples, step, verbose)
        }
        Command::ExportVtu => cmd_export_vtu(&config, &out_dir, verbose),
    }
}

fn build_model(config: &RunConfig, verbose: bool) -> Result<Model, Failure> {
    let mesh = config.build_mesh().map_err(config_failure)?;
    let problem = config.build_problem().map_err(config_failure)?;
    if verbose {
        eprintln!(
            "mesh: {} tets, {} edges, {} vertices",
            mesh.n_tets(),
            mesh.n_edges(),
            mesh.n_vertices()
        );
    }
    let model = Model::build(mesh, problem, config.solver.residual_tol).map_err(model_failure)?;
    if verbose {
        eprintln!(
            "model: {} edge DOFs, {} W DOFs, {} masked tets",
            model.edge.n_dofs(),
            model.w.n_dofs(),
            model.mask.len()
        );
    }
    Ok(model)
}

fn objective<'a>(config: &RunConfig, model: &'a Model) -> Result<Objective<'a>, Failure> {
    let target = build_target(&config.targets, model, config.control.p_max)
        .map_err(|e| Failure::new(EXIT_VALIDATION, "targets", e))?;
    Ok(Objective::new(
        model,
        target,
        CostWeights {
            nu_e: config.weights.nu_e,
            nu_h: config.weights.nu_h,
            nu: config.weights.nu,
        },
    ))
}

fn cmd_validate(config: &RunConfig, out_dir: &Path, verbose: bool) -> Result<(), Failure> {
    let mesh = config.build_mesh().map_err(config_failure)?;
    let mut checks: Vec<(String, bool, String)> = Vec::new();

    let topo = validate_topology(&mesh);
    checks.push((
        "topology".into(),
        topo.pass(),
        if topo.pass() { "conductor, insulator and interface connected".into() } else { topo.failures.join("; ") },
    ));

    let problem = match config.build_problem() {
        Ok(p) => Some(p),
        Err(e) => {
            checks.push(("homogeneity".into(), false, e.to_string()));
            None
        }
    };

    if let Some(problem) = &problem {
        // ball strictly inside the conductor
        match crate::geometry::classify_observation_region(&mesh, &problem.x0, problem.ball_radius)
        {
            Ok(mask) => checks.push((
                "homogeneity".into(),
                true,
                format!("ball inside the conductor; {} of {} tets observed", mask.len(), mesh.n_tets()),
            )),
            Err(e) => checks.push(("homogeneity".into(), false, e.to_string())),
        }

        // kernel equation residual at a handful of points (nested 4th-order
        // central differences)
        let ctrl = ControlVector::new(Vec3::new(0.3, -0.2, 0.5), problem);
        let mut worst: f64 = 0.0;
        for dir in [Vec3::new(1.0, 0.3, -0.4), Vec3::new(-0.5, 0.9, 0.2)] {
            let x = problem.x0 + dir.normalize() * (1.5 * problem.ball_radius);
            let f = |y: &Vec3| problem.eval_k(y, &ctrl).unwrap();
            let h = 1e-3;
            let cc = fd_curl4(&|y: &Vec3| fd_curl4(&f, y, h), &x, h);
            let z2k = f(&x) * (problem.z * problem.z);
            worst = worst.max((cc - z2k).norm() / z2k.norm());
        }
        checks.push((
            "kernel-equation".into(),
            worst < 1e-4,
            format!("max relative residual of curl curl K - z^2 K: {worst:.3e}"),
        ));
    }

    if topo.pass() {
        if let Some(problem) = problem.clone() {
            match Model::build(mesh, problem, config.solver.residual_tol) {
                Ok(model) => {
                    let sym_a = model.a_plus.mat.transpose_defect();
                    let scale_a = model.a_plus.mat.max_abs();
                    checks.push((
                        "a-symmetry".into(),
                        sym_a <= 1e-13 * scale_a,
                        format!("max |A+ - (A+)^T| = {sym_a:.3e} vs scale {scale_a:.3e}"),
                    ));
                    let conj_defect = model
                        .a_plus
                        .mat
                        .iter()
                        .map(|(r, c, v)| (v.conj() - model.a_minus.mat.get(r, c)).norm())
                        .fold(0.0f64, f64::max);
                    checks.push((
                        "a-pair".into(),
                        conj_defect <= 1e-13 * scale_a,
                        format!("max |conj(A+) - A-| = {conj_defect:.3e}"),
                    ));
                    let herm_b = model.b_op.mat.hermitian_defect();
                    checks.push((
                        "b-hermitian".into(),
                        herm_b == 0.0,
                        format!("max |B - B^H| = {herm_b:.3e}"),
                    ));
                    let (violations, samples) = coercivity_violations(&model, 20, 99);
                    checks.push((
                        "coercivity".into(),
                        violations == 0,
                        format!("{violations} violations in {samples} random fields"),
                    ));
                }
                Err(e) => checks.push(("model".into(), false, e.to_string())),
            }
        }
    }

    let pass = checks.iter().all(|(_, ok, _)| *ok);
    for (name, ok, detail) in &checks {
        println!("{}: {} ({})", name, if *ok { "pass" } else { "FAIL" }, detail);
    }
    let report = serde_json::json!({
        "pass": pass,
        "checks": checks
            .iter()
            .map(|(name, ok, detail)| serde_json::json!({"name": name, "pass": ok, "detail": detail}))
            .collect::<Vec<_>>(),
    });
    crate::io::write_json(&out_dir.join("validation.json"), &report).map_err(io_failure)?;
    if verbose {
        eprintln!("report written to {}", out_dir.join("validation.json").display());
    }
    if pass {
        Ok(())
    } else {
        Err(Failure::new(EXIT_VALIDATION, "validate", "one or more checks failed"))
    }
}

/// Discrete coercivity probe: `|v^H A+ v|^2 >= mu_max^-2 |curl v|^4
/// + w^2 sigma_min^2 |v|_C^4` for random DOF vectors.
pub fn coercivity_violations(model: &Model, n_samples: usize, seed: u64) -> (usize, usize) {
    let curl_mat = assemble_unweighted_curl_matrix(&model.mesh, &model.edge);
    let mass_mat = assemble_conductor_mass_matrix(&model.mesh, &model.edge);
    let (_, mu_max) = Materials::eigen_range(&[
        model.problem.materials.mu(crate::geometry::RegionTag::Conductor),
        model.problem.materials.mu(crate::geometry::RegionTag::Insulator),
    ]);
    let (sigma_min, _) = Materials::eigen_range(&[
        model.problem.materials.sigma(crate::geometry::RegionTag::Conductor)
    ]);
    let omega = model.problem.omega;
    let n = model.edge.n_dofs();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut violations = 0;
    for _ in 0..n_samples {
        let v: Vec<C64> = (0..n)
            .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let av = model.a_plus.mat.matvec(&v);
        let quad: C64 = v.iter().zip(&av).map(|(x, y)| x.conj() * y).sum();
        let curl_v = curl_mat.matvec(&v);
        let curl_sq: f64 = v.iter().zip(&curl_v).map(|(x, y)| (x.conj() * y).re).sum();
        let mass_v = mass_mat.matvec(&v);
        let mass_sq: f64 = v.iter().zip(&mass_v).map(|(x, y)| (x.conj() * y).re).sum();
        let lhs = quad.norm_sqr();
        let rhs = curl_sq.powi(2) / (mu_max * mu_max)
            + omega * omega * sigma_min * sigma_min * mass_sq.powi(2);
        if lhs < rhs * (1.0 - 1e-12) {
            violations += 1;
        }
    }
    (violations, n_samples)
}

fn fd_curl4(f: &dyn Fn(&Vec3) -> CVec3, x: &Vec3, h: f64) -> CVec3 {
    let mut jac = CMat3::zeros();
    for k in 0..3 {
        let mut x2p = *x;
        let mut xp = *x;
        let mut xm = *x;
        let mut x2m = *x;
        x2p[k] += 2.0 * h;
        xp[k] += h;
        xm[k] -= h;
        x2m[k] -= 2.0 * h;
        let (f2p, fp, fm, f2m) = (f(&x2p), f(&xp), f(&xm), f(&x2m));
        for i in 0..3 {
            jac[(i, k)] = (-f2p[i] + fp[i] * 8.0 - fm[i] * 8.0 + f2m[i]) / (12.0 * h);
        }
    }
    CVec3::new(
        jac[(2, 1)] - jac[(1, 2)],
        jac[(0, 2)] - jac[(2, 0)],
        jac[(1, 0)] - jac[(0, 1)],
    )
}

fn state_summary(model: &Model, state: &crate::state::StateSplit) -> serde_json::Value {
    let q_norm = crate::fem::sparse::vec_norm(&state.q);
    let eta_norm = crate::fem::sparse::vec_norm(&state.eta);
    let mut warnings: Vec<String> = Vec::new();
    if state.q_stats.multiplier_rel > MULTIPLIER_WARN_THRESHOLD {
        warnings.push(format!(
            "constraint-compatibility degradation: multiplier norm {:.3e} above {:.1e} of |Q|",
            state.q_stats.multiplier_rel, MULTIPLIER_WARN_THRESHOLD
        ));
    }
    let _ = model;
    serde_json::json!({
        "p": [state.control.p[0], state.control.p[1], state.control.p[2]],
        "q_norm": q_norm,
        "eta_norm": eta_norm,
        "saddle_residual": state.q_stats.residual,
        "constraint_rel": state.q_stats.constraint_rel,
        "multiplier_rel": state.q_stats.multiplier_rel,
        "eta_residual": state.eta_residual,
        "warnings": warnings,
    })
}

fn cmd_solve_state(config: &RunConfig, out_dir: &Path, verbose: bool) -> Result<(), Failure> {
    let model = build_model(config, verbose)?;
    let state = model.solve_state(config.control_p()).map_err(solver_failure)?;
    crate::io::write_dof_json(&out_dir.join("state_eta.json"), "eta", &state.eta)
        .map_err(io_failure)?;
    crate::io::write_dof_json(&out_dir.join("state_q.json"), "q", &state.q).map_err(io_failure)?;
    crate::io::vtu::write_vtu(&out_dir.join("state.vtu"), &model, &state).map_err(io_failure)?;
    let summary = state_summary(&model, &state);
    if let Some(warnings) = summary["warnings"].as_array() {
        for w in warnings {
            eprintln!("warning: {}", w.as_str().unwrap_or_default());
        }
    }
    crate::io::write_json(&out_dir.join("state_summary.json"), &summary).map_err(io_failure)?;
    Ok(())
}

fn cmd_solve_adjoint(config: &RunConfig, out_dir: &Path, verbose: bool) -> Result<(), Failure> {
    let model = build_model(config, verbose)?;
    let obj = objective(config, &model)?;
    let state = model.solve_state(config.control_p()).map_err(solver_failure)?;
    let target = |t: usize, x: &Vec3| obj.target.eval(t, x);
    let adjoint = model
        .solve_adjoint(&state, &target, obj.weights.nu_e, obj.weights.nu_h)
        .map_err(solver_failure)?;
    crate::io::write_dof_json(&out_dir.join("adjoint_t.json"), "t", &adjoint.t)
        .map_err(io_failure)?;
    crate::io::write_dof_json(&out_dir.join("adjoint_psi.json"), "psi", &adjoint.psi)
        .map_err(io_failure)?;
    let summary = serde_json::json!({
        "state": state_summary(&model, &state),
        "t_norm": crate::fem::sparse::vec_norm(&adjoint.t),
        "psi_norm": crate::fem::sparse::vec_norm(&adjoint.psi),
        "t_saddle_residual": adjoint.t_stats.residual,
        "t_constraint_rel": adjoint.t_stats.constraint_rel,
        "psi_residual": adjoint.psi_residual,
    });
    crate::io::write_json(&out_dir.join("adjoint_summary.json"), &summary).map_err(io_failure)?;
    Ok(())
}

fn cmd_optimize(config: &RunConfig, out_dir: &Path, verbose: bool) -> Result<(), Failure> {
    let model = build_model(config, verbose)?;
    let obj = objective(config, &model)?;
    let bounds = ControlBox { p_max: config.control.p_max };
    let opts = OptOptions {
        tol: config.solver.stationarity_tol,
        max_iter: config.solver.max_iterations,
    };
    let (result, trace) = optimize(&obj, &config.control_p(), &bounds, &opts)
        .map_err(|e| Failure::new(EXIT_SOLVER, "optimize", e))?;
    crate::io::write_trace_csv(&out_dir.join("trace.csv"), &trace).map_err(io_failure)?;

    // stationarity certificate over the box corners at the final iterate
    let p_star = Vec3::from(result.p_star);
    let g = obj.gradient(&p_star).map_err(solver_failure)?.g;
    let certified = corner_certificate(&p_star, &g, &bounds, config.solver.stationarity_tol.max(1e-8));
    let mut doc = serde_json::to_value(&result).unwrap();
    doc["corner_certificate"] = serde_json::json!(certified);
    crate::io::write_json(&out_dir.join("opt_result.json"), &doc).map_err(io_failure)?;
    if verbose {
        eprintln!(
            "optimize: {} iterations, F* = {:.6e}, residual = {:.3e}",
            result.iterations, result.f_star, result.stationarity_residual
        );
    }
    if result.converged {
        Ok(())
    } else {
        Err(Failure::new(
            EXIT_NON_CONVERGENCE,
            "optimize",
            format!(
                "stopped after {} iterations with stationarity residual {:.3e}",
                result.iterations, result.stationarity_residual
            ),
        ))
    }
}

fn cmd_check_gradient(
    config: &RunConfig,
    out_dir: &Path,
    samples: usize,
    step: Option<f64>,
    verbose: bool,
) -> Result<(), Failure> {
    const THRESHOLD: f64 = 1e-7;
    let model = build_model(config, verbose)?;
    let obj = objective(config, &model)?;
    let aux = model.build_aux_lift().map_err(solver_failure)?;
    let h = step.unwrap_or(1e-3 * config.control.p_max);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    let mut rows = Vec::new();
    let mut max_dev: f64 = 0.0;
    for _ in 0..samples {
        let p = Vec3::new(
            rng.gen_range(-0.9..0.9) * config.control.p_max,
            rng.gen_range(-0.9..0.9) * config.control.p_max,
            rng.gen_range(-0.9..0.9) * config.control.p_max,
        );
        let info = obj.gradient(&p).map_err(solver_failure)?;
        let fd = obj.fd_gradient(&p, h).map_err(solver_failure)?;
        let dev = (info.g - fd).norm() / (1.0 + info.g.norm());
        max_dev = max_dev.max(dev);
        let lift = obj.gradient_via_lift(&info, &aux);
        let lift_gap = (lift - info.g).norm() / (1.0 + info.g.norm());
        rows.push(serde_json::json!({
            "p": [p[0], p[1], p[2]],
            "adjoint": [info.g[0], info.g[1], info.g[2]],
            "finite_difference": [fd[0], fd[1], fd[2]],
            "relative_deviation": dev,
            "lift_route_gap": lift_gap,
        }));
        if verbose {
            eprintln!("p = {:?}: deviation {dev:.3e}, lift-route gap {lift_gap:.3e}", [p[0], p[1], p[2]]);
        }
    }
    let pass = max_dev <= THRESHOLD;
    let report = serde_json::json!({
        "samples": samples,
        "fd_step": h,
        "max_relative_deviation": max_dev,
        "threshold": THRESHOLD,
        "pass": pass,
        "aux_lift_constraint_rel": aux.constraint_rel,
        "rows": rows,
    });
    crate::io::write_json(&out_dir.join("gradient_check.json"), &report).map_err(io_failure)?;
    println!(
        "gradient check: max relative deviation {max_dev:.3e} over {samples} samples ({})",
        if pass { "pass" } else { "FAIL" }
    );
    if pass {
        Ok(())
    } else {
        Err(Failure::new(
            EXIT_VALIDATION,
            "check-gradient",
            format!("max deviation {max_dev:.3e} above {THRESHOLD:.1e}"),
        ))
    }
}

fn cmd_export_vtu(config: &RunConfig, out_dir: &Path, verbose: bool) -> Result<(), Failure> {
    let model = build_model(config, verbose)?;
    let state = model.solve_state(config.control_p()).map_err(solver_failure)?;
    crate::io::vtu::write_vtu(&out_dir.join("fields.vtu"), &model, &state).map_err(io_failure)?;
    Ok(())
}
