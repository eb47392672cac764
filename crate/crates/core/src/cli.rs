//! Command-line interface: solve, diagnose, verify, generate.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::diagnostics::{
    anderson_index, classify_with_tol, grade, gmres_stagnation_index, verify_equivalence,
    verify_optimized, verify_projection_identities, verify_prop_structure, RelationCheck,
    DEFAULT_VERIFY_TOL,
};
use crate::error::{Error, Result};
use crate::io::export::{export_trace, ExportFormat};
use crate::io::generate::{generate_problem, parse_params, ProblemSpec};
use crate::io::matrix_market::{write_matrix_market, write_vector};
use crate::problem::{LinearProblem, MixingSchedule, SolveConfig, Window};
use crate::solvers::{
    anderson_run, fixed_point_run, gmres_run, optimized_anderson_run, simple_mixing_run,
};
use crate::trace::{Method, SolverTrace, Termination};

const EXIT_OK: i32 = 0;
const EXIT_VERIFY_FAILED: i32 = 1;
const EXIT_STAGNATION: i32 = 2;
const EXIT_NOT_CONVERGED: i32 = 3;
const EXIT_USAGE: i32 = 64;
const EXIT_FILE: i32 = 74;

#[derive(Parser)]
#[command(
    name = "linmix",
    version,
    about = "Iterative solvers for A*x + b = 0 with stagnation diagnostics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one solver and print a one-line summary.
    Solve(SolveArgs),
    /// Print the convergence indices and the case classification.
    Diagnose(DiagnoseArgs),
    /// Check the relations between Anderson and GMRES runs.
    Verify(VerifyArgs),
    /// Write a generated problem as Matrix Market files.
    Generate(GenerateArgs),
}

#[derive(Args)]
struct SolveArgs {
    /// One of: fixed, simple, gmres, anderson, opt-anderson.
    #[arg(long)]
    method: String,
    /// Inline spec (cycle:N=6,k=1) or file spec (file:A=a.mtx,b=b.mtx).
    #[arg(long)]
    problem: String,
    /// Constant mixing parameter (anderson and simple; default 1).
    #[arg(long, conflicts_with = "betas")]
    beta: Option<f64>,
    /// Per-step mixing parameters, comma-separated (anderson only).
    #[arg(long)]
    betas: Option<String>,
    /// History window: a depth m, or "inf".
    #[arg(long, default_value = "inf")]
    window: String,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Residual norm tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Seed for generated problems and random starting points.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the trace to this path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Trace format: csv or json.
    #[arg(long, default_value = "csv")]
    format: String,
}

#[derive(Args)]
struct DiagnoseArgs {
    #[arg(long)]
    problem: String,
    /// Verification tolerance for the cross-checks behind the report.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    problem: String,
    /// all, equivalence, structure, optimized, or projections.
    #[arg(long, default_value = "all")]
    suite: String,
    /// Maximum accepted relative deviation.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct GenerateArgs {
    /// Generator name: cycle, random_dense, shifted_spd, or diag.
    #[arg(long)]
    name: String,
    /// Generator parameters as k=v,k=v.
    #[arg(long, default_value = "")]
    params: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory for A.mtx, b.mtx, x0.mtx (created if missing).
    #[arg(long)]
    out: PathBuf,
}

/// Entry point taking full argv (program name first). Returns the process
/// exit code instead of exiting, so tests can drive it directly.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Solve(args) => run_solve(args),
        Command::Diagnose(args) => run_diagnose(args),
        Command::Verify(args) => run_verify(args),
        Command::Generate(args) => run_generate(args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::Io(_) | Error::Json(_) | Error::Parse { .. } => EXIT_FILE,
        _ => EXIT_USAGE,
    }
}

fn build_problem(spec: &str, seed: u64) -> Result<LinearProblem> {
    ProblemSpec::parse(spec, seed)?.build()
}

fn build_config(max_iter: Option<usize>, tol: Option<f64>) -> Result<SolveConfig> {
    let mut cfg = SolveConfig::default();
    if let Some(m) = max_iter {
        cfg.max_iter = m;
    }
    if let Some(t) = tol {
        cfg.residual_tol = t;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn parse_window(s: &str) -> Result<Window> {
    if s == "inf" {
        return Ok(Window::Infinite);
    }
    let m: usize = s
        .parse()
        .map_err(|_| Error::InvalidParameter(format!("window must be a depth or 'inf', got '{s}'")))?;
    let w = Window::Finite(m);
    w.validate()?;
    Ok(w)
}

fn parse_beta_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidParameter(format!("invalid mixing parameter '{t}'")))
        })
        .collect()
}

fn run_solve(args: SolveArgs) -> Result<i32> {
    let method = Method::parse(&args.method)?;
    let p = build_problem(&args.problem, args.seed)?;
    let cfg = build_config(args.max_iter, args.tol)?;
    let window = parse_window(&args.window)?;
    let schedule = match (&args.betas, args.beta) {
        (Some(list), _) => MixingSchedule::explicit(parse_beta_list(list)?),
        (None, Some(b)) => MixingSchedule::constant(b),
        (None, None) => MixingSchedule::constant(1.0),
    };

    let trace: SolverTrace = match method {
        Method::FixedPoint => fixed_point_run(&p, &cfg)?,
        Method::SimpleMixing => {
            let beta = args.beta.unwrap_or(1.0);
            if args.betas.is_some() {
                return Err(Error::InvalidParameter(
                    "simple mixing takes a single --beta".into(),
                ));
            }
            simple_mixing_run(&p, beta, &cfg)?
        }
        Method::Gmres => gmres_run(&p, &cfg)?,
        Method::Anderson => anderson_run(&p, &schedule, window, &cfg)?,
        Method::OptimizedAnderson => optimized_anderson_run(&p, &cfg)?,
    };

    println!(
        "method={} iterations={} final_residual={:.16e} termination={}",
        trace.method,
        trace.steps(),
        trace.final_residual_norm(),
        trace.termination
    );
    if let Some(path) = &args.out {
        let format = ExportFormat::parse(&args.format)?;
        export_trace(&trace, &p, format, path)?;
    }
    Ok(match trace.termination {
        Termination::ResidualTolMet => EXIT_OK,
        Termination::StagnationDetected => EXIT_STAGNATION,
        Termination::MaxIter | Termination::Breakdown => EXIT_NOT_CONVERGED,
    })
}

fn run_diagnose(args: DiagnoseArgs) -> Result<i32> {
    let p = build_problem(&args.problem, args.seed)?;
    let cfg = SolveConfig::default();
    let report = classify_with_tol(&p, &cfg, args.tol.unwrap_or(DEFAULT_VERIFY_TOL))?;
    fn idx(v: Option<usize>) -> String {
        v.map(|x| x.to_string()).unwrap_or_else(|| "-".into())
    }
    println!(
        "nu={} kappa_A={} eta_G={} case={}",
        idx(report.grade),
        idx(report.anderson_index),
        idx(report.stagnation_index),
        report.case
    );
    for check in report.relation_checks.iter().filter(|c| !c.passed) {
        eprintln!(
            "warning: cross-check {} failed (deviation {:.3e})",
            check.id, check.max_deviation
        );
    }
    Ok(EXIT_OK)
}

fn run_verify(args: VerifyArgs) -> Result<i32> {
    let p = build_problem(&args.problem, args.seed)?;
    let cfg = SolveConfig::default();
    let tol = args.tol.unwrap_or(DEFAULT_VERIFY_TOL);

    let gt = gmres_run(&p, &cfg)?;
    let at = anderson_run(&p, &MixingSchedule::constant(1.0), Window::Infinite, &cfg)?;
    let ot = optimized_anderson_run(&p, &cfg)?;
    let nu = grade(&p.a, &p.r0, cfg.dep_tol)?;
    let kappa = anderson_index(&at, cfg.dep_tol)?.value;
    let eta = gmres_stagnation_index(&gt, cfg.dep_tol)?;

    let mut checks: Vec<RelationCheck> = Vec::new();
    let suite = args.suite.as_str();
    let mut known = false;
    if suite == "all" || suite == "equivalence" {
        known = true;
        checks.extend(verify_equivalence(&p, &at, &gt, tol)?);
    }
    if suite == "all" || suite == "structure" {
        known = true;
        checks.extend(verify_prop_structure(&p, &at, &gt, nu, kappa, tol)?);
    }
    if suite == "all" || suite == "optimized" {
        known = true;
        checks.extend(verify_optimized(&p, &ot, &gt, kappa, eta, tol)?);
    }
    if suite == "all" || suite == "projections" {
        known = true;
        checks.extend(verify_projection_identities(&p, &gt, tol)?);
        checks.extend(verify_projection_identities(&p, &at, tol)?);
    }
    if !known {
        return Err(Error::InvalidParameter(format!(
            "unknown suite '{suite}'; expected all, equivalence, structure, optimized, or projections"
        )));
    }

    for check in &checks {
        println!(
            "{:<32} {:>12.3e}  {}",
            check.id,
            check.max_deviation,
            if check.passed { "PASS" } else { "FAIL" }
        );
    }
    let all_passed = checks.iter().all(|c| c.passed);
    Ok(if all_passed { EXIT_OK } else { EXIT_VERIFY_FAILED })
}

fn run_generate(args: GenerateArgs) -> Result<i32> {
    let params: BTreeMap<String, String> = parse_params(&args.params)?;
    let p = generate_problem(&args.name, &params, args.seed)?;
    std::fs::create_dir_all(&args.out)?;
    let a_path = args.out.join("A.mtx");
    let b_path = args.out.join("b.mtx");
    let x0_path = args.out.join("x0.mtx");
    write_matrix_market(&a_path, &p.a)?;
    write_vector(&b_path, &p.b)?;
    write_vector(&x0_path, &p.x0)?;
    println!(
        "wrote {} {} {}",
        a_path.display(),
        b_path.display(),
        x0_path.display()
    );
    Ok(EXIT_OK)
}
