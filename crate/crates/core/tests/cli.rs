//! End-to-end runs of the linmix binary: exit codes, printed output, and
//! file artifacts.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use linmix::io::generate::random_dense;
use linmix::io::matrix_market::{read_matrix_market, read_vector};

fn linmix(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_linmix"))
        .args(args)
        .output()
        .expect("binary should run")
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn code_of(out: &Output) -> i32 {
    out.status.code().expect("no exit code")
}

#[test]
fn converged_solve_exits_zero() {
    let out = linmix(&[
        "solve",
        "--method",
        "gmres",
        "--problem",
        "diag:values=[-1;-2;-3]",
    ]);
    assert_eq!(code_of(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = stdout_of(&out);
    assert!(text.contains("method=gmres"));
    assert!(text.contains("iterations="));
}

#[test]
fn one_distinct_eigenvalue_takes_one_iteration() {
    let out = linmix(&["solve", "--method", "gmres", "--problem", "diag:values=[-1]"]);
    assert_eq!(code_of(&out), 0);
    assert!(stdout_of(&out).contains("iterations=1"));
}

#[test]
fn stagnating_anderson_exits_two() {
    let out = linmix(&[
        "solve",
        "--method",
        "anderson",
        "--problem",
        "cycle:N=6,k=1",
    ]);
    assert_eq!(code_of(&out), 2);
}

#[test]
fn diverging_fixed_point_exits_three() {
    let out = linmix(&["solve", "--method", "fixed", "--problem", "diag:values=[1;2]"]);
    assert_eq!(code_of(&out), 3);
}

#[test]
fn usage_problems_exit_sixty_four() {
    for args in [
        vec!["solve", "--method", "gmres", "--problem", "diag:values=[-1]", "--warp"],
        vec!["solve", "--method", "warp", "--problem", "diag:values=[-1]"],
        vec!["solve", "--method", "anderson", "--problem", "diag:values=[-1]", "--window", "0"],
        vec!["solve", "--method", "gmres", "--problem", "fractal:N=4"],
        vec!["solve", "--method", "gmres", "--problem", "cycle:N=6,q=1"],
        vec!["verify", "--problem", "diag:values=[-1]", "--suite", "everything"],
    ] {
        let out = linmix(&args);
        assert_eq!(code_of(&out), 64, "args: {args:?}");
    }
}

#[test]
fn unreadable_input_file_exits_seventy_four() {
    let out = linmix(&[
        "solve",
        "--method",
        "gmres",
        "--problem",
        "file:A=/nonexistent/a.mtx,b=[1;2]",
    ]);
    assert_eq!(code_of(&out), 74);
}

#[test]
fn relation_checks_pass_at_default_tolerance() {
    let out = linmix(&[
        "verify",
        "--problem",
        "random_dense:N=8,cond=100",
        "--seed",
        "7",
    ]);
    assert_eq!(code_of(&out), 0);
    let text = stdout_of(&out);
    assert!(text.contains("PASS"));
    assert!(!text.contains("FAIL"));
}

#[test]
fn unreachable_tolerance_fails_verification_with_exit_one() {
    let out = linmix(&[
        "verify",
        "--problem",
        "random_dense:N=8,cond=100",
        "--seed",
        "7",
        "--tol",
        "1e-16",
    ]);
    assert_eq!(code_of(&out), 1);
    assert!(stdout_of(&out).contains("FAIL"));
}

#[test]
fn diagnose_prints_the_index_line() {
    let out = linmix(&["diagnose", "--problem", "cycle:N=6,k=1"]);
    assert_eq!(code_of(&out), 0);
    assert_eq!(stdout_of(&out), "nu=6 kappa_A=1 eta_G=0 case=ii\n");
}

fn solve_to(path: &Path, format: &str) {
    let out = linmix(&[
        "solve",
        "--method",
        "anderson",
        "--problem",
        "random_dense:N=6,cond=50",
        "--seed",
        "3",
        "--beta",
        "0.8",
        "--out",
        path.to_str().unwrap(),
        "--format",
        format,
    ]);
    assert_eq!(code_of(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn exports_are_deterministic_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    for format in ["csv", "json"] {
        let first = dir.path().join(format!("first.{format}"));
        let second = dir.path().join(format!("second.{format}"));
        solve_to(&first, format);
        solve_to(&second, format);
        let a = fs::read(&first).unwrap();
        let b = fs::read(&second).unwrap();
        assert!(!a.is_empty());
        assert_eq!(a, b, "{format} export must be byte-identical across runs");
    }
}

#[test]
fn csv_export_has_header_and_rows() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trace.csv");
    solve_to(&path, "csv");
    let body = fs::read_to_string(&path).unwrap();
    assert!(body.contains("# method=anderson"));
    assert!(body.contains("n,residual_norm,beta,alpha_last,stagnated"));
    assert!(body.lines().any(|l| l.starts_with("0,")));
}

#[test]
fn generated_problem_round_trips_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("problem");
    let out = linmix(&[
        "generate",
        "--name",
        "random_dense",
        "--params",
        "N=5,cond=10",
        "--seed",
        "9",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code_of(&out), 0);

    let p = random_dense(5, 10.0, 9).unwrap();
    let a = read_matrix_market(out_dir.join("A.mtx")).unwrap();
    assert_eq!(a.rows(), 5);
    for i in 0..5 {
        for j in 0..5 {
            assert_eq!(a.get(i, j).to_bits(), p.a.get(i, j).to_bits());
        }
    }
    let b = read_vector(out_dir.join("b.mtx")).unwrap();
    assert_eq!(b, p.b);
    let x0 = read_vector(out_dir.join("x0.mtx")).unwrap();
    assert_eq!(x0, p.x0);

    let a_arg = format!("file:A={},b={}",
        out_dir.join("A.mtx").display(),
        out_dir.join("b.mtx").display());
    let out = linmix(&["solve", "--method", "gmres", "--problem", &a_arg]);
    assert_eq!(code_of(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
}
