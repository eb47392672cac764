//! Convergence indices and case classification.
//!
//! Three integers control everything a run can do on a linear problem: the
//! grade of the initial residual (dimension of the largest independent
//! Krylov chain), the Anderson index (first linear dependence among iterate
//! differences), and the GMRES stagnation index (first repeated iterate).
//! Their arithmetic decides whether Anderson mixing reaches the solution or
//! locks onto a wrong point forever.

mod verify;

pub use verify::{
    verify_equivalence, verify_optimized, verify_projection_identities, verify_prop_structure,
};

use crate::error::{Error, Result};
use crate::linalg::{Matrix, OrthonormalBasis, Vector};
use crate::problem::{LinearProblem, MixingSchedule, SolveConfig, Window};
use crate::solvers::{anderson_run, gmres_run};
use crate::trace::{Method, SolverTrace, Termination};

/// Default tolerance for relation verification.
pub const DEFAULT_VERIFY_TOL: f64 = 1e-8;

/// Result of one verified relation.
#[derive(Debug, Clone)]
pub struct RelationCheck {
    pub id: String,
    pub max_deviation: f64,
    pub passed: bool,
}

impl RelationCheck {
    /// Equality-style check: passes when the deviation is within tol.
    pub fn equality(id: &str, max_deviation: f64, tol: f64) -> Self {
        Self {
            id: id.into(),
            max_deviation,
            passed: max_deviation <= tol,
        }
    }

    /// Predicate-style check: `violation` is how far the worst case missed
    /// the required margin (0 when satisfied).
    pub fn predicate(id: &str, violation: f64) -> Self {
        Self {
            id: id.into(),
            max_deviation: violation,
            passed: violation == 0.0,
        }
    }
}

/// Smallest n at which r0, A r0, ..., A^n r0 become linearly dependent.
///
/// Computed by orthonormalizing the Krylov chain incrementally; the result is
/// in [1, N] for any nonzero r0 and invertible A.
pub fn grade(a: &Matrix, r0: &Vector, dep_tol: f64) -> Result<usize> {
    if r0.is_zero() {
        return Err(Error::ZeroResidual);
    }
    let n_dim = r0.len();
    let mut basis = OrthonormalBasis::new();
    basis.push(r0, dep_tol)?;
    for n in 1..=n_dim {
        let last = basis.vectors().last().expect("basis nonempty").clone();
        let w = a.matvec(&last)?;
        let out = basis.push(&w, dep_tol)?;
        if out.dependent {
            return Ok(n);
        }
    }
    Ok(n_dim)
}

/// Anderson index computed from a trace, plus whether the defining linear
/// dependence was actually reached within the recorded iterates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AndersonIndex {
    pub value: usize,
    /// False when the trace ended with all differences still independent; the
    /// value is then the certified lower bound (number of recorded steps).
    pub observed: bool,
}

/// First n at which the difference vectors x_1 - x_0, ..., x_{n+1} - x_0
/// become linearly dependent.
///
/// A zero first difference (the optimized variant frozen at the start)
/// yields 1, the smallest admissible index.
pub fn anderson_index(trace: &SolverTrace, dep_tol: f64) -> Result<AndersonIndex> {
    if !trace.method.is_anderson() {
        return Err(Error::TraceMismatch(format!(
            "anderson index needs an anderson trace, got {}",
            trace.method
        )));
    }
    if trace.iterates.len() < 2 {
        return Err(Error::TraceMismatch(
            "anderson index needs at least 2 iterates".into(),
        ));
    }
    let x0 = &trace.iterates[0];
    let mut basis = OrthonormalBasis::new();
    for j in 1..trace.iterates.len() {
        let d = &trace.iterates[j] - x0;
        let out = basis.push(&d, dep_tol)?;
        if out.dependent {
            return Ok(AndersonIndex {
                value: (j - 1).max(1),
                observed: true,
            });
        }
    }
    Ok(AndersonIndex {
        value: trace.iterates.len() - 1,
        observed: false,
    })
}

/// First n with x_n = x_{n+1} in a GMRES trace, at tolerance
/// dep_tol * (1 + ||x_n||).
///
/// A converged trace that never repeated within its recorded iterates still
/// has a stagnation index: the minimizer stays at the solution from the
/// final step on, so the index is the last recorded step.
pub fn gmres_stagnation_index(trace: &SolverTrace, dep_tol: f64) -> Result<Option<usize>> {
    if trace.method != Method::Gmres {
        return Err(Error::TraceMismatch(format!(
            "stagnation index needs a gmres trace, got {}",
            trace.method
        )));
    }
    for n in 0..trace.steps() {
        let prev = &trace.iterates[n];
        let step = (&trace.iterates[n + 1] - prev).norm();
        if step <= dep_tol * (1.0 + prev.norm()) {
            return Ok(Some(n));
        }
    }
    if trace.termination == Termination::ResidualTolMet {
        return Ok(Some(trace.steps()));
    }
    Ok(None)
}

/// Which side of the dichotomy a problem falls on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Case {
    /// Anderson index equals the grade: Anderson reaches the solution.
    Converges,
    /// Anderson index below the grade: Anderson locks onto a wrong point.
    Stagnates,
    /// Zero initial residual; nothing to classify.
    TriviallyConverged,
}

impl Case {
    pub fn as_str(&self) -> &'static str {
        match self {
            Case::Converges => "i",
            Case::Stagnates => "ii",
            Case::TriviallyConverged => "trivial",
        }
    }
}

impl std::fmt::Display for Case {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Tolerances a report was computed with.
#[derive(Debug, Clone, Copy)]
pub struct ReportTolerances {
    pub residual_tol: f64,
    pub dep_tol: f64,
    pub rank_tol: f64,
    pub verify_tol: f64,
}

/// Indices, case, and cross-validation results for one problem.
#[derive(Debug, Clone)]
pub struct DiagnosticsReport {
    pub grade: Option<usize>,
    pub anderson_index: Option<usize>,
    pub anderson_index_observed: bool,
    pub stagnation_index: Option<usize>,
    pub case: Case,
    pub relation_checks: Vec<RelationCheck>,
    pub tolerances: ReportTolerances,
}

impl DiagnosticsReport {
    pub fn all_passed(&self) -> bool {
        self.relation_checks.iter().all(|c| c.passed)
    }
}

/// Runs GMRES and Anderson (constant beta = 1, infinite window), computes the
/// three indices, decides the case by comparing the Anderson index with the
/// grade, and cross-validates against the residual-chain predicates.
///
/// Case deciding and residual chains must agree; any disagreement is recorded
/// as a failed check rather than silently resolved.
pub fn classify(p: &LinearProblem, cfg: &SolveConfig) -> Result<DiagnosticsReport> {
    classify_with_tol(p, cfg, DEFAULT_VERIFY_TOL)
}

pub fn classify_with_tol(
    p: &LinearProblem,
    cfg: &SolveConfig,
    verify_tol: f64,
) -> Result<DiagnosticsReport> {
    let tolerances = ReportTolerances {
        residual_tol: cfg.residual_tol,
        dep_tol: cfg.dep_tol,
        rank_tol: cfg.rank_tol,
        verify_tol,
    };
    if p.r0.norm() <= cfg.residual_tol {
        return Ok(DiagnosticsReport {
            grade: None,
            anderson_index: None,
            anderson_index_observed: false,
            stagnation_index: None,
            case: Case::TriviallyConverged,
            relation_checks: Vec::new(),
            tolerances,
        });
    }

    let nu = grade(&p.a, &p.r0, cfg.dep_tol)?;
    let gt = gmres_run(p, cfg)?;
    let eta = gmres_stagnation_index(&gt, cfg.dep_tol)?;
    let at = anderson_run(p, &MixingSchedule::constant(1.0), Window::Infinite, cfg)?;
    let kappa = anderson_index(&at, cfg.dep_tol)?;

    let mut checks = Vec::new();
    checks.push(RelationCheck::predicate(
        "index-at-most-grade",
        (kappa.value as f64 - nu as f64).max(0.0),
    ));
    checks.push(RelationCheck::predicate(
        "gmres-terminated",
        if gt.termination == Termination::ResidualTolMet {
            0.0
        } else {
            1.0
        },
    ));

    let case = if kappa.value >= nu {
        Case::Converges
    } else {
        Case::Stagnates
    };

    // Residual-chain predicates on the GMRES norms, at verify_tol relative to
    // the initial residual. Exactly one of the two must hold, and it must
    // agree with the index comparison. Decreases are only required monotone
    // within the margin: the gap at a near-plateau step can be arbitrarily
    // small, so the repeat index carries the strict distinction.
    let rn = &gt.residual_norms;
    let margin = verify_tol * rn[0];
    let chain_i = residual_chain_converges(rn, nu, eta, margin, cfg.residual_tol);
    let chain_ii = residual_chain_stagnates(rn, kappa.value, eta, margin, cfg.residual_tol);
    checks.push(RelationCheck::predicate(
        "dichotomy-exactly-one-chain",
        if chain_i ^ chain_ii { 0.0 } else { 1.0 },
    ));
    let chain_agrees = match case {
        Case::Converges => chain_i && !chain_ii,
        Case::Stagnates => chain_ii && !chain_i,
        Case::TriviallyConverged => unreachable!(),
    };
    checks.push(RelationCheck::predicate(
        "chain-matches-case",
        if chain_agrees { 0.0 } else { 1.0 },
    ));

    match case {
        Case::Converges => {
            // First repeated GMRES iterate is the converged one.
            let dev = eta.map_or(1.0, |e| (e as f64 - nu as f64).abs());
            checks.push(RelationCheck::predicate("stagnation-at-grade", dev));
        }
        Case::Stagnates => {
            let dev = eta.map_or(1.0, |e| (kappa.value as f64 - (e + 1) as f64).abs());
            checks.push(RelationCheck::predicate(
                "index-is-stagnation-plus-one",
                dev,
            ));
        }
        Case::TriviallyConverged => unreachable!(),
    }

    Ok(DiagnosticsReport {
        grade: Some(nu),
        anderson_index: Some(kappa.value),
        anderson_index_observed: kappa.observed,
        stagnation_index: eta,
        case,
        relation_checks: checks,
        tolerances,
    })
}

/// Profile of a run that converges at step nu without an interior repeated
/// iterate: monotone within margin, above the threshold through nu-1, at or
/// below it at nu, and the repeat index sitting at nu itself.
fn residual_chain_converges(
    rn: &[f64],
    nu: usize,
    eta: Option<usize>,
    margin: f64,
    residual_tol: f64,
) -> bool {
    if rn.len() < nu + 1 || eta != Some(nu) {
        return false;
    }
    let monotone = (1..=nu).all(|n| rn[n] <= rn[n - 1] + margin);
    monotone && rn[nu - 1] > residual_tol && rn[nu] <= residual_tol
}

/// Profile of a run whose iterate first repeats at step kappa-1 while still
/// above the threshold: monotone within margin, no measurable progress across
/// the repeat step, and the repeat index in the matching spot.
fn residual_chain_stagnates(
    rn: &[f64],
    kappa: usize,
    eta: Option<usize>,
    margin: f64,
    residual_tol: f64,
) -> bool {
    if kappa == 0 || rn.len() < kappa + 1 || eta != Some(kappa - 1) {
        return false;
    }
    let monotone = (1..=kappa).all(|n| rn[n] <= rn[n - 1] + margin);
    monotone && rn[kappa - 1] > residual_tol && rn[kappa] >= rn[kappa - 1] - margin
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::optimized_anderson_run;

    fn cycle_problem(n: usize, k: usize) -> LinearProblem {
        let mut a = Matrix::zeros(n, n);
        for i in 0..n {
            a.set((i + 1) % n, i, 1.0);
        }
        LinearProblem::new(a, Vector::basis(n, k), Vector::zeros(n)).unwrap()
    }

    #[test]
    fn grade_of_cycle_is_dimension() {
        for n in [2, 5, 8] {
            let p = cycle_problem(n, 1 % n);
            assert_eq!(grade(&p.a, &p.r0, 1e-10).unwrap(), n);
        }
    }

    #[test]
    fn grade_of_neg_identity_is_one() {
        let a = Matrix::new(3, 3, vec![-1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, -1.0]).unwrap();
        let r0 = Vector::new(vec![0.3, -0.2, 1.0]).unwrap();
        assert_eq!(grade(&a, &r0, 1e-10).unwrap(), 1);
    }

    #[test]
    fn grade_counts_touched_eigenspaces() {
        let a = Matrix::new(3, 3, vec![1.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 3.0]).unwrap();
        let r0 = Vector::new(vec![1.0, 1.0, 0.0]).unwrap();
        assert_eq!(grade(&a, &r0, 1e-10).unwrap(), 2);
        assert!(matches!(
            grade(&a, &Vector::zeros(3), 1e-10),
            Err(Error::ZeroResidual)
        ));
    }

    #[test]
    fn cycle_indices_and_case() {
        let p = cycle_problem(6, 0);
        let cfg = SolveConfig::default();
        let report = classify(&p, &cfg).unwrap();
        assert_eq!(report.grade, Some(6));
        assert_eq!(report.anderson_index, Some(1));
        assert_eq!(report.stagnation_index, Some(0));
        assert_eq!(report.case, Case::Stagnates);
        assert!(report.all_passed(), "checks: {:?}", report.relation_checks);
    }

    #[test]
    fn neg_identity_is_case_i() {
        let a = Matrix::new(2, 2, vec![-1.0, 0.0, 0.0, -1.0]).unwrap();
        let b = Vector::new(vec![1.0, 2.0]).unwrap();
        let p = LinearProblem::new(a, b, Vector::zeros(2)).unwrap();
        let report = classify(&p, &SolveConfig::default()).unwrap();
        assert_eq!(report.grade, Some(1));
        assert_eq!(report.anderson_index, Some(1));
        assert_eq!(report.case, Case::Converges);
        assert_eq!(report.stagnation_index, Some(1));
        assert!(report.all_passed(), "checks: {:?}", report.relation_checks);
    }

    #[test]
    fn zero_residual_is_trivial() {
        let a = Matrix::identity(2);
        let b = Vector::new(vec![1.0, 1.0]).unwrap();
        let x0 = Vector::new(vec![-1.0, -1.0]).unwrap();
        let p = LinearProblem::new(a, b, x0).unwrap();
        let report = classify(&p, &SolveConfig::default()).unwrap();
        assert_eq!(report.case, Case::TriviallyConverged);
        assert_eq!(report.grade, None);
    }

    #[test]
    fn optimized_frozen_start_has_index_one() {
        let p = cycle_problem(5, 2);
        let t = optimized_anderson_run(&p, &SolveConfig::default()).unwrap();
        let idx = anderson_index(&t, 1e-10).unwrap();
        assert_eq!(idx, AndersonIndex { value: 1, observed: true });
    }

    #[test]
    fn anderson_index_requires_anderson_trace() {
        let p = cycle_problem(4, 0);
        let gt = gmres_run(&p, &SolveConfig::default()).unwrap();
        assert!(anderson_index(&gt, 1e-10).is_err());
        assert!(gmres_stagnation_index(&gt, 1e-10).unwrap() == Some(0));
    }

    #[test]
    fn converged_gmres_stagnates_at_final_step() {
        let a = Matrix::new(2, 2, vec![-2.0, 1.0, 0.0, -3.0]).unwrap();
        let b = Vector::new(vec![1.0, 1.0]).unwrap();
        let p = LinearProblem::new(a, b, Vector::zeros(2)).unwrap();
        let gt = gmres_run(&p, &SolveConfig::default()).unwrap();
        assert_eq!(gt.termination, Termination::ResidualTolMet);
        let eta = gmres_stagnation_index(&gt, 1e-10).unwrap();
        assert_eq!(eta, Some(gt.steps()));
    }
}
