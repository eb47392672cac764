//! Mechanical verification of the exact relations between Anderson and GMRES
//! iterates on the same problem.
//!
//! Every verifier takes completed traces, re-derives the claimed identity
//! from recorded data (re-multiplying by A where needed), and reports the
//! worst relative deviation per relation. Verifiers never fix anything up:
//! a failed consistency check is an error, a failed relation is a FAIL row.

use super::{anderson_index, grade, RelationCheck};
use crate::error::{Error, Result};
use crate::linalg::{project_onto_columnspace, Matrix, OrthonormalBasis, Vector};
use crate::problem::LinearProblem;
use crate::trace::{Method, SolverTrace, Termination};

/// Relative distance between an actual and an expected vector.
fn rel_dev(actual: &Vector, expected: &Vector) -> f64 {
    (actual - expected).norm() / (1.0 + expected.norm())
}

/// GMRES iterate x_n, clamping past the end of a converged trace (the
/// minimizer no longer moves once the residual is zero).
fn gmres_iterate(gt: &SolverTrace, n: usize) -> Result<&Vector> {
    if n < gt.iterates.len() {
        Ok(&gt.iterates[n])
    } else if gt.termination == Termination::ResidualTolMet {
        Ok(gt.final_iterate())
    } else {
        Err(Error::TraceMismatch(format!(
            "gmres trace has no iterate {n} and did not converge"
        )))
    }
}

fn gmres_residual(gt: &SolverTrace, n: usize) -> Result<&Vector> {
    if n < gt.residuals.len() {
        Ok(&gt.residuals[n])
    } else if gt.termination == Termination::ResidualTolMet {
        Ok(gt.residuals.last().expect("trace nonempty"))
    } else {
        Err(Error::TraceMismatch(format!(
            "gmres trace has no residual {n} and did not converge"
        )))
    }
}

fn expect_methods(
    trace: &SolverTrace,
    want: &[Method],
    what: &'static str,
) -> Result<()> {
    if !want.contains(&trace.method) {
        return Err(Error::TraceMismatch(format!(
            "{what} expects {:?}, got {}",
            want.iter().map(|m| m.as_str()).collect::<Vec<_>>(),
            trace.method
        )));
    }
    Ok(())
}

/// Checks the iterate and prediction maps tying an Anderson run to the GMRES
/// run on the same problem, including the locked tail once the Anderson
/// history has degenerated.
pub fn verify_equivalence(
    p: &LinearProblem,
    anderson: &SolverTrace,
    gmres: &SolverTrace,
    tol: f64,
) -> Result<Vec<RelationCheck>> {
    expect_methods(anderson, &[Method::Anderson], "equivalence check")?;
    expect_methods(gmres, &[Method::Gmres], "equivalence check")?;
    anderson.check_consistency(p)?;
    gmres.check_consistency(p)?;

    let nu = grade(&p.a, &p.r0, anderson.config.dep_tol)?;
    let kappa = anderson_index(anderson, anderson.config.dep_tol)?.value;
    let stagnating = kappa < nu;

    let mut head_iter = 0.0f64;
    let mut head_pred = 0.0f64;
    let mut tail_iter = 0.0f64;
    let mut tail_pred = 0.0f64;
    let mut saw_tail = false;

    for n in 0..anderson.steps() {
        let beta = anderson.betas[n];
        if !stagnating {
            // Converging case: the map follows GMRES all the way, and the
            // iterate lands on the solution from step nu on.
            let expected_x = if n < nu {
                let mut e = gmres_iterate(gmres, n)?.clone();
                e.add_scaled(beta, gmres_residual(gmres, n)?);
                e
            } else {
                p.x_star.clone()
            };
            head_iter = head_iter.max(rel_dev(&anderson.iterates[n + 1], &expected_x));
            head_pred = head_pred.max(rel_dev(&anderson.predicted[n], gmres_iterate(gmres, n)?));
        } else {
            if n <= kappa {
                let mut e = gmres_iterate(gmres, n)?.clone();
                e.add_scaled(beta, gmres_residual(gmres, n)?);
                head_iter = head_iter.max(rel_dev(&anderson.iterates[n + 1], &e));
                head_pred =
                    head_pred.max(rel_dev(&anderson.predicted[n], gmres_iterate(gmres, n)?));
            }
            if n >= kappa {
                saw_tail = true;
                let locked_x = gmres_iterate(gmres, kappa - 1)?;
                let locked_r = gmres_residual(gmres, kappa - 1)?;
                let mut e = locked_x.clone();
                e.add_scaled(beta, locked_r);
                tail_iter = tail_iter.max(rel_dev(&anderson.iterates[n + 1], &e));
                tail_pred = tail_pred.max(rel_dev(&anderson.predicted[n], locked_x));
            }
        }
    }

    let mut checks = vec![
        RelationCheck::equality("iterate-map", head_iter, tol),
        RelationCheck::equality("prediction-map", head_pred, tol),
    ];
    if saw_tail {
        checks.push(RelationCheck::equality("locked-tail", tail_iter, tol));
        checks.push(RelationCheck::equality("locked-prediction", tail_pred, tol));
    }
    Ok(checks)
}

/// Checks the structural facts around the degeneration step: nonzero newest
/// coefficient and strict residual decrease before it; vanishing newest
/// coefficient, residual orthogonality, the five-way iterate coincidence,
/// and the residual plateau at it.
pub fn verify_prop_structure(
    p: &LinearProblem,
    anderson: &SolverTrace,
    gmres: &SolverTrace,
    nu: usize,
    kappa: usize,
    tol: f64,
) -> Result<Vec<RelationCheck>> {
    expect_methods(anderson, &[Method::Anderson], "structure check")?;
    expect_methods(gmres, &[Method::Gmres], "structure check")?;
    anderson.check_consistency(p)?;
    gmres.check_consistency(p)?;

    let mut checks = Vec::new();
    let rn = &gmres.residual_norms;
    let margin = tol * rn[0];

    let mut coeff_violation = 0.0f64;
    let mut decrease_violation = 0.0f64;
    for n in 1..kappa {
        if n < anderson.alphas.len() {
            let diag = *anderson.alphas[n].last().expect("nonempty coefficients");
            coeff_violation = coeff_violation.max((tol - diag.abs()).max(0.0));
        }
        if n < rn.len() {
            // Non-increase up to roundoff slack; strictness before the index
            // is equivalent to the newest coefficient staying nonzero, which
            // the companion check certifies. A fixed decrease margin would
            // reject genuinely narrow plateau steps on stiff problems.
            decrease_violation = decrease_violation.max((rn[n] - rn[n - 1] - margin).max(0.0));
        }
    }
    checks.push(RelationCheck::predicate(
        "newest-coefficient-nonzero",
        coeff_violation,
    ));
    checks.push(RelationCheck::predicate(
        "strict-residual-decrease",
        decrease_violation / (1.0 + rn[0]),
    ));

    if kappa < nu {
        if anderson.steps() < kappa + 2 {
            return Err(Error::TraceMismatch(format!(
                "structure check needs {} steps, trace has {}",
                kappa + 2,
                anderson.steps()
            )));
        }
        let diag = *anderson.alphas[kappa].last().expect("nonempty coefficients");
        checks.push(RelationCheck::equality(
            "newest-coefficient-vanishes",
            diag.abs(),
            tol,
        ));

        // Residual at the repeated prediction is orthogonal to the image of
        // the newest update direction.
        let pred_res = p.residual(&anderson.predicted[kappa - 1])?;
        let update = &anderson.iterates[kappa + 1] - &anderson.iterates[0];
        let image = p.a.matvec(&update)?;
        let scale = pred_res.norm() * image.norm();
        let cosine = if scale == 0.0 {
            0.0
        } else {
            pred_res.dot(&image).abs() / scale
        };
        checks.push(RelationCheck::equality("update-orthogonality", cosine, tol));

        let anchor = gmres_iterate(gmres, kappa - 1)?;
        let coincide = [
            &anderson.predicted[kappa - 1],
            &anderson.predicted[kappa],
            gmres_iterate(gmres, kappa)?,
            &anderson.predicted[kappa + 1],
        ]
        .iter()
        .map(|v| rel_dev(v, anchor))
        .fold(0.0f64, f64::max);
        checks.push(RelationCheck::equality("iterate-coincidence", coincide, tol));

        let plateau = (rn[kappa - 1] - rn[kappa]).abs() / (1.0 + rn[kappa - 1]);
        checks.push(RelationCheck::equality("residual-plateau", plateau, tol));
    }
    Ok(checks)
}

/// Checks the optimized-mixing relations: the iterate/prediction maps with
/// the frozen tail, the residual sandwich, the per-step residual identity and
/// bound, and the boundary where the optimal mixing parameter vanishes.
pub fn verify_optimized(
    p: &LinearProblem,
    opt: &SolverTrace,
    gmres: &SolverTrace,
    kappa: usize,
    eta: Option<usize>,
    tol: f64,
) -> Result<Vec<RelationCheck>> {
    expect_methods(opt, &[Method::OptimizedAnderson], "optimized check")?;
    expect_methods(gmres, &[Method::Gmres], "optimized check")?;
    opt.check_consistency(p)?;
    gmres.check_consistency(p)?;

    let eta_eff = eta.unwrap_or(usize::MAX);
    let mut iter_dev = 0.0f64;
    let mut pred_dev = 0.0f64;
    let mut sandwich_violation = 0.0f64;
    let mut identity_dev = 0.0f64;
    let mut bound_violation = 0.0f64;

    let rn_g = &gmres.residual_norms;
    let margin = tol * rn_g[0];

    for n in 0..opt.steps() {
        let beta = opt.betas[n];
        let expected_x = if n < eta_eff {
            let mut e = gmres_iterate(gmres, n)?.clone();
            e.add_scaled(beta, gmres_residual(gmres, n)?);
            e
        } else {
            gmres_iterate(gmres, eta_eff)?.clone()
        };
        iter_dev = iter_dev.max(rel_dev(&opt.iterates[n + 1], &expected_x));

        let expected_pred = gmres_iterate(gmres, n.min(eta_eff))?;
        pred_dev = pred_dev.max(rel_dev(&opt.predicted[n], expected_pred));

        if n < eta_eff && n + 1 < rn_g.len() {
            // Two-sided containment with roundoff slack. Strictness of the
            // upper side is equivalent to a nonvanishing optimal beta, which
            // the boundary check below certifies on a scale-free footing; a
            // fixed margin here would reject genuinely narrow plateau steps.
            let mid = opt.residual_norms[n + 1];
            sandwich_violation = sandwich_violation.max((rn_g[n + 1] - mid - margin).max(0.0));
            sandwich_violation = sandwich_violation.max((mid - rn_g[n] - margin).max(0.0));
        }

        let rho = p.residual(&opt.predicted[n])?;
        let a_rho = p.a.matvec(&rho)?;
        let lhs = opt.residual_norms[n + 1].powi(2);
        let rhs = rho.dot(&rho) - beta * beta * a_rho.dot(&a_rho);
        identity_dev = identity_dev.max((lhs - rhs).abs() / (1.0 + lhs.abs().max(rhs.abs())));

        let prev = opt.residual_norms[n].powi(2);
        let bound = prev - beta * beta * a_rho.dot(&a_rho);
        bound_violation = bound_violation.max((lhs - bound).max(0.0) / (1.0 + prev));
    }

    let mut checks = vec![
        RelationCheck::equality("optimized-iterate-map", iter_dev, tol),
        RelationCheck::equality("optimized-prediction-map", pred_dev, tol),
        RelationCheck::predicate(
            "optimized-sandwich",
            sandwich_violation / (1.0 + rn_g[0]),
        ),
        RelationCheck::equality("optimized-residual-identity", identity_dev, tol),
        RelationCheck::equality("optimized-residual-bound", bound_violation, tol),
    ];

    // The optimal mixing parameter is nonzero exactly while GMRES still
    // moves; the first frozen step coincides with the stagnation index.
    let dep_tol = opt.config.dep_tol;
    let freeze = opt.betas.iter().position(|b| b.abs() <= dep_tol);
    let boundary_ok = match (freeze, eta) {
        (Some(f), Some(e)) => f == e,
        (None, Some(e)) => opt.betas.len() <= e,
        (Some(f), None) => f >= opt.betas.len().saturating_sub(1),
        (None, None) => true,
    };
    checks.push(RelationCheck::predicate(
        "beta-vanishing-boundary",
        if boundary_ok { 0.0 } else { 1.0 },
    ));

    // Freeze index against the Anderson index, split by whether GMRES was
    // still above tolerance at the stagnation step.
    if let Some(e) = eta {
        let stagnating = e < rn_g.len() && rn_g[e] > opt.config.residual_tol;
        let expected_kappa = if stagnating { e + 1 } else { e };
        checks.push(RelationCheck::predicate(
            "freeze-vs-kappa",
            (kappa as f64 - expected_kappa as f64).abs(),
        ));
    }
    Ok(checks)
}

/// Checks the orthogonal-projection form of the residuals: the GMRES
/// residual is the initial residual minus its projection onto the image of
/// the Krylov space, and the Anderson predicted residual is the same with
/// the span of iterate differences in place of the Krylov space.
pub fn verify_projection_identities(
    p: &LinearProblem,
    trace: &SolverTrace,
    tol: f64,
) -> Result<Vec<RelationCheck>> {
    trace.check_consistency(p)?;
    let r0 = &p.r0;
    let r0_scale = 1.0 + r0.norm();

    match trace.method {
        Method::Gmres => {
            // Orthonormal chain spanning the Krylov spaces.
            let mut basis = OrthonormalBasis::new();
            if !r0.is_zero() {
                basis.push(r0, trace.config.dep_tol)?;
            }
            let mut dev = 0.0f64;
            for n in 1..=trace.steps() {
                while basis.len() < n {
                    let last = basis.vectors().last().expect("nonempty").clone();
                    let w = p.a.matvec(&last)?;
                    if basis.push(&w, trace.config.dep_tol)?.dependent {
                        break;
                    }
                }
                let cols: Vec<Vector> = basis.vectors()[..basis.len().min(n)]
                    .iter()
                    .map(|q| p.a.matvec(q))
                    .collect::<Result<_>>()?;
                let m = Matrix::from_columns(&cols)?;
                let proj = project_onto_columnspace(&m, r0, trace.config.rank_tol)?;
                let expected = r0 - &proj;
                dev = dev.max((&trace.residuals[n] - &expected).norm() / r0_scale);
            }
            Ok(vec![RelationCheck::equality(
                "projection-identity-residual",
                dev,
                tol,
            )])
        }
        Method::Anderson | Method::OptimizedAnderson => {
            // Each iterate equals its prediction plus a mixing step, so
            // x_n - predicted[n-1] spans exactly the new direction of the
            // history hull. Raw differences x_n - x_0 span the same space but
            // bury late directions under roundoff once the mixing steps get
            // small; the step form keeps them at full relative precision.
            let mut basis = OrthonormalBasis::new();
            let mut dev = 0.0f64;
            for n in 1..trace.predicted.len() {
                let d = &trace.iterates[n] - &trace.predicted[n - 1];
                if !d.is_zero() {
                    basis.push(&p.a.matvec(&d)?, trace.config.dep_tol)?;
                }
                let mut expected = r0.clone();
                for q in basis.vectors() {
                    expected.add_scaled(-q.dot(r0), q);
                }
                let actual = p.residual(&trace.predicted[n])?;
                dev = dev.max((&actual - &expected).norm() / r0_scale);
            }
            Ok(vec![RelationCheck::equality(
                "projection-identity-prediction",
                dev,
                tol,
            )])
        }
        other => Err(Error::TraceMismatch(format!(
            "projection identities need a gmres or anderson trace, got {other}"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::gmres_stagnation_index;
    use crate::problem::{MixingSchedule, SolveConfig, Window};
    use crate::solvers::{anderson_run, gmres_run, optimized_anderson_run};

    fn cycle_problem(n: usize, k: usize) -> LinearProblem {
        let mut a = Matrix::zeros(n, n);
        for i in 0..n {
            a.set((i + 1) % n, i, 1.0);
        }
        LinearProblem::new(a, Vector::basis(n, k), Vector::zeros(n)).unwrap()
    }

    fn dense_case_i_problem() -> LinearProblem {
        let a = Matrix::new(
            4,
            4,
            vec![
                -2.0, 0.3, 0.1, 0.0, 0.2, -1.5, 0.4, 0.1, 0.0, 0.2, -2.5, 0.3, 0.1, 0.0, 0.2,
                -1.8,
            ],
        )
        .unwrap();
        let b = Vector::new(vec![1.0, -0.4, 0.7, 0.2]).unwrap();
        LinearProblem::new(a, b, Vector::zeros(4)).unwrap()
    }

    #[test]
    fn equivalence_holds_on_dense_problem() {
        let p = dense_case_i_problem();
        let cfg = SolveConfig::default();
        let at = anderson_run(&p, &MixingSchedule::constant(0.7), Window::Infinite, &cfg).unwrap();
        let gt = gmres_run(&p, &cfg).unwrap();
        let checks = verify_equivalence(&p, &at, &gt, 1e-8).unwrap();
        assert!(checks.iter().all(|c| c.passed), "{checks:?}");
    }

    #[test]
    fn equivalence_locked_tail_on_cycle() {
        let p = cycle_problem(5, 0);
        let cfg = SolveConfig::default();
        let at = anderson_run(&p, &MixingSchedule::constant(1.0), Window::Infinite, &cfg).unwrap();
        let gt = gmres_run(&p, &cfg).unwrap();
        let checks = verify_equivalence(&p, &at, &gt, 1e-8).unwrap();
        assert!(checks.iter().any(|c| c.id == "locked-tail"));
        assert!(checks.iter().all(|c| c.passed), "{checks:?}");
    }

    #[test]
    fn mismatched_problem_is_an_error() {
        let p1 = cycle_problem(5, 0);
        let p2 = cycle_problem(5, 1);
        let cfg = SolveConfig::default();
        let at = anderson_run(&p1, &MixingSchedule::constant(1.0), Window::Infinite, &cfg).unwrap();
        let gt = gmres_run(&p2, &cfg).unwrap();
        assert!(verify_equivalence(&p2, &at, &gt, 1e-8).is_err());
    }

    #[test]
    fn identical_traces_have_zero_deviation() {
        let p = dense_case_i_problem();
        let cfg = SolveConfig::default();
        let gt = gmres_run(&p, &cfg).unwrap();
        let checks = verify_projection_identities(&p, &gt, 1e-8).unwrap();
        assert!(checks[0].passed);
    }

    #[test]
    fn structure_checks_on_cycle() {
        let p = cycle_problem(6, 1);
        let cfg = SolveConfig::default();
        let at = anderson_run(&p, &MixingSchedule::constant(1.0), Window::Infinite, &cfg).unwrap();
        let gt = gmres_run(&p, &cfg).unwrap();
        let checks = verify_prop_structure(&p, &at, &gt, 6, 1, 1e-8).unwrap();
        let by_id = |id: &str| checks.iter().find(|c| c.id == id).unwrap();
        assert!(by_id("newest-coefficient-vanishes").passed);
        assert!(by_id("update-orthogonality").max_deviation <= 1e-10);
        assert!(by_id("iterate-coincidence").passed);
        assert!(by_id("residual-plateau").passed);
    }

    #[test]
    fn optimized_checks_on_cycle_and_dense() {
        let cfg = SolveConfig::default();

        let p = cycle_problem(6, 0);
        let ot = optimized_anderson_run(&p, &cfg).unwrap();
        let gt = gmres_run(&p, &cfg).unwrap();
        let eta = gmres_stagnation_index(&gt, cfg.dep_tol).unwrap();
        assert_eq!(eta, Some(0));
        let checks = verify_optimized(&p, &ot, &gt, 1, eta, 1e-8).unwrap();
        assert!(checks.iter().all(|c| c.passed), "{checks:?}");

        let p = dense_case_i_problem();
        let ot = optimized_anderson_run(&p, &cfg).unwrap();
        let gt = gmres_run(&p, &cfg).unwrap();
        let eta = gmres_stagnation_index(&gt, cfg.dep_tol).unwrap();
        let kappa = anderson_index(&ot, cfg.dep_tol).unwrap().value;
        let checks = verify_optimized(&p, &ot, &gt, kappa, eta, 1e-8).unwrap();
        assert!(checks.iter().all(|c| c.passed), "{checks:?}");
    }

    #[test]
    fn projection_identity_for_anderson_prediction() {
        let p = dense_case_i_problem();
        let cfg = SolveConfig::default();
        let at = anderson_run(&p, &MixingSchedule::constant(0.5), Window::Infinite, &cfg).unwrap();
        let checks = verify_projection_identities(&p, &at, 1e-8).unwrap();
        assert!(checks[0].passed, "{checks:?}");
    }

    #[test]
    fn cycle_prediction_residual_never_projected_away() {
        // The image of the Krylov space stays orthogonal to the initial
        // residual until the last step, so the projector removes nothing.
        let p = cycle_problem(7, 2);
        let cfg = SolveConfig::default();
        let gt = gmres_run(&p, &cfg).unwrap();
        let checks = verify_projection_identities(&p, &gt, 1e-8).unwrap();
        assert!(checks[0].passed);
        for n in 0..7 {
            assert!((gt.residual_norms[n] - 1.0).abs() <= 1e-12);
        }
    }
}
