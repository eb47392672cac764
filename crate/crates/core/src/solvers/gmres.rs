//! Full (non-restarted) GMRES with per-step iterate materialization.

use crate::error::Result;
use crate::linalg::{orthonormal_extend, Vector};
use crate::problem::{LinearProblem, SolveConfig};
use crate::trace::{Method, SolverTrace, Termination, TraceBuilder};

/// Minimizes ||A(x_0 + z) + b|| over the Krylov space built from the initial
/// residual, recording the minimizer at every step.
///
/// Arnoldi with modified Gram-Schmidt feeds a Givens-rotation least squares
/// on the Hessenberg matrix; a dependent Arnoldi vector (happy breakdown)
/// means the exact solution has been reached.
pub fn gmres_run(p: &LinearProblem, cfg: &SolveConfig) -> Result<SolverTrace> {
    cfg.validate()?;
    let mut builder = TraceBuilder::new(Method::Gmres, cfg.clone());
    builder.push_iterate(p.x0.clone(), p.r0.clone());

    let r0_norm = p.r0.norm();
    if r0_norm <= cfg.residual_tol {
        return Ok(builder.finish(Termination::ResidualTolMet));
    }

    let mut basis: Vec<Vector> = vec![p.r0.scale(1.0 / r0_norm)];
    // Columns of the rotated Hessenberg matrix: upper triangular.
    let mut r_cols: Vec<Vec<f64>> = Vec::new();
    let mut rotations: Vec<(f64, f64)> = Vec::new();
    // Rotated right-hand side ||r0|| e1.
    let mut g: Vec<f64> = vec![r0_norm];

    let mut termination = Termination::MaxIter;
    for j in 0..cfg.max_iter {
        let w = p.a.matvec(&basis[j])?;
        let out = orthonormal_extend(&basis, &w, cfg.dep_tol)?;
        let mut h = out.coeffs.clone();
        let h_sub = out.remainder_norm;

        for (i, &(c, s)) in rotations.iter().enumerate() {
            let t = c * h[i] + s * h[i + 1];
            h[i + 1] = -s * h[i] + c * h[i + 1];
            h[i] = t;
        }
        let denom = h[j].hypot(h_sub);
        if denom == 0.0 {
            termination = Termination::Breakdown;
            break;
        }
        let (c, s) = (h[j] / denom, h_sub / denom);
        h[j] = denom;
        rotations.push((c, s));
        let gj = g[j];
        g[j] = c * gj;
        g.push(-s * gj);
        r_cols.push(h);

        // Back-substitute R y = -g and materialize the iterate.
        let mut y = vec![0.0; j + 1];
        for i in (0..=j).rev() {
            let mut acc = -g[i];
            for l in i + 1..=j {
                acc -= r_cols[l][i] * y[l];
            }
            y[i] = acc / r_cols[i][i];
        }
        let mut x = p.x0.clone();
        for (l, &yl) in y.iter().enumerate() {
            x.add_scaled(yl, &basis[l]);
        }
        let r = p.residual(&x)?;
        builder.push_iterate(x, r);

        let rnorm = builder.last_residual_norm();
        if rnorm <= cfg.residual_tol || out.dependent {
            termination = Termination::ResidualTolMet;
            break;
        }
        if !rnorm.is_finite() {
            termination = Termination::Breakdown;
            break;
        }
        if let Some(q) = out.q {
            basis.push(q);
        }
    }
    Ok(builder.finish(termination))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use approx::assert_abs_diff_eq;

    fn cycle_matrix(n: usize) -> Matrix {
        let mut a = Matrix::zeros(n, n);
        for i in 0..n {
            a.set((i + 1) % n, i, 1.0);
        }
        a
    }

    #[test]
    fn cycle_residuals_stagnate_until_last_step() {
        let n = 7;
        let p = LinearProblem::new(
            cycle_matrix(n),
            Vector::basis(n, 0),
            Vector::zeros(n),
        )
        .unwrap();
        let t = gmres_run(&p, &SolveConfig::default()).unwrap();
        assert_eq!(t.termination, Termination::ResidualTolMet);
        assert_eq!(t.iterates.len(), n + 1);
        for k in 0..n {
            assert_abs_diff_eq!(t.residual_norms[k], 1.0, epsilon = 1e-12);
        }
        assert!(t.residual_norms[n] <= 1e-10);
        t.check_consistency(&p).unwrap();
    }

    #[test]
    fn zero_initial_residual_means_zero_iterations() {
        let a = Matrix::identity(3);
        let b = Vector::new(vec![-1.0, 0.0, 2.0]).unwrap();
        let x0 = Vector::new(vec![1.0, 0.0, -2.0]).unwrap();
        let p = LinearProblem::new(a, b, x0).unwrap();
        let t = gmres_run(&p, &SolveConfig::default()).unwrap();
        assert_eq!(t.iterates.len(), 1);
        assert_eq!(t.termination, Termination::ResidualTolMet);
    }

    #[test]
    fn converges_at_krylov_rank_on_diagonal_problem() {
        // r0 touches two eigenspaces, so the minimal polynomial along r0 has
        // degree 2 and GMRES must finish in exactly 2 steps.
        let a = Matrix::new(3, 3, vec![1.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 3.0]).unwrap();
        let x0 = Vector::zeros(3);
        let b = Vector::new(vec![1.0, 1.0, 0.0]).unwrap();
        let p = LinearProblem::new(a, b, x0).unwrap();
        assert_eq!(p.r0.as_slice(), &[1.0, 1.0, 0.0]);
        let t = gmres_run(&p, &SolveConfig::default()).unwrap();
        assert_eq!(t.termination, Termination::ResidualTolMet);
        assert_eq!(t.steps(), 2);
        assert!(t.residual_norms[1] > 1e-10);
        let err = (t.final_iterate() - &p.x_star).norm();
        assert!(err <= 1e-10 * (1.0 + p.x_star.norm()));
    }

    #[test]
    fn residuals_never_increase() {
        let a = Matrix::new(
            4,
            4,
            vec![
                2.0, 1.0, 0.0, -1.0, 0.5, -3.0, 1.0, 0.0, 0.0, 1.0, 4.0, 2.0, 1.0, 0.0, -1.0, 5.0,
            ],
        )
        .unwrap();
        let b = Vector::new(vec![1.0, 2.0, -1.0, 0.5]).unwrap();
        let p = LinearProblem::new(a, b, Vector::zeros(4)).unwrap();
        let t = gmres_run(&p, &SolveConfig::default()).unwrap();
        for k in 1..t.residual_norms.len() {
            assert!(
                t.residual_norms[k] <= t.residual_norms[k - 1] * (1.0 + 1e-12),
                "residual increased at step {k}"
            );
        }
        assert_eq!(t.termination, Termination::ResidualTolMet);
    }

    #[test]
    fn first_step_matches_line_search() {
        // The first GMRES iterate is the optimal simple-mixing step.
        let a = Matrix::new(2, 2, vec![-2.0, 1.0, 0.0, -3.0]).unwrap();
        let b = Vector::new(vec![1.0, 1.0]).unwrap();
        let p = LinearProblem::new(a, b, Vector::zeros(2)).unwrap();
        let t = gmres_run(&p, &SolveConfig::default()).unwrap();
        let ar0 = p.a.matvec(&p.r0).unwrap();
        let beta = -p.r0.dot(&ar0) / ar0.dot(&ar0);
        let mut expect = p.x0.clone();
        expect.add_scaled(beta, &p.r0);
        for i in 0..2 {
            assert_abs_diff_eq!(t.iterates[1][i], expect[i], epsilon = 1e-13);
        }
    }
}
