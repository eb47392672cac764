//! Problem setup: the system A*x + b = 0 together with a starting point.

use crate::error::{Error, Result};
use crate::linalg::{solve_linear, Matrix, Vector};

/// Default absolute residual tolerance.
pub const DEFAULT_RESIDUAL_TOL: f64 = 1e-10;
/// Default linear-dependence tolerance for incremental orthonormalization.
pub const DEFAULT_DEP_TOL: f64 = 1e-10;
/// Default relative rank tolerance for factorizations.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;
/// Default lower bound on |beta| for explicit mixing schedules.
pub const DEFAULT_MIN_ABS_BETA: f64 = 1e-12;
/// Default iteration cap.
pub const DEFAULT_MAX_ITER: usize = 200;

/// The linear problem A*x + b = 0 with starting point x0.
///
/// The exact solution x* = -A^{-1} b and the initial residual r0 = A*x0 + b
/// are computed once at construction; A must be nonsingular.
#[derive(Debug, Clone)]
pub struct LinearProblem {
    pub a: Matrix,
    pub b: Vector,
    pub x0: Vector,
    pub x_star: Vector,
    pub r0: Vector,
}

impl LinearProblem {
    pub fn new(a: Matrix, b: Vector, x0: Vector) -> Result<Self> {
        Self::with_rank_tol(a, b, x0, DEFAULT_RANK_TOL)
    }

    pub fn with_rank_tol(a: Matrix, b: Vector, x0: Vector, rank_tol: f64) -> Result<Self> {
        let n = a.rows();
        if a.cols() != n {
            return Err(Error::DimensionMismatch {
                context: "problem matrix",
                expected: n,
                got: a.cols(),
            });
        }
        if b.len() != n {
            return Err(Error::DimensionMismatch {
                context: "problem rhs",
                expected: n,
                got: b.len(),
            });
        }
        if x0.len() != n {
            return Err(Error::DimensionMismatch {
                context: "problem start",
                expected: n,
                got: x0.len(),
            });
        }
        let x_star = solve_linear(&a, &b, rank_tol)?.scale(-1.0);
        let mut r0 = a.matvec(&x0)?;
        r0.add_scaled(1.0, &b);
        Ok(Self { a, b, x0, x_star, r0 })
    }

    pub fn dim(&self) -> usize {
        self.a.rows()
    }

    /// Residual A*x + b.
    pub fn residual(&self, x: &Vector) -> Result<Vector> {
        let mut r = self.a.matvec(x)?;
        r.add_scaled(1.0, &self.b);
        Ok(r)
    }
}

/// Shared stopping and tolerance settings for all solvers.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SolveConfig {
    pub max_iter: usize,
    /// Absolute tolerance on ||A*x + b||.
    pub residual_tol: f64,
    /// Relative rank tolerance used inside factorizations.
    pub rank_tol: f64,
    /// Linear-dependence and stagnation-detection tolerance.
    pub dep_tol: f64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            max_iter: DEFAULT_MAX_ITER,
            residual_tol: DEFAULT_RESIDUAL_TOL,
            rank_tol: DEFAULT_RANK_TOL,
            dep_tol: DEFAULT_DEP_TOL,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter("max_iter must be >= 1".into()));
        }
        for (name, v) in [
            ("residual_tol", self.residual_tol),
            ("rank_tol", self.rank_tol),
            ("dep_tol", self.dep_tol),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be finite and > 0, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// How the mixing parameters beta_n are chosen.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum ScheduleKind {
    /// Same beta every step.
    Constant(f64),
    /// beta_n read from a list; running past the end is an error.
    Explicit(Vec<f64>),
    /// beta_n minimizes the next residual norm (optimized variant only).
    Optimized,
}

/// A beta schedule together with the enforced lower bound on |beta|.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MixingSchedule {
    pub kind: ScheduleKind,
    pub min_abs_beta: f64,
}

impl MixingSchedule {
    pub fn constant(beta: f64) -> Self {
        Self {
            kind: ScheduleKind::Constant(beta),
            min_abs_beta: DEFAULT_MIN_ABS_BETA,
        }
    }

    pub fn explicit(betas: Vec<f64>) -> Self {
        Self {
            kind: ScheduleKind::Explicit(betas),
            min_abs_beta: DEFAULT_MIN_ABS_BETA,
        }
    }

    pub fn optimized() -> Self {
        Self {
            kind: ScheduleKind::Optimized,
            min_abs_beta: DEFAULT_MIN_ABS_BETA,
        }
    }

    /// Zero (or |beta| below min_abs_beta) is never allowed for
    /// constant/explicit schedules.
    pub fn validate(&self) -> Result<()> {
        if !(self.min_abs_beta.is_finite() && self.min_abs_beta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "min_abs_beta must be finite and > 0, got {}",
                self.min_abs_beta
            )));
        }
        match &self.kind {
            ScheduleKind::Constant(beta) => check_beta(*beta, self.min_abs_beta),
            ScheduleKind::Explicit(betas) => {
                if betas.is_empty() {
                    return Err(Error::InvalidSchedule("empty schedule".into()));
                }
                for &beta in betas {
                    check_beta(beta, self.min_abs_beta)?;
                }
                Ok(())
            }
            ScheduleKind::Optimized => Ok(()),
        }
    }

    /// beta for step n, or an error when an explicit schedule is exhausted.
    pub fn beta_at(&self, n: usize) -> Result<f64> {
        match &self.kind {
            ScheduleKind::Constant(beta) => Ok(*beta),
            ScheduleKind::Explicit(betas) => betas
                .get(n)
                .copied()
                .ok_or(Error::ScheduleTooShort { step: n }),
            ScheduleKind::Optimized => Err(Error::InvalidSchedule(
                "optimized schedule has no fixed beta".into(),
            )),
        }
    }
}

fn check_beta(beta: f64, min_abs_beta: f64) -> Result<()> {
    if !beta.is_finite() {
        return Err(Error::NonFinite("beta"));
    }
    if beta == 0.0 {
        return Err(Error::ZeroMixingParameter);
    }
    if beta.abs() < min_abs_beta {
        return Err(Error::MixingParameterTooSmall {
            beta,
            min_abs: min_abs_beta,
        });
    }
    Ok(())
}

/// Anderson history window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Window {
    /// Keep at most this many previous iterates (m_k = min(m, k)).
    Finite(usize),
    /// Keep everything (m_k = k).
    Infinite,
}

impl Window {
    /// Depth actually used at step k.
    pub fn depth_at(&self, k: usize) -> usize {
        match self {
            Window::Finite(m) => (*m).min(k),
            Window::Infinite => k,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Window::Finite(0) = self {
            return Err(Error::InvalidParameter(
                "window depth must be >= 1; use Finite(1) for plain mixing memory".into(),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn computes_solution_and_residual() {
        let a = Matrix::identity(2);
        let b = Vector::new(vec![1.0, -2.0]).unwrap();
        let x0 = Vector::zeros(2);
        let p = LinearProblem::new(a, b, x0).unwrap();
        // x* = -b for A = I.
        assert_abs_diff_eq!(p.x_star[0], -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(p.x_star[1], 2.0, epsilon = 1e-14);
        // r0 = A*0 + b = b.
        assert_eq!(p.r0, p.b);
        assert!(p.residual(&p.x_star).unwrap().norm() < 1e-13);
    }

    #[test]
    fn singular_matrix_rejected() {
        let a = Matrix::new(2, 2, vec![1.0, 1.0, 1.0, 1.0]).unwrap();
        let b = Vector::zeros(2);
        let x0 = Vector::zeros(2);
        assert!(LinearProblem::new(a, b, x0).is_err());
    }

    #[test]
    fn schedule_validation() {
        assert!(MixingSchedule::constant(1.0).validate().is_ok());
        assert!(matches!(
            MixingSchedule::constant(0.0).validate(),
            Err(Error::ZeroMixingParameter)
        ));
        assert!(matches!(
            MixingSchedule::constant(1e-13).validate(),
            Err(Error::MixingParameterTooSmall { .. })
        ));
        assert!(MixingSchedule::constant(-0.5).validate().is_ok());
        let sched = MixingSchedule::explicit(vec![1.0, -1.0, 0.5]);
        assert!(sched.validate().is_ok());
        assert_eq!(sched.beta_at(2).unwrap(), 0.5);
        assert!(matches!(
            sched.beta_at(3),
            Err(Error::ScheduleTooShort { step: 3 })
        ));
    }

    #[test]
    fn window_depth() {
        assert_eq!(Window::Finite(3).depth_at(1), 1);
        assert_eq!(Window::Finite(3).depth_at(5), 3);
        assert_eq!(Window::Infinite.depth_at(5), 5);
        assert_eq!(Window::Finite(100).depth_at(5), Window::Infinite.depth_at(5));
        assert!(Window::Finite(0).validate().is_err());
    }
}
