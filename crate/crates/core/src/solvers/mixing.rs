//! Fixed-point iteration and simple mixing.

use crate::error::Result;
use crate::problem::{LinearProblem, MixingSchedule, SolveConfig};
use crate::trace::{Method, SolverTrace, Termination, TraceBuilder};

/// Residual growth factor (relative to the initial residual) treated as
/// divergence for the non-accelerated schemes.
pub const DIVERGENCE_FACTOR: f64 = 1e12;

/// x_{n+1} = x_n + (A x_n + b): simple mixing with beta = 1.
pub fn fixed_point_run(p: &LinearProblem, cfg: &SolveConfig) -> Result<SolverTrace> {
    mixing_loop(p, 1.0, cfg, Method::FixedPoint)
}

/// x_{n+1} = x_n + beta (A x_n + b) for a fixed nonzero beta.
pub fn simple_mixing_run(p: &LinearProblem, beta: f64, cfg: &SolveConfig) -> Result<SolverTrace> {
    MixingSchedule::constant(beta).validate()?;
    mixing_loop(p, beta, cfg, Method::SimpleMixing)
}

fn mixing_loop(
    p: &LinearProblem,
    beta: f64,
    cfg: &SolveConfig,
    method: Method,
) -> Result<SolverTrace> {
    cfg.validate()?;
    let guard = DIVERGENCE_FACTOR * p.r0.norm();
    let mut builder = TraceBuilder::new(method, cfg.clone());
    builder.push_iterate(p.x0.clone(), p.r0.clone());

    let termination = loop {
        let rnorm = builder.last_residual_norm();
        if rnorm <= cfg.residual_tol {
            break Termination::ResidualTolMet;
        }
        if !rnorm.is_finite() || rnorm > guard {
            break Termination::Breakdown;
        }
        let k = builder.len() - 1;
        if k >= cfg.max_iter {
            break Termination::MaxIter;
        }
        let mut x = builder.last_iterate().clone();
        x.add_scaled(beta, builder.last_residual());
        let r = p.residual(&x)?;
        builder.push_step_data(beta, None, None);
        builder.push_iterate(x, r);
    };
    Ok(builder.finish(termination))
}
