//! Solver run records: every iterate, residual, and coefficient a method
//! produced, plus why it stopped.

use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::problem::{LinearProblem, SolveConfig};

/// Which iteration produced a trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Method {
    FixedPoint,
    SimpleMixing,
    Gmres,
    Anderson,
    OptimizedAnderson,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::FixedPoint => "fixed",
            Method::SimpleMixing => "simple",
            Method::Gmres => "gmres",
            Method::Anderson => "anderson",
            Method::OptimizedAnderson => "opt-anderson",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "fixed" => Ok(Method::FixedPoint),
            "simple" => Ok(Method::SimpleMixing),
            "gmres" => Ok(Method::Gmres),
            "anderson" => Ok(Method::Anderson),
            "opt-anderson" => Ok(Method::OptimizedAnderson),
            other => Err(Error::InvalidParameter(format!("unknown method '{other}'"))),
        }
    }

    /// Anderson-family methods carry predictions and coefficient vectors.
    pub fn is_anderson(&self) -> bool {
        matches!(self, Method::Anderson | Method::OptimizedAnderson)
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Why a run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Termination {
    ResidualTolMet,
    MaxIter,
    StagnationDetected,
    Breakdown,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::ResidualTolMet => "residual_tol_met",
            Termination::MaxIter => "max_iter",
            Termination::StagnationDetected => "stagnation_detected",
            Termination::Breakdown => "breakdown",
        }
    }
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Complete record of one solver run.
///
/// Index conventions, with iterates x_0 .. x_K (K = `steps()`):
/// - `residuals[n]` and `residual_norms[n]` belong to `iterates[n]`;
/// - `betas[k]` is the mixing parameter used to produce `iterates[k+1]`;
/// - for Anderson methods, `predicted[k]` is the prediction formed at step k
///   (the combination of history that precedes the mixing update for x_{k+1})
///   and `alphas[k]` its coefficient vector, which always sums to 1.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct SolverTrace {
    pub method: Method,
    pub iterates: Vec<Vector>,
    pub predicted: Vec<Vector>,
    pub residuals: Vec<Vector>,
    pub residual_norms: Vec<f64>,
    pub alphas: Vec<Vec<f64>>,
    pub betas: Vec<f64>,
    pub termination: Termination,
    pub config: SolveConfig,
}

impl SolverTrace {
    /// Number of iteration steps taken (iterate count minus one).
    pub fn steps(&self) -> usize {
        self.iterates.len().saturating_sub(1)
    }

    pub fn final_iterate(&self) -> &Vector {
        self.iterates.last().expect("trace has at least one iterate")
    }

    pub fn final_residual_norm(&self) -> f64 {
        *self
            .residual_norms
            .last()
            .expect("trace has at least one iterate")
    }

    /// Checks the trace against the problem it claims to come from:
    /// starting point, recomputed residuals, parallel list lengths, and the
    /// sum-to-one constraint on Anderson coefficient vectors.
    pub fn check_consistency(&self, p: &LinearProblem) -> Result<()> {
        let k = self.iterates.len();
        if k == 0 {
            return Err(Error::TraceMismatch("trace has no iterates".into()));
        }
        if self.residuals.len() != k || self.residual_norms.len() != k {
            return Err(Error::TraceMismatch(format!(
                "residual lists have lengths {}/{} for {} iterates",
                self.residuals.len(),
                self.residual_norms.len(),
                k
            )));
        }
        if self.iterates[0] != p.x0 {
            return Err(Error::TraceMismatch(
                "trace starting point differs from problem x0".into(),
            ));
        }
        for (n, x) in self.iterates.iter().enumerate() {
            let r = p.residual(x)?;
            let scale = 1.0 + r.norm();
            let dev = (&r - &self.residuals[n]).norm();
            if dev > 1e-12 * scale {
                return Err(Error::TraceMismatch(format!(
                    "recorded residual at step {n} deviates by {dev:.3e}"
                )));
            }
            let ndev = (self.residual_norms[n] - r.norm()).abs();
            if ndev > 1e-12 * scale {
                return Err(Error::TraceMismatch(format!(
                    "recorded residual norm at step {n} deviates by {ndev:.3e}"
                )));
            }
        }
        if self.method.is_anderson() {
            if self.predicted.len() != self.steps() || self.alphas.len() != self.steps() {
                return Err(Error::TraceMismatch(format!(
                    "{} predictions / {} coefficient vectors for {} steps",
                    self.predicted.len(),
                    self.alphas.len(),
                    self.steps()
                )));
            }
            for (n, a) in self.alphas.iter().enumerate() {
                let s: f64 = a.iter().sum();
                // Near-degenerate least-squares steps produce coefficients of
                // huge opposite signs; the achievable accuracy of their sum
                // scales with their magnitudes.
                let scale: f64 = 1.0 + a.iter().map(|c| c.abs()).sum::<f64>();
                if (s - 1.0).abs() > 1e-10 * scale {
                    return Err(Error::TraceMismatch(format!(
                        "coefficients at step {n} sum to {s}, not 1"
                    )));
                }
            }
        }
        if !self.betas.is_empty() && self.betas.len() != self.steps() {
            return Err(Error::TraceMismatch(format!(
                "{} mixing parameters for {} steps",
                self.betas.len(),
                self.steps()
            )));
        }
        Ok(())
    }

    /// True when iterate n is a near-repeat of iterate n-1 at dep_tol.
    pub fn repeats_previous(&self, n: usize) -> bool {
        if n == 0 || n >= self.iterates.len() {
            return false;
        }
        let prev = &self.iterates[n - 1];
        let step = (&self.iterates[n] - prev).norm();
        step <= self.config.dep_tol * (1.0 + prev.norm())
    }
}

/// Incremental builder used by the solver loops.
pub(crate) struct TraceBuilder {
    method: Method,
    iterates: Vec<Vector>,
    predicted: Vec<Vector>,
    residuals: Vec<Vector>,
    residual_norms: Vec<f64>,
    alphas: Vec<Vec<f64>>,
    betas: Vec<f64>,
    config: SolveConfig,
}

impl TraceBuilder {
    pub fn new(method: Method, config: SolveConfig) -> Self {
        Self {
            method,
            iterates: Vec::new(),
            predicted: Vec::new(),
            residuals: Vec::new(),
            residual_norms: Vec::new(),
            alphas: Vec::new(),
            betas: Vec::new(),
            config,
        }
    }

    pub fn push_iterate(&mut self, x: Vector, r: Vector) {
        self.residual_norms.push(r.norm());
        self.residuals.push(r);
        self.iterates.push(x);
    }

    pub fn push_step_data(&mut self, beta: f64, predicted: Option<Vector>, alpha: Option<Vec<f64>>) {
        self.betas.push(beta);
        if let Some(p) = predicted {
            self.predicted.push(p);
        }
        if let Some(a) = alpha {
            self.alphas.push(a);
        }
    }

    pub fn last_residual_norm(&self) -> f64 {
        *self.residual_norms.last().expect("builder has iterates")
    }

    pub fn last_iterate(&self) -> &Vector {
        self.iterates.last().expect("builder has iterates")
    }

    pub fn last_residual(&self) -> &Vector {
        self.residuals.last().expect("builder has iterates")
    }

    pub fn iterates(&self) -> &[Vector] {
        &self.iterates
    }

    pub fn residuals(&self) -> &[Vector] {
        &self.residuals
    }

    pub fn betas_used(&self) -> &[f64] {
        &self.betas
    }

    pub fn config(&self) -> &SolveConfig {
        &self.config
    }

    pub fn len(&self) -> usize {
        self.iterates.len()
    }

    pub fn finish(self, termination: Termination) -> SolverTrace {
        SolverTrace {
            method: self.method,
            iterates: self.iterates,
            predicted: self.predicted,
            residuals: self.residuals,
            residual_norms: self.residual_norms,
            alphas: self.alphas,
            betas: self.betas,
            termination,
            config: self.config,
        }
    }
}
