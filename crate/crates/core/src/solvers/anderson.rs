//! Anderson mixing with arbitrary windows and beta schedules, plus the
//! variant that picks each beta to minimize the next residual norm.

use crate::error::{Error, Result};
use crate::linalg::{Matrix, PivotedQr, Vector};
use crate::problem::{LinearProblem, MixingSchedule, ScheduleKind, SolveConfig, Window};
use crate::trace::{Method, SolverTrace, Termination, TraceBuilder};

/// Optimal single-step mixing parameter: argmin over beta of ||r0 + beta*Ar0||.
///
/// Returns 0 for a zero residual; a zero image with a nonzero residual is
/// rejected since it contradicts an invertible matrix.
pub fn beta_star(r0: &Vector, ar0: &Vector) -> Result<f64> {
    if r0.is_zero() {
        return Ok(0.0);
    }
    let denom = ar0.dot(ar0);
    if denom == 0.0 {
        return Err(Error::ZeroImage);
    }
    Ok(-r0.dot(ar0) / denom)
}

/// Coefficients (alpha_0..alpha_m) summing to 1 that minimize the norm of the
/// combined residual columns.
///
/// Solved by substitution: alpha_m = 1 - sum of the rest, leaving an
/// unconstrained least squares in the difference columns f_i - f_m. Anchoring
/// at the newest column keeps the coefficients bounded as the run converges.
/// Rank deficiency takes the minimum-norm solution, so a stagnated history
/// yields a zero coefficient on the newest column rather than an arbitrary
/// one.
pub fn anderson_coefficients(residual_columns: &Matrix, rank_tol: f64) -> Result<Vec<f64>> {
    let m = residual_columns.cols() - 1;
    if m == 0 {
        return Ok(vec![1.0]);
    }
    let fm = residual_columns.column(m);
    let diffs: Vec<Vector> = (0..m)
        .map(|i| &residual_columns.column(i) - &fm)
        .collect();
    let qr = PivotedQr::factor(&Matrix::from_columns(&diffs)?, rank_tol)?;
    let head = qr.least_squares(&-&fm)?;
    let mut alpha: Vec<f64> = head.as_slice().to_vec();
    alpha.push(1.0 - head.iter().sum::<f64>());
    Ok(alpha)
}

/// How the mixing parameter for each step is chosen.
enum BetaRule<'a> {
    Schedule(&'a MixingSchedule),
    Optimized,
}

/// Anderson mixing: each iterate mixes a residual-minimizing combination of
/// the windowed history.
pub fn anderson_run(
    p: &LinearProblem,
    schedule: &MixingSchedule,
    window: Window,
    cfg: &SolveConfig,
) -> Result<SolverTrace> {
    window.validate()?;
    schedule.validate()?;
    if matches!(schedule.kind, ScheduleKind::Optimized) {
        return Err(Error::InvalidSchedule(
            "optimized schedule requires the optimized variant".into(),
        ));
    }
    anderson_loop(p, BetaRule::Schedule(schedule), window, cfg, Method::Anderson)
}

/// Anderson mixing where beta_n is the exact line-search minimizer of the
/// next residual norm; beta values at or below dep_tol freeze the iteration.
pub fn optimized_anderson_run(p: &LinearProblem, cfg: &SolveConfig) -> Result<SolverTrace> {
    anderson_loop(
        p,
        BetaRule::Optimized,
        Window::Infinite,
        cfg,
        Method::OptimizedAnderson,
    )
}

fn anderson_loop(
    p: &LinearProblem,
    rule: BetaRule,
    window: Window,
    cfg: &SolveConfig,
    method: Method,
) -> Result<SolverTrace> {
    cfg.validate()?;
    let mut builder = TraceBuilder::new(method, cfg.clone());
    builder.push_iterate(p.x0.clone(), p.r0.clone());
    let mut pairs = PairBasis::default();

    let termination = loop {
        if let Some(t) = common_stop(&builder, cfg) {
            break t;
        }
        if matches!(rule, BetaRule::Optimized) {
            // A vanished optimal step pins the iteration for good.
            if let Some(&last_beta) = builder.betas_used().last() {
                if last_beta.abs() <= cfg.dep_tol {
                    break Termination::StagnationDetected;
                }
            }
        }
        let k = builder.len() - 1;
        let depth = window.depth_at(k);
        let (alpha, predicted) = if k == depth {
            // Window still covers the whole history, so the standing paired
            // basis (grown by one direction per step below) applies.
            let predicted = pairs.predict(p, &builder.iterates()[0])?;
            let cols: Vec<Vector> = builder.residuals()[..=k].to_vec();
            let alpha = anderson_coefficients(&Matrix::from_columns(&cols)?, cfg.rank_tol)?;
            (alpha, predicted)
        } else {
            combine_window(p, &builder, depth, cfg)?
        };
        let beta = match rule {
            BetaRule::Schedule(schedule) => schedule.beta_at(k)?,
            BetaRule::Optimized => {
                let rho = p.residual(&predicted)?;
                if rho.norm() <= cfg.residual_tol {
                    0.0
                } else {
                    beta_star(&rho, &p.a.matvec(&rho)?)?
                }
            }
        };
        // x_{k+1} = prediction + beta * (combined residual); the combined
        // residual equals the prediction's residual by linearity.
        let rho = p.residual(&predicted)?;
        let mut x = predicted.clone();
        x.add_scaled(beta, &rho);
        let r = p.residual(&x)?;
        builder.push_step_data(beta, Some(predicted), Some(alpha));
        builder.push_iterate(x, r);
        // The new iterate extends the affine hull along rho alone: the
        // prediction part already lies in it. Feeding rho instead of the raw
        // difference keeps the basis material well scaled even when beta is
        // tiny, which is exactly when differences carry the new direction at
        // amplitudes that drown in roundoff.
        let image = p.a.matvec(&rho)?;
        pairs.try_extend(image, rho, cfg.dep_tol);
    };
    Ok(builder.finish(termination))
}

/// Orthonormal basis of residual differences paired with the identical
/// combinations of iterate differences. Projecting the anchor residual onto
/// the w side and mapping through the z side yields the history combination
/// with minimal residual, without ever solving against the raw (and
/// increasingly ill-conditioned) difference columns.
#[derive(Default)]
struct PairBasis {
    w: Vec<Vector>,
    z: Vec<Vector>,
}

impl PairBasis {
    /// Orthogonalizes `u` against the basis (two passes), mirroring every
    /// operation on `z`; keeps the pair unless `u` was dependent.
    fn try_extend(&mut self, mut u: Vector, mut z: Vector, dep_tol: f64) {
        let u_norm = u.norm();
        if u_norm == 0.0 {
            return;
        }
        for _pass in 0..2 {
            for (w, zp) in self.w.iter().zip(&self.z) {
                let h = w.dot(&u);
                u.add_scaled(-h, w);
                z.add_scaled(-h, zp);
            }
        }
        let rem = u.norm();
        if rem > dep_tol * u_norm {
            self.w.push(u.scale(1.0 / rem));
            self.z.push(z.scale(1.0 / rem));
        }
    }

    /// Minimizer of the residual over the affine hull through the anchor.
    ///
    /// The w/z pairing drifts apart slowly (each near-dependent extension
    /// divides the accumulated mismatch by a small remainder), so a single
    /// projection can land noticeably off the true minimizer late in a run.
    /// Refining against the exactly recomputed residual contracts that error
    /// by the mismatch factor per pass while keeping every update inside the
    /// hull, since only z directions are ever added.
    fn predict(&self, p: &LinearProblem, anchor_x: &Vector) -> Result<Vector> {
        let mut x = anchor_x.clone();
        if self.w.is_empty() {
            return Ok(x);
        }
        for _pass in 0..3 {
            let rho = p.residual(&x)?;
            for (w, zp) in self.w.iter().zip(&self.z) {
                x.add_scaled(-w.dot(&rho), zp);
            }
        }
        Ok(x)
    }
}

/// Residual-tol / stagnation / max-iter checks shared by both variants.
fn common_stop(builder: &TraceBuilder, cfg: &SolveConfig) -> Option<Termination> {
    let rnorm = builder.last_residual_norm();
    if rnorm <= cfg.residual_tol {
        return Some(Termination::ResidualTolMet);
    }
    if !rnorm.is_finite() {
        return Some(Termination::Breakdown);
    }
    let k = builder.len() - 1;
    if k >= 2 && small_step(builder, k) && small_step(builder, k - 1) {
        return Some(Termination::StagnationDetected);
    }
    if k >= cfg.max_iter {
        return Some(Termination::MaxIter);
    }
    None
}

fn small_step(builder: &TraceBuilder, n: usize) -> bool {
    let prev = &builder.iterates()[n - 1];
    (&builder.iterates()[n] - prev).norm() <= builder_dep_tol(builder) * (1.0 + prev.norm())
}

fn builder_dep_tol(builder: &TraceBuilder) -> f64 {
    builder.config().dep_tol
}

/// Coefficients and prediction over a saturated sliding window, rebuilt from
/// the current window's columns (old directions drop out, so the standing
/// basis no longer applies).
fn combine_window(
    p: &LinearProblem,
    builder: &TraceBuilder,
    depth: usize,
    cfg: &SolveConfig,
) -> Result<(Vec<f64>, Vector)> {
    let k = builder.len() - 1;
    let lo = k - depth;
    let xs = &builder.iterates()[lo..=k];
    let fs = &builder.residuals()[lo..=k];
    let mut pairs = PairBasis::default();
    for i in 0..depth {
        pairs.try_extend(&fs[i] - &fs[depth], &xs[i] - &xs[depth], cfg.dep_tol);
    }
    let predicted = pairs.predict(p, &xs[depth])?;
    let alpha = anderson_coefficients(&Matrix::from_columns(fs)?, cfg.rank_tol)?;
    Ok((alpha, predicted))
}
