//! Trace export: CSV and JSON serialization of solver runs with a metadata
//! header carrying the convergence indices.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::diagnostics::{anderson_index, gmres_stagnation_index, grade};
use crate::error::{Error, Result};
use crate::problem::LinearProblem;
use crate::trace::{Method, SolverTrace};

/// Output format for trace files.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Csv,
    Json,
}

impl ExportFormat {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ExportFormat::Csv),
            "json" => Ok(ExportFormat::Json),
            other => Err(Error::InvalidParameter(format!(
                "unknown format '{other}', expected csv or json"
            ))),
        }
    }
}

/// Run-level facts attached to an exported trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceMetadata {
    pub method: String,
    pub dim: usize,
    /// Krylov chain length of the initial residual; absent for a zero start.
    pub grade: Option<usize>,
    /// First dependent iterate difference; anderson-family traces only.
    pub anderson_index: Option<usize>,
    /// First repeated iterate; gmres traces only.
    pub stagnation_index: Option<usize>,
    pub residual_tol: f64,
    pub dep_tol: f64,
    pub rank_tol: f64,
    pub max_iter: usize,
    pub termination: String,
}

/// One exported iteration row. `beta` and `alpha_last` belong to the step
/// the row's iterate *starts* (producing the next iterate), so the final row
/// leaves them empty; `stagnated` flags a near-repeat of the previous row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub n: usize,
    pub residual_norm: f64,
    pub beta: Option<f64>,
    pub alpha_last: Option<f64>,
    pub stagnated: bool,
}

/// Serializable view of a solver trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceExport {
    pub metadata: TraceMetadata,
    pub rows: Vec<TraceRow>,
}

impl TraceExport {
    /// Builds the export view, recomputing the indices the trace supports.
    pub fn from_trace(trace: &SolverTrace, p: &LinearProblem) -> Result<Self> {
        trace.check_consistency(p)?;
        let dep_tol = trace.config.dep_tol;
        let metadata = TraceMetadata {
            method: trace.method.as_str().to_string(),
            dim: p.dim(),
            grade: grade(&p.a, &p.r0, dep_tol).ok(),
            anderson_index: if trace.method.is_anderson() {
                anderson_index(trace, dep_tol).ok().map(|i| i.value)
            } else {
                None
            },
            stagnation_index: if trace.method == Method::Gmres {
                gmres_stagnation_index(trace, dep_tol)?
            } else {
                None
            },
            residual_tol: trace.config.residual_tol,
            dep_tol,
            rank_tol: trace.config.rank_tol,
            max_iter: trace.config.max_iter,
            termination: trace.termination.as_str().to_string(),
        };
        let rows = (0..trace.iterates.len())
            .map(|n| TraceRow {
                n,
                residual_norm: trace.residual_norms[n],
                beta: trace.betas.get(n).copied(),
                alpha_last: trace.alphas.get(n).and_then(|a| a.last()).copied(),
                stagnated: trace.repeats_previous(n),
            })
            .collect();
        Ok(TraceExport { metadata, rows })
    }

    /// CSV rendering: `#` metadata lines, one header row, one row per
    /// iterate, floats with 17 significant digits.
    pub fn to_csv_string(&self) -> String {
        fn opt(v: Option<f64>) -> String {
            v.map(|x| format!("{x:.16e}")).unwrap_or_default()
        }
        fn opt_idx(v: Option<usize>) -> String {
            v.map(|x| x.to_string()).unwrap_or_default()
        }
        let m = &self.metadata;
        let mut out = String::new();
        let _ = writeln!(out, "# method={}", m.method);
        let _ = writeln!(out, "# dim={}", m.dim);
        let _ = writeln!(out, "# grade={}", opt_idx(m.grade));
        let _ = writeln!(out, "# anderson_index={}", opt_idx(m.anderson_index));
        let _ = writeln!(out, "# stagnation_index={}", opt_idx(m.stagnation_index));
        let _ = writeln!(out, "# residual_tol={:.16e}", m.residual_tol);
        let _ = writeln!(out, "# dep_tol={:.16e}", m.dep_tol);
        let _ = writeln!(out, "# rank_tol={:.16e}", m.rank_tol);
        let _ = writeln!(out, "# max_iter={}", m.max_iter);
        let _ = writeln!(out, "# termination={}", m.termination);
        out.push_str("n,residual_norm,beta,alpha_last,stagnated\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{:.16e},{},{},{}",
                r.n,
                r.residual_norm,
                opt(r.beta),
                opt(r.alpha_last),
                r.stagnated
            );
        }
        out
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn render(&self, format: ExportFormat) -> Result<String> {
        match format {
            ExportFormat::Csv => Ok(self.to_csv_string()),
            ExportFormat::Json => self.to_json_string(),
        }
    }
}

/// Writes a trace to `path` in the requested format.
pub fn export_trace(
    trace: &SolverTrace,
    p: &LinearProblem,
    format: ExportFormat,
    path: impl AsRef<Path>,
) -> Result<()> {
    let export = TraceExport::from_trace(trace, p)?;
    fs::write(path, export.render(format)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::generate::{cycle, diag, random_dense};
    use crate::problem::{MixingSchedule, SolveConfig, Window};
    use crate::solvers::{anderson_run, gmres_run};

    #[test]
    fn single_iterate_trace_is_header_plus_one_row() {
        let p = diag(&[-1.0]).unwrap();
        let x0 = crate::linalg::Vector::new(vec![1.0]).unwrap();
        let p = LinearProblem::new(p.a, p.b, x0).unwrap();
        let t = gmres_run(&p, &SolveConfig::default()).unwrap();
        assert_eq!(t.steps(), 0);
        let csv = TraceExport::from_trace(&t, &p).unwrap().to_csv_string();
        let lines: Vec<&str> = csv.lines().collect();
        let data: Vec<&str> = lines.iter().filter(|l| !l.starts_with('#')).copied().collect();
        assert_eq!(data.len(), 2);
        assert_eq!(data[0], "n,residual_norm,beta,alpha_last,stagnated");
        assert!(data[1].starts_with("0,"));
        assert!(data[1].ends_with(",,,false"));
    }

    #[test]
    fn cycle_gmres_residual_column_is_ones_then_zero() {
        let p = cycle(20, 0).unwrap();
        let t = gmres_run(&p, &SolveConfig::default()).unwrap();
        let export = TraceExport::from_trace(&t, &p).unwrap();
        assert_eq!(export.rows.len(), 21);
        for row in &export.rows[..20] {
            assert!((row.residual_norm - 1.0).abs() <= 1e-12);
        }
        assert!(export.rows[20].residual_norm <= 1e-10);
        assert_eq!(export.metadata.grade, Some(20));
        assert_eq!(export.metadata.stagnation_index, Some(0));
        let csv = export.to_csv_string();
        assert!(csv.contains("\n0,1.0000000000000000e0,,,false\n"));
    }

    #[test]
    fn anderson_rows_carry_beta_and_newest_coefficient() {
        let p = cycle(4, 1).unwrap();
        let cfg = SolveConfig::default();
        let t = anderson_run(&p, &MixingSchedule::constant(1.0), Window::Infinite, &cfg).unwrap();
        let export = TraceExport::from_trace(&t, &p).unwrap();
        assert_eq!(export.metadata.anderson_index, Some(1));
        let last = export.rows.last().unwrap();
        assert_eq!(last.beta, None);
        assert_eq!(last.alpha_last, None);
        assert!(last.stagnated);
        for row in &export.rows[..export.rows.len() - 1] {
            assert_eq!(row.beta, Some(1.0));
        }
    }

    #[test]
    fn json_round_trip_preserves_every_number() {
        let p = random_dense(7, 30.0, 11).unwrap();
        let t = gmres_run(&p, &SolveConfig::default()).unwrap();
        let export = TraceExport::from_trace(&t, &p).unwrap();
        let json = export.to_json_string().unwrap();
        let back = TraceExport::from_json_str(&json).unwrap();
        assert_eq!(export, back);
        for (a, b) in export.rows.iter().zip(back.rows.iter()) {
            assert!(a.residual_norm.to_bits() == b.residual_norm.to_bits());
        }
    }

    #[test]
    fn file_export_writes_what_render_returns() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trace.csv");
        let p = cycle(3, 0).unwrap();
        let t = gmres_run(&p, &SolveConfig::default()).unwrap();
        export_trace(&t, &p, ExportFormat::Csv, &path).unwrap();
        let body = std::fs::read_to_string(&path).unwrap();
        let expected = TraceExport::from_trace(&t, &p).unwrap().to_csv_string();
        assert_eq!(body, expected);
        assert!(export_trace(&t, &p, ExportFormat::Csv, "/nonexistent/dir/t.csv").is_err());
    }
}
