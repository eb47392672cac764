//! Iterative solvers for linear systems A*x + b = 0 (simple mixing, GMRES,
//! Anderson acceleration with arbitrary windows and mixing parameters, and
//! Anderson with per-step optimal mixing), together with diagnostics that
//! classify when Anderson stalls short of the solution and verifiers for the
//! exact relations tying Anderson iterates to GMRES iterates.

pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod io;
pub mod linalg;
pub mod problem;
pub mod solvers;
pub mod trace;

pub use diagnostics::{classify, Case, DiagnosticsReport, RelationCheck};
pub use error::{Error, Result};
pub use linalg::{Matrix, Vector};
pub use problem::{LinearProblem, MixingSchedule, ScheduleKind, SolveConfig, Window};
pub use trace::{Method, SolverTrace, Termination};
