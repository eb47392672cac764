//! Problem ingestion, generation, and trace export.

pub mod export;
pub mod generate;
pub mod matrix_market;

pub use export::{export_trace, ExportFormat, TraceExport, TraceMetadata, TraceRow};
pub use generate::{generate_problem, ProblemSpec};
pub use matrix_market::{read_matrix_market, read_vector, write_matrix_market, write_vector};
