//! Dense linear algebra building blocks.

mod lu;
mod matrix;
mod ortho;
mod qr;
mod vector;

pub use lu::{solve_linear, Lu};
pub use matrix::Matrix;
pub use ortho::{orthonormal_extend, project_onto_columnspace, ExtendOutcome, OrthonormalBasis};
pub use qr::PivotedQr;
pub use vector::Vector;
