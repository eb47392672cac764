//! The five iterative methods, each producing a complete run record.

mod anderson;
mod gmres;
mod mixing;

pub use anderson::{anderson_coefficients, anderson_run, beta_star, optimized_anderson_run};
pub use gmres::gmres_run;
pub use mixing::{fixed_point_run, simple_mixing_run, DIVERGENCE_FACTOR};
