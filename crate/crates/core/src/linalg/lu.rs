//! LU factorization with partial pivoting for square solves.

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};

/// LU factorization P*A = L*U with partial pivoting.
#[derive(Debug, Clone)]
pub struct Lu {
    n: usize,
    /// Combined L (strict lower, unit diagonal implied) and U (upper).
    lu: Matrix,
    /// Row permutation: pivot[i] = original row now in position i.
    pivot: Vec<usize>,
}

impl Lu {
    /// Factors a square matrix. A pivot with |pivot| <= rank_tol * max|A_ij|
    /// is treated as zero and the matrix reported singular.
    pub fn factor(a: &Matrix, rank_tol: f64) -> Result<Self> {
        if a.rows() != a.cols() {
            return Err(Error::DimensionMismatch {
                context: "lu",
                expected: a.rows(),
                got: a.cols(),
            });
        }
        let n = a.rows();
        let scale = a.max_abs_entry();
        let mut lu = a.clone();
        let mut pivot: Vec<usize> = (0..n).collect();

        for k in 0..n {
            let mut best = k;
            let mut best_abs = lu.get(k, k).abs();
            for i in k + 1..n {
                let v = lu.get(i, k).abs();
                if v > best_abs {
                    best_abs = v;
                    best = i;
                }
            }
            if best_abs <= rank_tol * scale {
                return Err(Error::SingularMatrix);
            }
            if best != k {
                for j in 0..n {
                    let t = lu.get(k, j);
                    lu.set(k, j, lu.get(best, j));
                    lu.set(best, j, t);
                }
                pivot.swap(k, best);
            }
            let d = lu.get(k, k);
            for i in k + 1..n {
                let f = lu.get(i, k) / d;
                lu.set(i, k, f);
                for j in k + 1..n {
                    lu.set(i, j, lu.get(i, j) - f * lu.get(k, j));
                }
            }
        }
        Ok(Self { n, lu, pivot })
    }

    /// Solves A*x = b.
    pub fn solve(&self, b: &Vector) -> Result<Vector> {
        if b.len() != self.n {
            return Err(Error::DimensionMismatch {
                context: "lu solve",
                expected: self.n,
                got: b.len(),
            });
        }
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let mut s = b[self.pivot[i]];
            for j in 0..i {
                s -= self.lu.get(i, j) * y[j];
            }
            y[i] = s;
        }
        let mut x = vec![0.0; self.n];
        for i in (0..self.n).rev() {
            let mut s = y[i];
            for j in i + 1..self.n {
                s -= self.lu.get(i, j) * x[j];
            }
            x[i] = s / self.lu.get(i, i);
        }
        Vector::new(x)
    }
}

/// Convenience wrapper: factor then solve once.
pub fn solve_linear(a: &Matrix, b: &Vector, rank_tol: f64) -> Result<Vector> {
    Lu::factor(a, rank_tol)?.solve(b)
}
