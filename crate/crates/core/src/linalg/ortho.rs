//! Incremental orthonormalization and column-space projection.

use crate::error::{Error, Result};
use crate::linalg::{Matrix, PivotedQr, Vector};

/// Result of orthonormalizing a vector against an existing basis.
#[derive(Debug, Clone)]
pub struct ExtendOutcome {
    /// New unit vector, absent when `v` was dependent on the basis.
    pub q: Option<Vector>,
    /// Coefficients of `v` along the existing basis vectors.
    pub coeffs: Vec<f64>,
    /// Norm of the remainder after projection.
    pub remainder_norm: f64,
    /// True when the remainder fell below dep_tol * ||v||.
    pub dependent: bool,
}

/// Orthogonalizes `v` against the orthonormal columns in `basis` by modified
/// Gram-Schmidt with one reorthogonalization pass (two sweeps total).
///
/// `v` is declared dependent when the remainder norm is <= dep_tol * ||v||.
/// A zero input vector counts as dependent with remainder 0.
pub fn orthonormal_extend(basis: &[Vector], v: &Vector, dep_tol: f64) -> Result<ExtendOutcome> {
    let n = v.len();
    if basis.iter().any(|q| q.len() != n) {
        return Err(Error::DimensionMismatch {
            context: "orthonormal_extend",
            expected: n,
            got: basis.iter().map(|q| q.len()).find(|&l| l != n).unwrap_or(n),
        });
    }
    let v_norm = v.norm();
    let mut w = v.clone();
    let mut coeffs = vec![0.0; basis.len()];
    for _pass in 0..2 {
        for (j, q) in basis.iter().enumerate() {
            let h = q.dot(&w);
            coeffs[j] += h;
            w.add_scaled(-h, q);
        }
    }
    let remainder_norm = w.norm();
    if !remainder_norm.is_finite() {
        return Err(Error::NonFinite("orthonormal_extend"));
    }
    let dependent = remainder_norm <= dep_tol * v_norm || v_norm == 0.0;
    let q = if dependent {
        None
    } else {
        Some(w.scale(1.0 / remainder_norm))
    };
    Ok(ExtendOutcome {
        q,
        coeffs,
        remainder_norm,
        dependent,
    })
}

/// Growable orthonormal basis built by repeated `orthonormal_extend`.
#[derive(Debug, Clone, Default)]
pub struct OrthonormalBasis {
    vectors: Vec<Vector>,
}

impl OrthonormalBasis {
    pub fn new() -> Self {
        Self { vectors: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vectors(&self) -> &[Vector] {
        &self.vectors
    }

    /// Tries to add `v`; returns the outcome and keeps the new direction when
    /// it is independent.
    pub fn push(&mut self, v: &Vector, dep_tol: f64) -> Result<ExtendOutcome> {
        let out = orthonormal_extend(&self.vectors, v, dep_tol)?;
        if let Some(q) = &out.q {
            self.vectors.push(q.clone());
        }
        Ok(out)
    }
}

/// Orthogonal projection of `v` onto the column space of `m`, computed from a
/// rank-revealing QR of `m`.
pub fn project_onto_columnspace(m: &Matrix, v: &Vector, rank_tol: f64) -> Result<Vector> {
    if v.len() != m.rows() {
        return Err(Error::DimensionMismatch {
            context: "project_onto_columnspace",
            expected: m.rows(),
            got: v.len(),
        });
    }
    let qr = PivotedQr::factor(m, rank_tol)?;
    let coeffs = qr.least_squares(v)?;
    m.matvec(&coeffs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn extends_axis_vectors() {
        let e1 = Vector::basis(3, 0);
        let v = Vector::new(vec![1.0, 1.0, 0.0]).unwrap();
        let out = orthonormal_extend(&[e1], &v, 1e-10).unwrap();
        assert!(!out.dependent);
        let q = out.q.unwrap();
        assert_abs_diff_eq!(q[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(q[1], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(out.coeffs[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(out.remainder_norm, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn detects_dependence() {
        let e1 = Vector::basis(3, 0);
        let e2 = Vector::basis(3, 1);
        let v = Vector::new(vec![2.0, -3.0, 0.0]).unwrap();
        let out = orthonormal_extend(&[e1, e2], &v, 1e-10).unwrap();
        assert!(out.dependent);
        assert!(out.q.is_none());
        assert!(out.remainder_norm <= 1e-10 * v.norm());
    }

    #[test]
    fn tiny_remainder_below_tolerance_is_dependent() {
        let e1 = Vector::basis(2, 0);
        let v = Vector::new(vec![1.0, 1e-14]).unwrap();
        let out = orthonormal_extend(&[e1], &v, 1e-10).unwrap();
        assert!(out.dependent, "1e-14 < 1e-10 * ||v||");
    }

    #[test]
    fn zero_vector_is_dependent() {
        let out = orthonormal_extend(&[], &Vector::zeros(3), 1e-10).unwrap();
        assert!(out.dependent);
        assert_eq!(out.remainder_norm, 0.0);
    }

    #[test]
    fn basis_stays_orthonormal() {
        let mut basis = OrthonormalBasis::new();
        let vs = [
            Vector::new(vec![1.0, 2.0, 0.0, -1.0]).unwrap(),
            Vector::new(vec![0.5, -1.0, 3.0, 2.0]).unwrap(),
            Vector::new(vec![2.0, 2.0, 2.0, 2.0]).unwrap(),
        ];
        for v in &vs {
            let out = basis.push(v, 1e-10).unwrap();
            assert!(!out.dependent);
        }
        assert_eq!(basis.len(), 3);
        for i in 0..3 {
            for j in 0..3 {
                let d = basis.vectors()[i].dot(&basis.vectors()[j]);
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(d, expect, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn projection_onto_axis_plane() {
        let m = Matrix::from_columns(&[Vector::basis(3, 0), Vector::basis(3, 1)]).unwrap();
        let v = Vector::new(vec![1.0, 2.0, 3.0]).unwrap();
        let p = project_onto_columnspace(&m, &v, 1e-10).unwrap();
        assert_eq!(p.as_slice(), &[1.0, 2.0, 0.0]);
    }

    #[test]
    fn full_rank_projection_is_identity() {
        let m = Matrix::new(3, 3, vec![1.0, 1.0, 0.0, 0.0, 1.0, 1.0, 1.0, 0.0, 1.0]).unwrap();
        let v = Vector::new(vec![0.3, -0.7, 2.0]).unwrap();
        let p = project_onto_columnspace(&m, &v, 1e-10).unwrap();
        for i in 0..3 {
            assert_abs_diff_eq!(p[i], v[i], epsilon = 1e-12);
        }
    }

    #[test]
    fn projection_residual_orthogonal_to_columns() {
        let m = Matrix::new(4, 2, vec![1.0, 0.5, 2.0, -1.0, 0.0, 3.0, 1.0, 1.0]).unwrap();
        let v = Vector::new(vec![1.0, 1.0, 1.0, 1.0]).unwrap();
        let p = project_onto_columnspace(&m, &v, 1e-10).unwrap();
        let res = &v - &p;
        for j in 0..2 {
            assert_abs_diff_eq!(m.column(j).dot(&res), 0.0, epsilon = 1e-12);
        }
        // Projecting twice changes nothing.
        let p2 = project_onto_columnspace(&m, &p, 1e-10).unwrap();
        for i in 0..4 {
            assert_abs_diff_eq!(p2[i], p[i], epsilon = 1e-12);
        }
    }
}
