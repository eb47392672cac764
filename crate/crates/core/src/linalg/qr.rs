//! Householder QR with column pivoting and minimum-norm least squares.

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};

/// QR factorization A*P = Q*R with column pivoting.
///
/// Reflectors are kept implicitly; `apply_qt` applies Q^T to a vector.
/// Numerical rank is decided relative to the largest diagonal of R.
#[derive(Debug, Clone)]
pub struct PivotedQr {
    rows: usize,
    cols: usize,
    /// Householder vectors, reflector k acts on rows k.. of length rows-k.
    reflectors: Vec<Vec<f64>>,
    /// Upper-triangular factor, cols x cols (rows truncated to cols when rows > cols).
    r: Matrix,
    /// perm[j] = original column index now in position j.
    perm: Vec<usize>,
    rank: usize,
}

impl PivotedQr {
    /// Factors `a`, declaring diagonal entries with |R_kk| <= rank_tol * |R_00|
    /// numerically zero.
    pub fn factor(a: &Matrix, rank_tol: f64) -> Result<Self> {
        let m = a.rows();
        let n = a.cols();
        let steps = m.min(n);
        let mut work = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut reflectors: Vec<Vec<f64>> = Vec::with_capacity(steps);

        for k in 0..steps {
            // Pivot: bring the remaining column with the largest norm to position k.
            let mut best = k;
            let mut best_norm = 0.0;
            for j in k..n {
                let s: f64 = (k..m).map(|i| work.get(i, j).powi(2)).sum();
                if s > best_norm {
                    best_norm = s;
                    best = j;
                }
            }
            if best != k {
                for i in 0..m {
                    let t = work.get(i, k);
                    work.set(i, k, work.get(i, best));
                    work.set(i, best, t);
                }
                perm.swap(k, best);
            }

            // Householder reflector zeroing column k below the diagonal.
            let norm_x = best_norm.sqrt();
            let mut v = vec![0.0; m - k];
            for i in k..m {
                v[i - k] = work.get(i, k);
            }
            if norm_x == 0.0 {
                reflectors.push(vec![0.0; m - k]);
                continue;
            }
            let alpha = if v[0] >= 0.0 { -norm_x } else { norm_x };
            v[0] -= alpha;
            let vnorm2: f64 = v.iter().map(|x| x * x).sum();
            if vnorm2 > 0.0 {
                for j in k..n {
                    let mut dot = 0.0;
                    for i in k..m {
                        dot += v[i - k] * work.get(i, j);
                    }
                    let c = 2.0 * dot / vnorm2;
                    for i in k..m {
                        work.set(i, j, work.get(i, j) - c * v[i - k]);
                    }
                }
            }
            work.set(k, k, alpha);
            for i in k + 1..m {
                work.set(i, k, 0.0);
            }
            reflectors.push(v);
        }

        let mut r = Matrix::zeros(steps, n);
        for i in 0..steps {
            for j in 0..n {
                r.set(i, j, work.get(i, j));
            }
        }

        let r00 = r.get(0, 0).abs();
        let mut rank = 0;
        for k in 0..steps {
            if r.get(k, k).abs() > rank_tol * r00 {
                rank += 1;
            } else {
                break;
            }
        }
        if !r00.is_finite() {
            return Err(Error::NonFinite("qr factor"));
        }

        Ok(Self {
            rows: m,
            cols: n,
            reflectors,
            r,
            perm,
            rank,
        })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// |R_kk| for diagnostics.
    pub fn r_diag(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols))
            .map(|k| self.r.get(k, k))
            .collect()
    }

    /// Applies Q^T to `v` (length rows).
    pub fn apply_qt(&self, v: &Vector) -> Result<Vector> {
        if v.len() != self.rows {
            return Err(Error::DimensionMismatch {
                context: "apply_qt",
                expected: self.rows,
                got: v.len(),
            });
        }
        let mut y: Vec<f64> = v.as_slice().to_vec();
        for (k, refl) in self.reflectors.iter().enumerate() {
            let vnorm2: f64 = refl.iter().map(|x| x * x).sum();
            if vnorm2 == 0.0 {
                continue;
            }
            let mut dot = 0.0;
            for i in k..self.rows {
                dot += refl[i - k] * y[i];
            }
            let c = 2.0 * dot / vnorm2;
            for i in k..self.rows {
                y[i] -= c * refl[i - k];
            }
        }
        Vector::new(y)
    }

    /// Minimum-norm least-squares solution of A*x ~ rhs.
    ///
    /// For full-rank systems this is the ordinary LS solution; for
    /// rank-deficient ones the free components are chosen to minimize ||x||.
    pub fn least_squares(&self, rhs: &Vector) -> Result<Vector> {
        let n = self.cols;
        let qtb = self.apply_qt(rhs)?;
        if self.rank == 0 {
            return Ok(Vector::zeros(n));
        }
        let r1 = self.rank;

        // d = leading rank entries of Q^T rhs.
        let d: Vec<f64> = (0..r1).map(|i| qtb[i]).collect();

        // c = R1^{-1} d by back substitution.
        let back_sub = |rhs: &[f64]| -> Vec<f64> {
            let mut x = vec![0.0; r1];
            for i in (0..r1).rev() {
                let mut s = rhs[i];
                for j in i + 1..r1 {
                    s -= self.r.get(i, j) * x[j];
                }
                x[i] = s / self.r.get(i, i);
            }
            x
        };
        let c = back_sub(&d);

        let free = n - r1;
        let mut z = vec![0.0; n];
        if free == 0 {
            z[..r1].copy_from_slice(&c);
        } else {
            // T = R1^{-1} S, columns solved independently.
            let mut t = vec![vec![0.0; free]; r1];
            for j in 0..free {
                let col: Vec<f64> = (0..r1).map(|i| self.r.get(i, r1 + j)).collect();
                let tj = back_sub(&col);
                for i in 0..r1 {
                    t[i][j] = tj[i];
                }
            }
            // Solve (I + T^T T) z2 = T^T c for the free part.
            let mut g = vec![vec![0.0; free]; free];
            for i in 0..free {
                for j in 0..free {
                    let mut s = if i == j { 1.0 } else { 0.0 };
                    for k in 0..r1 {
                        s += t[k][i] * t[k][j];
                    }
                    g[i][j] = s;
                }
            }
            let mut tc = vec![0.0; free];
            for i in 0..free {
                for k in 0..r1 {
                    tc[i] += t[k][i] * c[k];
                }
            }
            let z2 = cholesky_solve(&g, &tc)?;
            for i in 0..r1 {
                let mut s = c[i];
                for j in 0..free {
                    s -= t[i][j] * z2[j];
                }
                z[i] = s;
            }
            z[r1..].copy_from_slice(&z2);
        }

        // Undo the column permutation.
        let mut x = vec![0.0; n];
        for (pos, &orig) in self.perm.iter().enumerate() {
            x[orig] = z[pos];
        }
        Vector::new(x)
    }
}

/// Solves an SPD system by Cholesky. Small helper for the min-norm correction.
fn cholesky_solve(g: &[Vec<f64>], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = g.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = g[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            if i == j {
                if s <= 0.0 {
                    return Err(Error::SingularMatrix);
                }
                l[i][j] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut s = rhs[i];
        for k in 0..i {
            s -= l[i][k] * y[k];
        }
        y[i] = s / l[i][i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l[k][i] * x[k];
        }
        x[i] = s / l[i][i];
    }
    Ok(x)
}
