//! Minimal dense linear algebra: row-major matrices at desk scale.
//!
//! Nothing here is tuned for large problems; dimensions are tens, not
//! thousands, and clarity wins over blocking tricks.

use crate::error::{Error, Result};

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        for row in rows {
            if row.len() != c {
                return Err(Error::DimensionMismatch {
                    context: "Matrix::from_rows row length",
                    expected: c,
                    got: row.len(),
                });
            }
        }
        Ok(Matrix {
            rows: r,
            cols: c,
            data: rows.concat(),
        })
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        t
    }

    /// y = A x.
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::DimensionMismatch {
                context: "matvec input length",
                expected: self.cols,
                got: x.len(),
            });
        }
        let mut y = vec![0.0; self.rows];
        for i in 0..self.rows {
            let row = self.row(i);
            let mut acc = 0.0;
            for j in 0..self.cols {
                acc += row[j] * x[j];
            }
            y[i] = acc;
        }
        Ok(y)
    }

    /// C = A B.
    pub fn matmul(&self, b: &Matrix) -> Result<Matrix> {
        if self.cols != b.rows {
            return Err(Error::DimensionMismatch {
                context: "matmul inner dimension",
                expected: self.cols,
                got: b.rows,
            });
        }
        let mut c = Matrix::zeros(self.rows, b.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a_ik = self.data[i * self.cols + k];
                if a_ik == 0.0 {
                    continue;
                }
                let brow = b.row(k);
                let crow = &mut c.data[i * b.cols..(i + 1) * b.cols];
                for j in 0..b.cols {
                    crow[j] += a_ik * brow[j];
                }
            }
        }
        Ok(c)
    }

    pub fn frobenius_norm(&self) -> f64 {
        pairwise_sum_by(&self.data, |v| v * v).sqrt()
    }

    pub fn scale(&self, s: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        if self.rows != self.cols {
            return false;
        }
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                if (self.get(i, j) - self.get(j, i)).abs() > tol {
                    return false;
                }
            }
        }
        true
    }
}

/// Eigendecomposition of a symmetric matrix by the cyclic Jacobi method.
///
/// Returns (eigenvalues, eigenvectors as columns). Adequate and robust for
/// the small symmetric matrices used here; convergence is quadratic once
/// off-diagonal mass is small.
pub fn symmetric_eigen(a: &Matrix) -> Result<(Vec<f64>, Matrix)> {
    if a.rows != a.cols {
        return Err(Error::DimensionMismatch {
            context: "symmetric_eigen square input",
            expected: a.rows,
            got: a.cols,
        });
    }
    let n = a.rows;
    let mut m = a.clone();
    let mut v = Matrix::identity(n);

    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += m.get(i, j) * m.get(i, j);
            }
        }
        if off.sqrt() < 1e-14 * (1.0 + m.frobenius_norm()) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m.get(p, q);
                if apq.abs() < 1e-300 {
                    continue;
                }
                let app = m.get(p, p);
                let aqq = m.get(q, q);
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m.get(k, p);
                    let mkq = m.get(k, q);
                    m.set(k, p, c * mkp - s * mkq);
                    m.set(k, q, s * mkp + c * mkq);
                }
                for k in 0..n {
                    let mpk = m.get(p, k);
                    let mqk = m.get(q, k);
                    m.set(p, k, c * mpk - s * mqk);
                    m.set(q, k, s * mpk + c * mqk);
                }
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }
    let eigenvalues = (0..n).map(|i| m.get(i, i)).collect();
    Ok((eigenvalues, v))
}

/// Sum with a fixed pairwise (binary tree) association order.
///
/// The association depends only on the slice length, never on thread
/// scheduling, so parallel callers that split at the same midpoints get
/// bit-identical results. Also better conditioned than a running sum.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    pairwise_sum_by(xs, |v| *v)
}

/// Pairwise sum of f(x) over the slice, same canonical association order.
pub fn pairwise_sum_by<T, F: Fn(&T) -> f64 + Copy>(xs: &[T], f: F) -> f64 {
    const BASE: usize = 32;
    if xs.len() <= BASE {
        let mut acc = 0.0;
        for x in xs {
            acc += f(x);
        }
        return acc;
    }
    let mid = xs.len() / 2;
    pairwise_sum_by(&xs[..mid], f) + pairwise_sum_by(&xs[mid..], f)
}
