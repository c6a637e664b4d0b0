//! Dense vector and matrix helpers.
//!
//! Vectors are plain `Vec<S>` / `&[S]`; the routines here are the handful of
//! BLAS-1/2 style kernels the solvers need, plus a Cholesky factorization used
//! for the affine projection.

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is not positive definite (pivot {index} = {pivot})")]
    NotPositiveDefinite { index: usize, pivot: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

#[inline]
pub fn dot<S: Scalar>(x: &[S], y: &[S]) -> S {
    debug_assert_eq!(x.len(), y.len());
    x.iter().zip(y).fold(S::zero(), |acc, (&a, &b)| acc + a * b)
}

#[inline]
pub fn norm_sq<S: Scalar>(x: &[S]) -> S {
    dot(x, x)
}

#[inline]
pub fn norm<S: Scalar>(x: &[S]) -> S {
    norm_sq(x).sqrt()
}

/// Euclidean norm computed with scaling, safe against overflow and underflow
/// of the squared entries.
pub fn norm_scaled<S: Scalar>(x: &[S]) -> S {
    let amax = x.iter().fold(S::zero(), |m, &v| m.max(v.abs()));
    if amax == S::zero() || !amax.is_finite() {
        return amax;
    }
    let s = x.iter().fold(S::zero(), |acc, &v| {
        let q = v / amax;
        acc + q * q
    });
    amax * s.sqrt()
}

/// `‖x − y‖²`
#[inline]
pub fn dist_sq<S: Scalar>(x: &[S], y: &[S]) -> S {
    debug_assert_eq!(x.len(), y.len());
    x.iter().zip(y).fold(S::zero(), |acc, (&a, &b)| {
        let d = a - b;
        acc + d * d
    })
}

#[inline]
pub fn dist<S: Scalar>(x: &[S], y: &[S]) -> S {
    dist_sq(x, y).sqrt()
}

pub fn sub<S: Scalar>(x: &[S], y: &[S]) -> Vec<S> {
    x.iter().zip(y).map(|(&a, &b)| a - b).collect()
}

pub fn add<S: Scalar>(x: &[S], y: &[S]) -> Vec<S> {
    x.iter().zip(y).map(|(&a, &b)| a + b).collect()
}

pub fn scale<S: Scalar>(c: S, x: &[S]) -> Vec<S> {
    x.iter().map(|&a| c * a).collect()
}

/// `y ← y + c·x`
#[inline]
pub fn axpy<S: Scalar>(c: S, x: &[S], y: &mut [S]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi = *yi + c * xi;
    }
}

pub fn norm_l1<S: Scalar>(x: &[S]) -> S {
    x.iter().fold(S::zero(), |acc, &v| acc + v.abs())
}

pub fn norm_inf<S: Scalar>(x: &[S]) -> S {
    x.iter().fold(S::zero(), |m, &v| m.max(v.abs()))
}

pub fn count_nonzero<S: Scalar>(x: &[S]) -> usize {
    x.iter().filter(|v| **v != S::zero()).count()
}

pub fn all_finite<S: Scalar>(x: &[S]) -> bool {
    x.iter().all(|v| v.is_finite())
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: Scalar> Matrix<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![S::zero(); rows * cols],
        }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<S>) -> Result<Self, LinalgError> {
        if data.len() != rows * cols {
            return Err(LinalgError::DimensionMismatch {
                expected: rows * cols,
                got: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[S] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> S {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: S) {
        self.data[i * self.cols + j] = v;
    }

    pub fn as_slice(&self) -> &[S] {
        &self.data
    }

    /// `A·x`
    pub fn mul_vec(&self, x: &[S]) -> Vec<S> {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// `Aᵀ·y`
    pub fn tmul_vec(&self, y: &[S]) -> Vec<S> {
        debug_assert_eq!(y.len(), self.rows);
        let mut out = vec![S::zero(); self.cols];
        for (i, &yi) in y.iter().enumerate() {
            if yi != S::zero() {
                axpy(yi, self.row(i), &mut out);
            }
        }
        out
    }

    /// `A·Aᵀ`, symmetric `rows × rows`.
    pub fn gram(&self) -> Matrix<S> {
        let m = self.rows;
        let mut g = Matrix::zeros(m, m);
        for i in 0..m {
            for j in 0..=i {
                let v = dot(self.row(i), self.row(j));
                g.set(i, j, v);
                g.set(j, i, v);
            }
        }
        g
    }
}

/// Lower-triangular Cholesky factor `L` with `M = L·Lᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cholesky<S> {
    n: usize,
    l: Vec<S>,
}

impl<S: Scalar> Cholesky<S> {
    /// Factorizes a symmetric positive-definite matrix. Pivots below
    /// `rel_tol · max diag` are treated as rank deficiency.
    pub fn factor(m: &Matrix<S>, rel_tol: S) -> Result<Self, LinalgError> {
        let n = m.rows();
        if m.cols() != n {
            return Err(LinalgError::DimensionMismatch {
                expected: n,
                got: m.cols(),
            });
        }
        let max_diag = (0..n).fold(S::zero(), |acc, i| acc.max(m.get(i, i).abs()));
        let floor = rel_tol * max_diag;
        let mut l = vec![S::zero(); n * n];
        for j in 0..n {
            let mut d = m.get(j, j);
            for k in 0..j {
                d = d - l[j * n + k] * l[j * n + k];
            }
            if !(d > floor) || !d.is_finite() {
                return Err(LinalgError::NotPositiveDefinite {
                    index: j,
                    pivot: d.as_f64(),
                });
            }
            let djj = d.sqrt();
            l[j * n + j] = djj;
            for i in (j + 1)..n {
                let mut s = m.get(i, j);
                for k in 0..j {
                    s = s - l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / djj;
            }
        }
        Ok(Self { n, l })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `M·x = rhs`.
    pub fn solve(&self, rhs: &[S]) -> Vec<S> {
        let n = self.n;
        debug_assert_eq!(rhs.len(), n);
        let mut y = rhs.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s = s - self.l[i * n + k] * y[k];
            }
            y[i] = s / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s = s - self.l[k * n + i] * y[k];
            }
            y[i] = s / self.l[i * n + i];
        }
        y
    }
}
