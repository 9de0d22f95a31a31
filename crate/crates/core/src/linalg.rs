//! Dense vector helpers and a row-major matrix.
//!
//! Sampled oracles touch one row at a time, so matrices are stored row-major
//! and handed to `nalgebra` only for factorizations.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    norm_sq(a).sqrt()
}

/// `y += alpha * x`
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    dist_sq(a, b).sqrt()
}

pub fn scale(alpha: f64, a: &[f64]) -> Vec<f64> {
    a.iter().map(|x| alpha * x).collect()
}

pub fn all_finite(a: &[f64]) -> bool {
    a.iter().all(|v| v.is_finite())
}

/// Dense row-major matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        ensure(data.len() == rows * cols, || {
            format!(
                "matrix payload has {} entries, expected {rows}x{cols}",
                data.len()
            )
        })?;
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        ensure(rows.iter().all(|r| r.len() == cols), || {
            "ragged rows".to_string()
        })?;
        let data = rows.iter().flatten().copied().collect();
        Ok(Matrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
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
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// `A x`
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// `out = A x`
    pub fn mul_vec_into(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = dot(self.row(i), x);
        }
    }

    /// `A^T u`
    pub fn tr_mul_vec(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        self.tr_mul_vec_into(u, &mut out);
        out
    }

    /// `out = A^T u`
    pub fn tr_mul_vec_into(&self, u: &[f64], out: &mut [f64]) {
        debug_assert_eq!(u.len(), self.rows);
        out.iter_mut().for_each(|o| *o = 0.0);
        for (i, &ui) in u.iter().enumerate() {
            if ui != 0.0 {
                axpy(ui, self.row(i), out);
            }
        }
    }

    pub fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    /// `A^T A / scale`
    pub fn gram(&self, scale: f64) -> DMatrix<f64> {
        let a = self.to_nalgebra();
        a.transpose() * &a / scale
    }

    /// Largest singular value squared, from a symmetric eigendecomposition of the Gram matrix.
    pub fn spectral_norm_sq(&self) -> f64 {
        if self.rows == 0 || self.cols == 0 {
            return 0.0;
        }
        let g = self.gram(1.0);
        SymmetricEigen::new(g)
            .eigenvalues
            .iter()
            .copied()
            .fold(0.0, f64::max)
    }

    /// Power-iteration estimate of the spectral norm squared.
    ///
    /// Deterministic start vector (all ones); a few iterations give a slight underestimate.
    pub fn power_norm_sq(&self, iterations: usize) -> f64 {
        if self.rows == 0 || self.cols == 0 {
            return 0.0;
        }
        let mut v = vec![1.0 / (self.cols as f64).sqrt(); self.cols];
        let mut av = vec![0.0; self.rows];
        let mut est = 0.0;
        for _ in 0..iterations {
            self.mul_vec_into(&v, &mut av);
            let w = self.tr_mul_vec(&av);
            let nw = norm(&w);
            if nw == 0.0 {
                // start vector in the kernel; fall back to the Frobenius bound
                return norm_sq(&self.data);
            }
            est = nw;
            v = scale(1.0 / nw, &w);
        }
        est
    }
}

pub fn to_dvector(x: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(x)
}
