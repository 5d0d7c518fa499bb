//! Dense row-major matrices and a sqrt-free symmetric factorization.
//!
//! The factorization is `A = L D L'` with unit lower-triangular `L`. It needs
//! only field operations, so it runs unchanged over exact rationals, and a
//! matrix is declared positive definite when every pivot of `D` exceeds
//! `1e-12` times the largest diagonal entry of `A`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{Real, Scalar};

/// Relative pivot threshold for the positive-definiteness check.
pub const PIVOT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn diagonal(diag: &[T]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} values for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(n_rows * n_cols);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n_cols {
                return Err(Error::Dimension(format!(
                    "row {i} has {} entries, expected {n_cols}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Ok(Self {
            rows: n_rows,
            cols: n_cols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(v.len(), self.cols, "matrix-vector dimension mismatch");
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    /// `v' A v`.
    pub fn quad_form(&self, v: &[T]) -> T {
        dot(v, &self.mul_vec(v))
    }

    pub fn scale(&self, t: T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| x * t).collect(),
        }
    }

    pub fn max_diagonal(&self) -> T {
        (0..self.rows.min(self.cols))
            .map(|i| self[(i, i)])
            .fold(T::zero(), T::max_of)
    }

    /// Largest `|a_ij - a_ji|` relative to the largest diagonal entry.
    pub fn asymmetry(&self) -> T {
        let scale = self.max_diagonal().magnitude();
        let mut worst = T::zero();
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                worst = worst.max_of((self[(i, j)] - self[(j, i)]).magnitude());
            }
        }
        if scale > T::zero() {
            worst / scale
        } else {
            worst
        }
    }

    /// Restriction to the given rows and columns (same index list for both).
    pub fn principal_submatrix(&self, indices: &[usize]) -> Self {
        let n = indices.len();
        let mut m = Self::zeros(n, n);
        for (a, &i) in indices.iter().enumerate() {
            for (b, &j) in indices.iter().enumerate() {
                m[(a, b)] = self[(i, j)];
            }
        }
        m
    }
}

impl<T> std::ops::Index<(usize, usize)> for Matrix<T> {
    type Output = T;

    fn index(&self, (i, j): (usize, usize)) -> &T {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

/// `L D L'` factorization of a symmetric positive definite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Ldlt<T> {
    n: usize,
    // strictly lower part of L, row-major n x n; the unit diagonal is implicit
    lower: Vec<T>,
    pivots: Vec<T>,
}

impl<T: Scalar> Ldlt<T> {
    /// Factors `a`, reading only its lower triangle. Fails with
    /// [`Error::SingularCovariance`] on any pivot not above
    /// `PIVOT_TOL * max diag(a)`.
    pub fn factor(a: &Matrix<T>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::Dimension(format!(
                "expected a square matrix, got {}x{}",
                a.rows(),
                a.cols()
            )));
        }
        let n = a.rows();
        let threshold = T::tol(PIVOT_TOL) * a.max_diagonal();
        let mut lower = vec![T::zero(); n * n];
        let mut pivots = vec![T::zero(); n];
        for j in 0..n {
            let mut d = a[(j, j)];
            for k in 0..j {
                let l = lower[j * n + k];
                d = d - l * l * pivots[k];
            }
            if !(d > threshold) || !d.is_finite_value() || d <= T::zero() {
                return Err(Error::SingularCovariance);
            }
            pivots[j] = d;
            for i in (j + 1)..n {
                let mut v = a[(i, j)];
                for k in 0..j {
                    v = v - lower[i * n + k] * lower[j * n + k] * pivots[k];
                }
                lower[i * n + j] = v / d;
            }
        }
        Ok(Self { n, lower, pivots })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn pivots(&self) -> &[T] {
        &self.pivots
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        assert_eq!(b.len(), self.n, "right-hand side has wrong length");
        let n = self.n;
        let mut x = b.to_vec();
        for i in 0..n {
            let mut v = x[i];
            for k in 0..i {
                v = v - self.lower[i * n + k] * x[k];
            }
            x[i] = v;
        }
        for i in 0..n {
            x[i] = x[i] / self.pivots[i];
        }
        for i in (0..n).rev() {
            let mut v = x[i];
            for k in (i + 1)..n {
                v = v - self.lower[k * n + i] * x[k];
            }
            x[i] = v;
        }
        x
    }

    /// `A^{-1}`, column by column. Only used where a dense inverse is required.
    pub fn inverse(&self) -> Matrix<T> {
        let n = self.n;
        let mut inv = Matrix::zeros(n, n);
        let mut e = vec![T::zero(); n];
        for j in 0..n {
            e[j] = T::one();
            let col = self.solve(&e);
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
            e[j] = T::zero();
        }
        // symmetrize away the rounding asymmetry of independent solves
        for i in 0..n {
            for j in (i + 1)..n {
                let m = (inv[(i, j)] + inv[(j, i)]) / T::of(2.0);
                inv[(i, j)] = m;
                inv[(j, i)] = m;
            }
        }
        inv
    }
}

impl<T: Real> Ldlt<T> {
    /// Cholesky factor `L sqrt(D)` (lower triangular, row-major).
    pub fn cholesky_lower(&self) -> Matrix<T> {
        let n = self.n;
        let mut c = Matrix::zeros(n, n);
        for j in 0..n {
            let root = self.pivots[j].sqrt();
            c[(j, j)] = root;
            for i in (j + 1)..n {
                c[(i, j)] = self.lower[i * n + j] * root;
            }
        }
        c
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;

    fn spd3() -> Matrix<f64> {
        Matrix::from_rows(&[
            vec![4.0, 2.0, 0.4],
            vec![2.0, 5.0, 1.0],
            vec![0.4, 1.0, 3.0],
        ])
        .unwrap()
    }

    #[test]
    fn solve_reproduces_rhs() {
        let a = spd3();
        let f = Ldlt::factor(&a).unwrap();
        let b = [1.0, -2.0, 0.5];
        let x = f.solve(&b);
        let back = a.mul_vec(&x);
        for (u, v) in back.iter().zip(b) {
            assert!((u - v).abs() < 1e-14);
        }
    }

    #[test]
    fn cholesky_factor_rebuilds_matrix() {
        let a = spd3();
        let c = Ldlt::factor(&a).unwrap().cholesky_lower();
        for i in 0..3 {
            for j in 0..3 {
                let v: f64 = (0..3).map(|k| c[(i, k)] * c[(j, k)]).sum();
                assert!((v - a[(i, j)]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn rejects_semidefinite() {
        let a = Matrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert_eq!(Ldlt::factor(&a), Err(Error::SingularCovariance));
        let z = Matrix::<f64>::zeros(2, 2);
        assert_eq!(Ldlt::factor(&z), Err(Error::SingularCovariance));
    }

    #[test]
    fn rejects_tiny_pivot_relative_to_scale() {
        let a = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1e-13]]).unwrap();
        assert!(Ldlt::factor(&a).is_err());
        let b = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1e-11]]).unwrap();
        assert!(Ldlt::factor(&b).is_ok());
    }

    #[test]
    fn exact_inverse_over_rationals() {
        let r = |n: i128, d: i128| Ratio::new(n, d);
        let a = Matrix::from_rows(&[vec![r(1, 100), r(0, 1)], vec![r(0, 1), r(4, 100)]]).unwrap();
        let inv = Ldlt::factor(&a).unwrap().inverse();
        assert_eq!(inv[(0, 0)], r(100, 1));
        assert_eq!(inv[(1, 1)], r(25, 1));
        assert_eq!(inv[(0, 1)], r(0, 1));
    }

    #[test]
    fn principal_submatrix_permutes() {
        let a = spd3();
        let s = a.principal_submatrix(&[2, 0]);
        assert_eq!(s[(0, 0)], 3.0);
        assert_eq!(s[(0, 1)], 0.4);
        assert_eq!(s[(1, 1)], 4.0);
    }
}
