//! Small dense linear algebra: just enough for structure-constant work,
//! metric inversion, nullspaces, and the 2×2/3×3 complex solves of the
//! normal-form computation.

use std::ops::{Index, IndexMut};

use num_complex::Complex;
use thiserror::Error;

use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is singular to working precision (pivot {pivot:e} at column {column})")]
    Singular { column: usize, pivot: f64 },
    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: String, got: String },
    #[error("jacobi sweep did not converge in {0} sweeps")]
    NoConvergence(usize),
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![T::zero(); rows * cols] }
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

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self, LinalgError> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(LinalgError::Shape {
                    expected: format!("rows of length {c}"),
                    got: format!("row of length {}", row.len()),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Self { rows: r, cols: c, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
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

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|i| self.row(i).iter().zip(x).map(|(&a, &b)| a * b).sum()).collect()
    }

    pub fn matmul(&self, other: &Self) -> Self {
        debug_assert_eq!(self.cols, other.rows);
        Self::from_fn(self.rows, other.cols, |i, j| (0..self.cols).map(|k| self[(i, k)] * other[(k, j)]).sum())
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, x| m.max(x.abs()))
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Largest |a_ij − a_ji|.
    pub fn asymmetry(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.rows {
            for j in 0..i {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    /// Solves `self · x = b` by Gaussian elimination with partial pivoting.
    pub fn solve(&self, b: &[T]) -> Result<Vec<T>, LinalgError> {
        let n = self.rows;
        if !self.is_square() || b.len() != n {
            return Err(LinalgError::Shape {
                expected: format!("{n}x{n} system"),
                got: format!("{}x{} with rhs {}", self.rows, self.cols, b.len()),
            });
        }
        let mut a = self.data.clone();
        let mut x = b.to_vec();
        let scale = self.max_abs().max(T::min_positive_value());
        for col in 0..n {
            let (piv, pval) = (col..n).map(|r| (r, a[r * n + col].abs())).fold((col, -T::one()), |best, cur| {
                if cur.1 > best.1 {
                    cur
                } else {
                    best
                }
            });
            if pval <= scale * T::epsilon() * T::lit(16.0) {
                return Err(LinalgError::Singular { column: col, pivot: pval.as_f64() });
            }
            if piv != col {
                for k in 0..n {
                    a.swap(col * n + k, piv * n + k);
                }
                x.swap(col, piv);
            }
            for r in col + 1..n {
                let f = a[r * n + col] / a[col * n + col];
                if f != T::zero() {
                    for k in col..n {
                        a[r * n + k] = a[r * n + k] - f * a[col * n + k];
                    }
                    x[r] = x[r] - f * x[col];
                }
            }
        }
        for col in (0..n).rev() {
            let mut s = x[col];
            for k in col + 1..n {
                s = s - a[col * n + k] * x[k];
            }
            x[col] = s / a[col * n + col];
        }
        Ok(x)
    }

    pub fn inverse(&self) -> Result<Self, LinalgError> {
        let n = self.rows;
        let mut inv = Self::zeros(n, n);
        for j in 0..n {
            let mut e = vec![T::zero(); n];
            e[j] = T::one();
            let col = self.solve(&e)?;
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        Ok(inv)
    }

    /// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
    pub fn symmetric_eigenvalues(&self) -> Result<Vec<T>, LinalgError> {
        let n = self.rows;
        let mut a = self.clone();
        const MAX_SWEEPS: usize = 100;
        for _ in 0..MAX_SWEEPS {
            let off: T = (0..n)
                .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| a[(i, j)] * a[(i, j)])
                .sum();
            let diag: T = (0..n).map(|i| a[(i, i)] * a[(i, i)]).sum();
            if off <= T::epsilon() * T::epsilon() * diag.max(T::min_positive_value()) {
                let mut ev: Vec<T> = (0..n).map(|i| a[(i, i)]).collect();
                ev.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
                return Ok(ev);
            }
            for p in 0..n {
                for q in p + 1..n {
                    let apq = a[(p, q)];
                    if apq == T::zero() {
                        continue;
                    }
                    let theta = (a[(q, q)] - a[(p, p)]) / (T::lit(2.0) * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                    let c = T::one() / (t * t + T::one()).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[(k, p)];
                        let akq = a[(k, q)];
                        a[(k, p)] = c * akp - s * akq;
                        a[(k, q)] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[(p, k)];
                        let aqk = a[(q, k)];
                        a[(p, k)] = c * apk - s * aqk;
                        a[(q, k)] = s * apk + c * aqk;
                    }
                }
            }
        }
        Err(LinalgError::NoConvergence(MAX_SWEEPS))
    }

    /// One-sided Jacobi SVD. Returns singular values and the right singular
    /// vectors as columns of `V`, in matching order (not sorted).
    pub fn svd_right(&self) -> Result<(Vec<T>, Self), LinalgError> {
        let (m, n) = (self.rows, self.cols);
        let mut u = self.clone();
        let mut v = Self::identity(n);
        const MAX_SWEEPS: usize = 80;
        let tol = T::epsilon() * T::lit(4.0);
        for _ in 0..MAX_SWEEPS {
            let mut rotated = false;
            for p in 0..n {
                for q in p + 1..n {
                    let (mut alpha, mut beta, mut gamma) = (T::zero(), T::zero(), T::zero());
                    for i in 0..m {
                        alpha = alpha + u[(i, p)] * u[(i, p)];
                        beta = beta + u[(i, q)] * u[(i, q)];
                        gamma = gamma + u[(i, p)] * u[(i, q)];
                    }
                    if gamma.abs() <= tol * (alpha * beta).sqrt() || gamma == T::zero() {
                        continue;
                    }
                    rotated = true;
                    let zeta = (beta - alpha) / (T::lit(2.0) * gamma);
                    let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                    let c = T::one() / (T::one() + t * t).sqrt();
                    let s = c * t;
                    for i in 0..m {
                        let up = u[(i, p)];
                        let uq = u[(i, q)];
                        u[(i, p)] = c * up - s * uq;
                        u[(i, q)] = s * up + c * uq;
                    }
                    for i in 0..n {
                        let vp = v[(i, p)];
                        let vq = v[(i, q)];
                        v[(i, p)] = c * vp - s * vq;
                        v[(i, q)] = s * vp + c * vq;
                    }
                }
            }
            if !rotated {
                let sv = (0..n).map(|j| (0..m).map(|i| u[(i, j)] * u[(i, j)]).sum::<T>().sqrt()).collect();
                return Ok((sv, v));
            }
        }
        Err(LinalgError::NoConvergence(MAX_SWEEPS))
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// Solves a dense complex system `a · x = b` (`a` row-major `n×n`).
pub fn solve_complex<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> Result<Vec<Complex<T>>, LinalgError> {
    let n = b.len();
    if a.len() != n * n {
        return Err(LinalgError::Shape { expected: format!("{} entries", n * n), got: format!("{} entries", a.len()) });
    }
    let mut a = a.to_vec();
    let mut x = b.to_vec();
    let scale = a.iter().fold(T::zero(), |m, z| m.max(z.norm())).max(T::min_positive_value());
    for col in 0..n {
        let (piv, pval) = (col..n).map(|r| (r, a[r * n + col].norm())).fold((col, -T::one()), |best, cur| {
            if cur.1 > best.1 {
                cur
            } else {
                best
            }
        });
        if pval <= scale * T::epsilon() * T::lit(16.0) {
            return Err(LinalgError::Singular { column: col, pivot: pval.as_f64() });
        }
        if piv != col {
            for k in 0..n {
                a.swap(col * n + k, piv * n + k);
            }
            x.swap(col, piv);
        }
        for r in col + 1..n {
            let f = a[r * n + col] / a[col * n + col];
            for k in col..n {
                let v = a[col * n + k];
                a[r * n + k] = a[r * n + k] - f * v;
            }
            let xc = x[col];
            x[r] = x[r] - f * xc;
        }
    }
    for col in (0..n).rev() {
        let mut s = x[col];
        for k in col + 1..n {
            s = s - a[col * n + k] * x[k];
        }
        x[col] = s / a[col * n + col];
    }
    Ok(x)
}
