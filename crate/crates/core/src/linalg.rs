//! Small dense complex linear algebra.
//!
//! Problem sizes here are tiny (a handful of sensors, a few hundred grid
//! angles), so a row-major `Vec` backed matrix with straightforward loops is
//! all that is needed.

use std::ops::{Index, IndexMut};

use num_traits::{One, Zero};

use crate::scalar::{modulus, Real, C};

/// Dense row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMat<T: Real> {
    rows: usize,
    cols: usize,
    data: Vec<C<T>>,
}

impl<T: Real> CMat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![C::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C<T>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_columns(columns: &[Vec<C<T>>]) -> Self {
        let cols = columns.len();
        let rows = columns.first().map_or(0, Vec::len);
        assert!(columns.iter().all(|c| c.len() == rows), "ragged columns");
        Self::from_fn(rows, cols, |r, c| columns[c][r])
    }

    pub fn diagonal(diag: &[C<T>]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
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

    pub fn as_slice(&self) -> &[C<T>] {
        &self.data
    }

    pub fn row(&self, r: usize) -> &[C<T>] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<C<T>> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    pub fn select_columns(&self, indices: &[usize]) -> Self {
        Self::from_fn(self.rows, indices.len(), |r, c| self[(r, indices[c])])
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "matmul dimension mismatch");
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                let rhs_row = rhs.row(k);
                let out_row = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (o, &b) in out_row.iter_mut().zip(rhs_row) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// `self^H · rhs` without materialising the adjoint.
    pub fn adjoint_matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.rows, rhs.rows, "adjoint_matmul dimension mismatch");
        let mut out = Self::zeros(self.cols, rhs.cols);
        for k in 0..self.rows {
            let lhs_row = self.row(k);
            let rhs_row = rhs.row(k);
            for (i, a) in lhs_row.iter().enumerate() {
                let a = a.conj();
                let out_row = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (o, &b) in out_row.iter_mut().zip(rhs_row) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// `self · self^H`.
    pub fn gram_outer(&self) -> Self {
        let mut out = Self::zeros(self.rows, self.rows);
        for i in 0..self.rows {
            for j in i..self.rows {
                let v = dot(self.row(j), self.row(i));
                out[(i, j)] = v;
                out[(j, i)] = v.conj();
            }
        }
        out
    }

    pub fn mul_vec(&self, x: &[C<T>]) -> Vec<C<T>> {
        assert_eq!(self.cols, x.len(), "mul_vec dimension mismatch");
        (0..self.rows)
            .map(|r| self.row(r).iter().zip(x).map(|(&a, &b)| a * b).sum())
            .collect()
    }

    /// `self^H · x`.
    pub fn adjoint_mul_vec(&self, x: &[C<T>]) -> Vec<C<T>> {
        assert_eq!(self.rows, x.len(), "adjoint_mul_vec dimension mismatch");
        let mut out = vec![C::zero(); self.cols];
        for (r, &xr) in x.iter().enumerate() {
            for (o, &a) in out.iter_mut().zip(self.row(r)) {
                *o += a.conj() * xr;
            }
        }
        out
    }

    pub fn scale(&self, s: C<T>) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| v * s).collect(),
        }
    }

    /// Multiplies column `c` by `factors[c]`.
    pub fn scale_columns(&self, factors: &[T]) -> Self {
        assert_eq!(self.cols, factors.len());
        Self::from_fn(self.rows, self.cols, |r, c| self[(r, c)] * factors[c])
    }

    pub fn add(&self, rhs: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| a + b).collect(),
        }
    }

    pub fn add_scaled_identity(&mut self, s: T) {
        assert_eq!(self.rows, self.cols);
        for i in 0..self.rows {
            self[(i, i)] += s;
        }
    }

    pub fn trace(&self) -> C<T> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|v| v.norm_sqr()).sum::<T>().sqrt()
    }

    /// `(self + self^H) / 2`.
    pub fn hermitian_part(&self) -> Self {
        assert_eq!(self.rows, self.cols);
        let half = T::lit(0.5);
        Self::from_fn(self.rows, self.cols, |r, c| {
            (self[(r, c)] + self[(c, r)].conj()) * half
        })
    }

    /// `x^H · self · x`, real part (exact for Hermitian `self`).
    pub fn quadratic_form(&self, x: &[C<T>]) -> T {
        dot(x, &self.mul_vec(x)).re
    }

    pub fn max_abs_diff(&self, rhs: &Self) -> T {
        self.data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| (a - b).norm())
            .fold(T::zero(), T::max)
    }

    /// Converts the scalar type component-wise.
    pub fn cast<U: Real>(&self) -> CMat<U> {
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| cast_c(v)).collect(),
        }
    }
}

impl<T: Real> Index<(usize, usize)> for CMat<T> {
    type Output = C<T>;

    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &C<T> {
        debug_assert!(r < self.rows && c < self.cols);
        &self.data[r * self.cols + c]
    }
}

impl<T: Real> IndexMut<(usize, usize)> for CMat<T> {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C<T> {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.data[r * self.cols + c]
    }
}

/// Hermitian inner product `x^H y`.
#[inline]
pub fn dot<T: Real>(x: &[C<T>], y: &[C<T>]) -> C<T> {
    debug_assert_eq!(x.len(), y.len());
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

/// Real inner product `Re(x^H y)` of the underlying real vectors.
#[inline]
pub fn real_dot<T: Real>(x: &[C<T>], y: &[C<T>]) -> T {
    x.iter().zip(y).map(|(a, b)| a.re * b.re + a.im * b.im).sum()
}

#[inline]
pub fn norm_sqr<T: Real>(x: &[C<T>]) -> T {
    x.iter().map(|v| v.norm_sqr()).sum()
}

#[inline]
pub fn norm2<T: Real>(x: &[C<T>]) -> T {
    norm_sqr(x).sqrt()
}

#[inline]
pub fn norm1<T: Real>(x: &[C<T>]) -> T {
    x.iter().map(|&v| modulus(v)).sum()
}

#[inline]
pub fn norm_inf<T: Real>(x: &[C<T>]) -> T {
    x.iter().map(|&v| modulus(v)).fold(T::zero(), T::max)
}

/// `y += alpha · x`.
#[inline]
pub fn axpy<T: Real>(alpha: C<T>, x: &[C<T>], y: &mut [C<T>]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn scale_vec<T: Real>(alpha: C<T>, x: &[C<T>]) -> Vec<C<T>> {
    x.iter().map(|&v| v * alpha).collect()
}

pub fn sub_vec<T: Real>(x: &[C<T>], y: &[C<T>]) -> Vec<C<T>> {
    x.iter().zip(y).map(|(&a, &b)| a - b).collect()
}

pub fn add_vec<T: Real>(x: &[C<T>], y: &[C<T>]) -> Vec<C<T>> {
    x.iter().zip(y).map(|(&a, &b)| a + b).collect()
}

#[inline]
pub fn cast_c<T: Real, U: Real>(v: C<T>) -> C<U> {
    C::new(U::lit(v.re.to_f64_lossy()), U::lit(v.im.to_f64_lossy()))
}

pub fn cast_vec<T: Real, U: Real>(x: &[C<T>]) -> Vec<C<U>> {
    x.iter().map(|&v| cast_c(v)).collect()
}

/// Cholesky factor `L` (lower triangular) of a Hermitian positive definite
/// matrix, `A = L L^H`.
#[derive(Debug, Clone)]
pub struct Cholesky<T: Real> {
    lower: CMat<T>,
}

impl<T: Real> Cholesky<T> {
    /// Returns `None` when a pivot is not strictly positive.
    pub fn new(a: &CMat<T>) -> Option<Self> {
        let n = a.rows();
        assert_eq!(n, a.cols(), "cholesky needs a square matrix");
        let mut l = CMat::zeros(n, n);
        for j in 0..n {
            let mut d = a[(j, j)].re;
            for k in 0..j {
                d -= l[(j, k)].norm_sqr();
            }
            if !(d > T::zero()) || !d.is_finite() {
                return None;
            }
            let djj = d.sqrt();
            l[(j, j)] = C::new(djj, T::zero());
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)].conj();
                }
                l[(i, j)] = s / djj;
            }
        }
        Some(Self { lower: l })
    }

    pub fn lower(&self) -> &CMat<T> {
        &self.lower
    }

    pub fn solve(&self, b: &[C<T>]) -> Vec<C<T>> {
        let n = self.lower.rows();
        assert_eq!(b.len(), n);
        let l = &self.lower;
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= l[(i, k)] * y[k];
            }
            y[i] = s / l[(i, i)].re;
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= l[(k, i)].conj() * y[k];
            }
            y[i] = s / l[(i, i)].re;
        }
        y
    }

    /// Solves for every column of `b`.
    pub fn solve_matrix(&self, b: &CMat<T>) -> CMat<T> {
        let cols: Vec<Vec<C<T>>> = (0..b.cols()).map(|c| self.solve(&b.column(c))).collect();
        CMat::from_columns(&cols)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::cplx;

    #[test]
    fn cholesky_solves_hermitian_system() {
        let a: CMat<f64> = CMat::from_fn(3, 3, |r, c| match (r, c) {
            (0, 0) => cplx(4.0, 0.0),
            (1, 1) => cplx(3.0, 0.0),
            (2, 2) => cplx(2.0, 0.0),
            (0, 1) => cplx(1.0, 1.0),
            (1, 0) => cplx(1.0, -1.0),
            (1, 2) => cplx(0.0, 0.5),
            (2, 1) => cplx(0.0, -0.5),
            _ => cplx(0.0, 0.0),
        });
        let chol = Cholesky::new(&a).unwrap();
        let b = vec![cplx(1.0, 0.0), cplx(0.0, 2.0), cplx(-1.0, 1.0)];
        let x = chol.solve(&b);
        let ax = a.mul_vec(&x);
        for (u, v) in ax.iter().zip(&b) {
            assert!((u - v).norm() < 1e-12);
        }
        let llh = chol.lower().matmul(&chol.lower().adjoint());
        assert!(llh.max_abs_diff(&a) < 1e-12);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a: CMat<f64> = CMat::diagonal(&[cplx(1.0, 0.0), cplx(-1.0, 0.0)]);
        assert!(Cholesky::new(&a).is_none());
        let z: CMat<f64> = CMat::zeros(2, 2);
        assert!(Cholesky::new(&z).is_none());
    }

    #[test]
    fn adjoint_products_agree() {
        let a: CMat<f64> = CMat::from_fn(3, 2, |r, c| cplx(r as f64 + 1.0, c as f64 - 0.5));
        let b: CMat<f64> = CMat::from_fn(3, 4, |r, c| cplx(c as f64, r as f64 * 0.3));
        assert!(a.adjoint_matmul(&b).max_abs_diff(&a.adjoint().matmul(&b)) < 1e-14);
        assert!(a.gram_outer().max_abs_diff(&a.matmul(&a.adjoint())) < 1e-14);
        let x = vec![cplx(1.0, 2.0), cplx(-1.0, 0.0), cplx(0.5, 0.5)];
        let lhs = a.adjoint_mul_vec(&x);
        let rhs = a.adjoint().mul_vec(&x);
        for (u, v) in lhs.iter().zip(&rhs) {
            assert!((u - v).norm() < 1e-14);
        }
    }
}
