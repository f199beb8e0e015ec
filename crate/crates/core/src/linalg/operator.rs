use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use super::Ket;
use crate::error::{Error, Result};
use crate::scalar::{creal, Cplx, Real};

/// Dense complex matrix, row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Operator<T> {
    rows: usize,
    cols: usize,
    data: Vec<Cplx<T>>,
}

impl<T: Real> Operator<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Operator {
            rows,
            cols,
            data: vec![Cplx::zero(); rows * cols],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m.data[i * dim + i] = Cplx::one();
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<Cplx<T>>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                context: "operator entries",
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(Operator { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Cplx<T>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Operator { rows, cols, data }
    }

    pub fn from_diagonal(diag: &[Cplx<T>]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, d) in diag.iter().enumerate() {
            m.data[i * n + i] = *d;
        }
        m
    }

    pub fn from_real_diagonal(diag: &[T]) -> Self {
        let d: Vec<_> = diag.iter().map(|&x| creal(x)).collect();
        Self::from_diagonal(&d)
    }

    /// |a⟩⟨b|
    pub fn outer(a: &Ket<T>, b: &Ket<T>) -> Self {
        let (n, m) = (a.dim(), b.dim());
        let mut data = Vec::with_capacity(n * m);
        for x in a.amplitudes() {
            for y in b.amplitudes() {
                data.push(*x * y.conj());
            }
        }
        Operator {
            rows: n,
            cols: m,
            data,
        }
    }

    /// Projector onto the span of orthonormal vectors.
    pub fn projector(vectors: &[Ket<T>], dim: usize) -> Self {
        let mut p = Self::zeros(dim, dim);
        for v in vectors {
            p.add_outer(Cplx::one(), v, v);
        }
        p
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

    /// Side length of a square operator.
    pub fn dim(&self) -> usize {
        debug_assert!(self.is_square());
        self.rows
    }

    pub fn data(&self) -> &[Cplx<T>] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Cplx<T>] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[Cplx<T>] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Ket<T> {
        Ket::from_amplitudes((0..self.rows).map(|i| self[(i, j)]).collect())
    }

    pub fn diagonal(&self) -> Vec<Cplx<T>> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j].conj();
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        out
    }

    pub fn conj(&self) -> Self {
        self.map(|z| z.conj())
    }

    pub fn map(&self, f: impl Fn(Cplx<T>) -> Cplx<T>) -> Self {
        Operator {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| f(z)).collect(),
        }
    }

    pub fn scaled(&self, factor: Cplx<T>) -> Self {
        self.map(|z| z * factor)
    }

    pub fn scaled_real(&self, factor: T) -> Self {
        self.map(|z| z * factor)
    }

    pub fn scale_mut(&mut self, factor: Cplx<T>) {
        for z in &mut self.data {
            *z = *z * factor;
        }
    }

    /// self += factor * other
    pub fn axpy(&mut self, factor: Cplx<T>, other: &Operator<T>) {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a = *a + factor * b;
        }
    }

    /// self += factor |a⟩⟨b|
    pub fn add_outer(&mut self, factor: Cplx<T>, a: &Ket<T>, b: &Ket<T>) {
        let cols = self.cols;
        for (i, x) in a.amplitudes().iter().enumerate() {
            let fx = factor * x;
            if fx.is_zero() {
                continue;
            }
            let row = &mut self.data[i * cols..(i + 1) * cols];
            for (r, y) in row.iter_mut().zip(b.amplitudes()) {
                *r = *r + fx * y.conj();
            }
        }
    }

    /// Matrix product. Panics on shape mismatch.
    pub fn matmul(&self, rhs: &Operator<T>) -> Operator<T> {
        assert_eq!(self.cols, rhs.rows, "matmul shape mismatch");
        let mut out = Self::zeros(self.rows, rhs.cols);
        let n = rhs.cols;
        for i in 0..self.rows {
            let out_row = &mut out.data[i * n..(i + 1) * n];
            for (k, a) in self.row(i).iter().enumerate() {
                if a.is_zero() {
                    continue;
                }
                let b_row = &rhs.data[k * n..(k + 1) * n];
                for (o, b) in out_row.iter_mut().zip(b_row) {
                    *o = *o + *a * b;
                }
            }
        }
        out
    }

    pub fn checked_matmul(&self, rhs: &Operator<T>) -> Result<Operator<T>> {
        if self.cols != rhs.rows {
            return Err(Error::DimensionMismatch {
                context: "matrix product",
                expected: self.cols,
                found: rhs.rows,
            });
        }
        Ok(self.matmul(rhs))
    }

    pub fn apply(&self, v: &Ket<T>) -> Ket<T> {
        assert_eq!(self.cols, v.dim(), "operator/ket dimension mismatch");
        let amps = (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v.amplitudes())
                    .fold(Cplx::zero(), |acc, (a, b)| acc + *a * b)
            })
            .collect();
        Ket::from_amplitudes(amps)
    }

    /// ⟨a|self|b⟩
    pub fn sandwich(&self, a: &Ket<T>, b: &Ket<T>) -> Cplx<T> {
        a.inner(&self.apply(b))
    }

    pub fn expectation(&self, v: &Ket<T>) -> Cplx<T> {
        self.sandwich(v, v)
    }

    pub fn trace(&self) -> Cplx<T> {
        self.diagonal().into_iter().fold(Cplx::zero(), |a, b| a + b)
    }

    /// Tr(self^dagger other).
    pub fn hs_inner(&self, other: &Operator<T>) -> Cplx<T> {
        self.data
            .iter()
            .zip(&other.data)
            .fold(Cplx::zero(), |acc, (a, b)| acc + a.conj() * b)
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
    }

    /// Maximum entry magnitude.
    pub fn max_abs(&self) -> T {
        self.data.iter().map(|z| z.norm()).fold(T::zero(), T::max)
    }

    pub fn max_abs_diff(&self, other: &Operator<T>) -> T {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(T::zero(), T::max)
    }

    pub fn hermiticity_error(&self) -> T {
        if !self.is_square() {
            return T::infinity();
        }
        let n = self.rows;
        let mut worst = T::zero();
        for i in 0..n {
            for j in i..n {
                let d = (self.data[i * n + j] - self.data[j * n + i].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: T) -> bool {
        self.hermiticity_error() < tol
    }

    /// (A + A^dagger) / 2
    pub fn hermitian_part(&self) -> Self {
        let n = self.rows;
        let half = T::lit(0.5);
        let mut out = self.clone();
        for i in 0..n {
            for j in i..n {
                let a = self.data[i * n + j];
                let b = self.data[j * n + i];
                let s = (a + b.conj()) * half;
                out.data[i * n + j] = s;
                out.data[j * n + i] = s.conj();
            }
        }
        out
    }

    pub fn hermitize_mut(&mut self) {
        *self = self.hermitian_part();
    }

    /// [self, other]
    pub fn commutator(&self, other: &Operator<T>) -> Self {
        self.matmul(other) - other.matmul(self)
    }

    /// {self, other}
    pub fn anticommutator(&self, other: &Operator<T>) -> Self {
        self.matmul(other) + other.matmul(self)
    }

    pub fn kron(&self, other: &Operator<T>) -> Self {
        let rows = self.rows * other.rows;
        let cols = self.cols * other.cols;
        let mut out = Self::zeros(rows, cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self.data[i * self.cols + j];
                if a.is_zero() {
                    continue;
                }
                for k in 0..other.rows {
                    for l in 0..other.cols {
                        out.data[(i * other.rows + k) * cols + j * other.cols + l] =
                            a * other.data[k * other.cols + l];
                    }
                }
            }
        }
        out
    }

    /// True when every off-diagonal entry is exactly zero.
    pub fn is_diagonal(&self) -> bool {
        let n = self.cols;
        self.data
            .iter()
            .enumerate()
            .all(|(idx, z)| idx / n == idx % n || z.is_zero())
    }

    pub fn cast<U: Real>(&self) -> Operator<U> {
        Operator {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .map(|a| Cplx::new(U::lit(a.re.as_f64()), U::lit(a.im.as_f64())))
                .collect(),
        }
    }
}

impl<T> Index<(usize, usize)> for Operator<T> {
    type Output = Cplx<T>;
    fn index(&self, (i, j): (usize, usize)) -> &Cplx<T> {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Operator<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Cplx<T> {
        &mut self.data[i * self.cols + j]
    }
}

impl<T: Real> Add for Operator<T> {
    type Output = Operator<T>;
    fn add(mut self, rhs: Operator<T>) -> Operator<T> {
        self.axpy(Cplx::one(), &rhs);
        self
    }
}

impl<T: Real> Add<&Operator<T>> for &Operator<T> {
    type Output = Operator<T>;
    fn add(self, rhs: &Operator<T>) -> Operator<T> {
        let mut out = self.clone();
        out.axpy(Cplx::one(), rhs);
        out
    }
}

impl<T: Real> Sub for Operator<T> {
    type Output = Operator<T>;
    fn sub(mut self, rhs: Operator<T>) -> Operator<T> {
        self.axpy(-Cplx::<T>::one(), &rhs);
        self
    }
}

impl<T: Real> Sub<&Operator<T>> for &Operator<T> {
    type Output = Operator<T>;
    fn sub(self, rhs: &Operator<T>) -> Operator<T> {
        let mut out = self.clone();
        out.axpy(-Cplx::<T>::one(), rhs);
        out
    }
}

impl<T: Real> Neg for Operator<T> {
    type Output = Operator<T>;
    fn neg(self) -> Operator<T> {
        self.map(|z| -z)
    }
}

impl<T: Real> Mul<&Operator<T>> for &Operator<T> {
    type Output = Operator<T>;
    fn mul(self, rhs: &Operator<T>) -> Operator<T> {
        self.matmul(rhs)
    }
}

/// Dense real matrix, row-major. Used for correlation matrices and their factors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> RealMatrix<T> {
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                context: "real matrix entries",
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(RealMatrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|row| row.len() != c) {
            return Err(Error::DimensionMismatch {
                context: "real matrix row length",
                expected: c,
                found: bad.len(),
            });
        }
        Self::from_row_major(r, c, rows.concat())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        RealMatrix {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = T::one();
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        out
    }

    pub fn matmul(&self, rhs: &RealMatrix<T>) -> RealMatrix<T> {
        assert_eq!(self.cols, rhs.rows, "matmul shape mismatch");
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                for j in 0..rhs.cols {
                    out.data[i * rhs.cols + j] =
                        out.data[i * rhs.cols + j] + a * rhs.data[k * rhs.cols + j];
                }
            }
        }
        out
    }

    /// D^T D
    pub fn gram(&self) -> RealMatrix<T> {
        self.transpose().matmul(self)
    }

    pub fn max_abs_diff(&self, other: &RealMatrix<T>) -> T {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (*a - *b).abs())
            .fold(T::zero(), T::max)
    }

    pub fn symmetry_error(&self) -> T {
        if self.rows != self.cols {
            return T::infinity();
        }
        self.max_abs_diff(&self.transpose())
    }

    pub fn to_operator(&self) -> Operator<T> {
        Operator {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| creal(x)).collect(),
        }
    }
}

impl<T> Index<(usize, usize)> for RealMatrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for RealMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}
