//! Small dense complex linear algebra: the matrix type, Hermitian
//! eigendecomposition, Kronecker products, PSD square roots and condition
//! numbers.
//!
//! Every matrix in the simulator is at most a few antennas wide, so storage is
//! a flat row-major `Vec` and the eigen-solver is cyclic Jacobi, which is
//! accurate to working precision on tiny Hermitian problems and needs no
//! external LAPACK.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Range, Sub};

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Sweep cap for the Jacobi eigen-solver.
pub const MAX_JACOBI_SWEEPS: usize = 64;

/// Eigenvalues at or below this fraction of the largest one make the
/// condition number infinite.
pub const CONDITION_FLOOR: f64 = 1e-14;

/// Dense complex matrix stored row-major.
#[derive(Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> Matrix<T> {
    /// Builds a matrix from row-major entries, rejecting shape mismatches and
    /// non-finite values.
    pub fn try_new(rows: usize, cols: usize, data: Vec<Complex<T>>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Dimension(format!("empty {rows}x{cols} matrix")));
        }
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { rows, cols, data })
    }

    /// Real-valued matrix from row-major entries.
    pub fn from_real(rows: usize, cols: usize, data: &[T]) -> Result<Self> {
        Self::try_new(rows, cols, data.iter().map(|&x| Complex::new(x, T::zero())).collect())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { Complex::one() } else { Complex::zero() })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex<T>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_real_diagonal(diag: &[T]) -> Self {
        let n = diag.len();
        Self::from_fn(n, n, |i, j| {
            if i == j {
                Complex::new(diag[i], T::zero())
            } else {
                Complex::zero()
            }
        })
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
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn scale(&self, s: T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    /// Squared Frobenius norm, i.e. the transmit power of a precoder.
    pub fn frobenius_norm_sq(&self) -> T {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn frobenius_norm(&self) -> T {
        self.frobenius_norm_sq().sqrt()
    }

    pub fn trace(&self) -> Complex<T> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Copy of the column block `range`.
    pub fn columns(&self, range: Range<usize>) -> Self {
        assert!(range.end <= self.cols, "column range out of bounds");
        let width = range.len();
        Self::from_fn(self.rows, width, |i, j| self[(i, range.start + j)])
    }

    /// Column-stacked vectorisation, returned as an `rows*cols x 1` matrix.
    pub fn vec(&self) -> Self {
        Self::from_fn(self.rows * self.cols, 1, |k, _| self[(k % self.rows, k / self.rows)])
    }

    /// `||A - A^H||_F / ||A||_F` (zero for the zero matrix).
    pub fn hermitian_error(&self) -> T {
        let norm = self.frobenius_norm();
        if norm == T::zero() {
            return T::zero();
        }
        let mut acc = T::zero();
        for i in 0..self.rows {
            for j in 0..self.cols {
                acc = acc + (self[(i, j)] - self[(j, i)].conj()).norm_sqr();
            }
        }
        acc.sqrt() / norm
    }

    /// Checks squareness and Hermitian symmetry within [`Real::HERMITIAN_TOL`].
    pub fn ensure_hermitian(&self) -> Result<()> {
        if !self.is_square() {
            return Err(Error::NotSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        let err = self.hermitian_error();
        if err > T::HERMITIAN_TOL {
            return Err(Error::NotHermitian(err.to_f64_lossy()));
        }
        Ok(())
    }

    pub fn try_mul(&self, rhs: &Self) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        Ok(self * rhs)
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = Complex<T>;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex<T> {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex<T> {
        &mut self.data[i * self.cols + j]
    }
}

impl<T: Real> Mul for &Matrix<T> {
    type Output = Matrix<T>;

    fn mul(self, rhs: &Matrix<T>) -> Matrix<T> {
        assert_eq!(self.cols, rhs.rows, "matrix product dimension mismatch");
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    out.data[i * rhs.cols + j] = out.data[i * rhs.cols + j] + a * rhs[(k, j)];
                }
            }
        }
        out
    }
}

impl<T: Real> Add for &Matrix<T> {
    type Output = Matrix<T>;

    fn add(self, rhs: &Matrix<T>) -> Matrix<T> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl<T: Real> Sub for &Matrix<T> {
    type Output = Matrix<T>;

    fn sub(self, rhs: &Matrix<T>) -> Matrix<T> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl<T: fmt::Debug> fmt::Debug for Matrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = &self[(i, j)];
                write!(f, "{:+.6?}{:+.6?}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Kronecker product `a ⊗ b`, of shape `(m·p) x (n·q)`.
pub fn kron<T: Real>(a: &Matrix<T>, b: &Matrix<T>) -> Matrix<T> {
    let (p, q) = (b.rows, b.cols);
    Matrix::from_fn(a.rows * p, a.cols * q, |i, j| a[(i / p, j / q)] * b[(i % p, j % q)])
}

/// Eigendecomposition `A = U diag(values) U^H` of a Hermitian matrix.
///
/// `values` are sorted in descending order, so the largest and smallest
/// eigenvalues are `values[0]` and `values[n-1]`; column `k` of `vectors` is
/// the eigenvector of `values[k]`.
#[derive(Clone, Debug)]
pub struct HermitianEig<T> {
    pub vectors: Matrix<T>,
    pub values: Vec<T>,
}

impl<T: Real> HermitianEig<T> {
    pub fn reconstruct(&self) -> Matrix<T> {
        let d = Matrix::from_real_diagonal(&self.values);
        &(&self.vectors * &d) * &self.vectors.adjoint()
    }

    pub fn max(&self) -> T {
        self.values[0]
    }

    pub fn min(&self) -> T {
        self.values[self.values.len() - 1]
    }
}

/// Cyclic complex Jacobi eigen-solver for Hermitian matrices.
pub fn hermitian_eig<T: Real>(a: &Matrix<T>) -> Result<HermitianEig<T>> {
    a.ensure_hermitian()?;
    let n = a.rows;
    // Symmetrise so rounding asymmetry in the input cannot bias the rotations.
    let half = T::lit(0.5);
    let mut m = Matrix::from_fn(n, n, |i, j| (a[(i, j)] + a[(j, i)].conj()) * half);
    let mut v = Matrix::identity(n);

    let scale = m.frobenius_norm();
    let target = T::EIG_TOL * scale;
    let mut converged = n == 1 || scale == T::zero();
    let mut sweeps = 0;
    while !converged {
        if sweeps == MAX_JACOBI_SWEEPS {
            return Err(Error::NoConvergence(MAX_JACOBI_SWEEPS));
        }
        sweeps += 1;
        for p in 0..n - 1 {
            for q in p + 1..n {
                rotate(&mut m, &mut v, p, q);
            }
        }
        converged = off_diagonal_norm(&m) <= target;
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(j, j)].re.partial_cmp(&m[(i, i)].re).unwrap_or(std::cmp::Ordering::Equal));
    let values = order.iter().map(|&k| m[(k, k)].re).collect();
    let vectors = Matrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    Ok(HermitianEig { vectors, values })
}

fn off_diagonal_norm<T: Real>(m: &Matrix<T>) -> T {
    let mut acc = T::zero();
    for i in 0..m.rows {
        for j in 0..m.cols {
            if i != j {
                acc = acc + m[(i, j)].norm_sqr();
            }
        }
    }
    acc.sqrt()
}

/// Applies the unitary plane rotation `G` that annihilates `m[p][q]`:
/// `m <- G^H m G`, `v <- v G`, with
/// `G[p][p] = G[q][q] = c`, `G[p][q] = s·e`, `G[q][p] = -s·conj(e)`, where `e` is
/// the phase of `m[p][q]`.
fn rotate<T: Real>(m: &mut Matrix<T>, v: &mut Matrix<T>, p: usize, q: usize) {
    let apq = m[(p, q)];
    let r = apq.norm();
    if r == T::zero() {
        return;
    }
    let e = apq / r;
    let app = m[(p, p)].re;
    let aqq = m[(q, q)].re;
    let tau = (aqq - app) / (T::lit(2.0) * r);
    let t = if tau >= T::zero() {
        T::one() / (tau + (T::one() + tau * tau).sqrt())
    } else {
        -T::one() / (-tau + (T::one() + tau * tau).sqrt())
    };
    let c = T::one() / (T::one() + t * t).sqrt();
    let s = t * c;
    let se = e * s;
    let se_conj = e.conj() * s;
    let n = m.rows;

    // Columns: m <- m G.
    for k in 0..n {
        let akp = m[(k, p)];
        let akq = m[(k, q)];
        m[(k, p)] = akp * c - akq * se_conj;
        m[(k, q)] = akp * se + akq * c;
    }
    // Rows: m <- G^H m.
    for k in 0..n {
        let apk = m[(p, k)];
        let aqk = m[(q, k)];
        m[(p, k)] = apk * c - aqk * se;
        m[(q, k)] = apk * se_conj + aqk * c;
    }
    m[(p, q)] = Complex::zero();
    m[(q, p)] = Complex::zero();
    m[(p, p)] = Complex::new(m[(p, p)].re, T::zero());
    m[(q, q)] = Complex::new(m[(q, q)].re, T::zero());

    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * c - vkq * se_conj;
        v[(k, q)] = vkp * se + vkq * c;
    }
}

/// `δ_max / δ_min` of a Hermitian PSD matrix; `+inf` once the smallest
/// eigenvalue drops to [`CONDITION_FLOOR`] of the largest.
pub fn condition_number<T: Real>(a: &Matrix<T>) -> Result<T> {
    let eig = hermitian_eig(a)?;
    Ok(condition_from_spectrum(&eig.values))
}

pub(crate) fn condition_from_spectrum<T: Real>(values: &[T]) -> T {
    let max = values.iter().copied().fold(T::neg_infinity(), T::max);
    let min = values.iter().copied().fold(T::infinity(), T::min).max(T::zero());
    if max <= T::zero() || min <= T::lit(CONDITION_FLOOR) * max {
        T::infinity()
    } else {
        max / min
    }
}

/// Principal square root `U diag(sqrt(σ)) U^H` of a Hermitian PSD matrix.
/// Slightly negative eigenvalues from rounding are clamped to zero.
pub fn psd_sqrt<T: Real>(a: &Matrix<T>) -> Result<Matrix<T>> {
    let eig = hermitian_eig(a)?;
    let roots: Vec<T> = eig.values.iter().map(|&x| x.max(T::zero()).sqrt()).collect();
    let d = Matrix::from_real_diagonal(&roots);
    Ok(&(&eig.vectors * &d) * &eig.vectors.adjoint())
}
