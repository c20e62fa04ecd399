use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Correction size above which symmetrization is logged.
const SYMMETRIZE_WARN: f64 = 1e-9;

/// Dense Hermitian matrix stored row-major.
///
/// Construction symmetrizes the input as `(A + A†)/2`, so every value of this
/// type is exactly Hermitian: `entries[k][l] == conj(entries[l][k])` and the
/// diagonal is real.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseHermitian<T> {
    n: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> DenseHermitian<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![Complex::new(T::zero(), T::zero()); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::scaled_identity(n, T::one())
    }

    pub fn scaled_identity(n: usize, c: T) -> Self {
        let mut out = Self::zeros(n);
        for k in 0..n {
            out.data[k * n + k] = Complex::new(c, T::zero());
        }
        out
    }

    pub fn from_real_diagonal(diag: &[T]) -> Self {
        let n = diag.len();
        let mut out = Self::zeros(n);
        for (k, &d) in diag.iter().enumerate() {
            out.data[k * n + k] = Complex::new(d, T::zero());
        }
        out
    }

    /// Builds a matrix from row-major complex entries, symmetrizing to `(A + A†)/2`.
    pub fn from_row_major(n: usize, data: Vec<Complex<T>>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: data.len(),
            });
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidMatrix("non-finite entry".into()));
        }
        let mut out = Self { n, data };
        let defect = out.symmetrize();
        if defect.to_f64_lossy() > SYMMETRIZE_WARN {
            log::warn!("symmetrized input deviating from Hermitian by {defect}");
        }
        Ok(out)
    }

    /// Real symmetric convenience constructor from row-major real entries.
    pub fn from_real(n: usize, data: &[T]) -> Result<Self> {
        Self::from_row_major(
            n,
            data.iter().map(|&x| Complex::new(x, T::zero())).collect(),
        )
    }

    /// Wraps entries that are already exactly Hermitian.
    pub(crate) fn from_hermitian_unchecked(n: usize, data: Vec<Complex<T>>) -> Self {
        debug_assert_eq!(data.len(), n * n);
        Self { n, data }
    }

    /// Replaces the matrix by `(A + A†)/2` and returns the largest entrywise correction.
    fn symmetrize(&mut self) -> T {
        let n = self.n;
        let half = T::lit(0.5);
        let mut defect = T::zero();
        for k in 0..n {
            let d = self.data[k * n + k];
            defect = defect.max(d.im.abs());
            self.data[k * n + k] = Complex::new(d.re, T::zero());
            for l in (k + 1)..n {
                let a = self.data[k * n + l];
                let b = self.data[l * n + k];
                let avg = (a + b.conj()) * half;
                defect = defect.max((a - avg).norm());
                self.data[k * n + l] = avg;
                self.data[l * n + k] = avg.conj();
            }
        }
        defect
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, k: usize, l: usize) -> Complex<T> {
        self.data[k * self.n + l]
    }

    pub fn as_slice(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn diagonal_real(&self) -> Vec<T> {
        (0..self.n).map(|k| self.data[k * self.n + k].re).collect()
    }

    pub fn is_diagonal(&self) -> bool {
        let n = self.n;
        (0..n).all(|k| {
            ((k + 1)..n).all(|l| {
                let z = self.data[k * n + l];
                z.re == T::zero() && z.im == T::zero()
            })
        })
    }

    pub fn trace(&self) -> T {
        (0..self.n).map(|k| self.data[k * self.n + k].re).sum()
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (*a - *b).norm())
            .fold(T::zero(), T::max)
    }

    pub fn scaled(&self, c: T) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|z| *z * c).collect(),
        }
    }

    /// `self += c * other`.
    pub fn add_scaled(&mut self, other: &Self, c: T) -> Result<()> {
        self.check_dim(other.n)?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a = *a + *b * c;
        }
        Ok(())
    }

    /// `self += c * I`.
    pub fn add_identity(&mut self, c: T) {
        for k in 0..self.n {
            self.data[k * self.n + k].re += c;
        }
    }

    pub(crate) fn add_to_entry(&mut self, k: usize, l: usize, z: Complex<T>) {
        let n = self.n;
        self.data[k * n + l] = self.data[k * n + l] + z;
    }

    /// Matrix product. The result of multiplying Hermitian matrices is not
    /// Hermitian in general, so it is returned as raw row-major entries.
    pub fn matmul_raw(&self, other: &Self) -> Vec<Complex<T>> {
        let n = self.n;
        let mut out = vec![Complex::new(T::zero(), T::zero()); n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a.re == T::zero() && a.im == T::zero() {
                    continue;
                }
                for j in 0..n {
                    out[i * n + j] = out[i * n + j] + a * other.data[k * n + j];
                }
            }
        }
        out
    }

    pub(crate) fn check_dim(&self, n: usize) -> Result<()> {
        if self.n != n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: n,
            });
        }
        Ok(())
    }
}

impl<T: Real> Add for &DenseHermitian<T> {
    type Output = DenseHermitian<T>;

    fn add(self, rhs: Self) -> DenseHermitian<T> {
        assert_eq!(self.n, rhs.n, "dimension mismatch in matrix sum");
        let data = self
            .data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| *a + *b)
            .collect();
        DenseHermitian { n: self.n, data }
    }
}

impl<T: Real> Sub for &DenseHermitian<T> {
    type Output = DenseHermitian<T>;

    fn sub(self, rhs: Self) -> DenseHermitian<T> {
        assert_eq!(self.n, rhs.n, "dimension mismatch in matrix difference");
        let data = self
            .data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| *a - *b)
            .collect();
        DenseHermitian { n: self.n, data }
    }
}

impl<T: Real> Neg for &DenseHermitian<T> {
    type Output = DenseHermitian<T>;

    fn neg(self) -> DenseHermitian<T> {
        self.scaled(-T::one())
    }
}

impl<T: Real> Mul<T> for &DenseHermitian<T> {
    type Output = DenseHermitian<T>;

    fn mul(self, c: T) -> DenseHermitian<T> {
        self.scaled(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn construction_symmetrizes() {
        let data = vec![
            Complex::new(1.0, 0.3),
            Complex::new(2.0, 1.0),
            Complex::new(2.0, 0.0),
            Complex::new(-1.0, 0.0),
        ];
        let h = DenseHermitian::from_row_major(2, data).unwrap();
        assert_eq!(h.get(0, 0), Complex::new(1.0, 0.0));
        assert_eq!(h.get(0, 1), Complex::new(2.0, 0.5));
        assert_eq!(h.get(1, 0), Complex::new(2.0, -0.5));
    }

    #[test]
    fn rejects_wrong_length_and_nan() {
        assert!(DenseHermitian::<f64>::from_real(2, &[1.0, 2.0, 3.0]).is_err());
        assert!(DenseHermitian::from_real(1, &[f64::NAN]).is_err());
    }

    #[test]
    fn diagonal_detection() {
        assert!(DenseHermitian::<f64>::from_real_diagonal(&[1.0, 2.0]).is_diagonal());
        let h = DenseHermitian::from_real(2, &[1.0, 1e-300, 1e-300, 2.0]).unwrap();
        assert!(!h.is_diagonal());
    }
}
