//! Cyclic Jacobi eigensolver for complex Hermitian matrices.
//!
//! Each rotation first removes the phase of the pivot `a_pq` with a diagonal
//! unitary and then applies a real Jacobi rotation, so the working matrix
//! stays exactly Hermitian. Diagonal inputs short-circuit without rotations.

use num_complex::Complex;

use super::dense::DenseHermitian;
use crate::error::{Error, Result};
use crate::scalar::Real;

const MAX_SWEEPS: usize = 64;

/// Spectral decomposition `H = V diag(values) V†` with ascending eigenvalues.
#[derive(Clone, Debug)]
pub struct HermitianEigen<T> {
    n: usize,
    values: Vec<T>,
    /// Row-major; column `j` is the eigenvector for `values[j]`.
    vectors: Vec<Complex<T>>,
    /// For diagonal inputs, `order[col]` is the row holding eigenvalue `col`.
    diagonal_order: Option<Vec<usize>>,
}

impl<T: Real> HermitianEigen<T> {
    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn vector_entry(&self, row: usize, col: usize) -> Complex<T> {
        self.vectors[row * self.n + col]
    }

    pub fn min(&self) -> T {
        self.values.first().copied().unwrap_or_else(T::zero)
    }

    pub fn max(&self) -> T {
        self.values.last().copied().unwrap_or_else(T::zero)
    }

    /// `V diag(weights) V†`.
    pub fn compose(&self, weights: &[T]) -> DenseHermitian<T> {
        let n = self.n;
        debug_assert_eq!(weights.len(), n);
        let zero = Complex::new(T::zero(), T::zero());
        if let Some(order) = &self.diagonal_order {
            let mut data = vec![zero; n * n];
            for (&row, &w) in order.iter().zip(weights) {
                data[row * n + row] = Complex::new(w, T::zero());
            }
            return DenseHermitian::from_hermitian_unchecked(n, data);
        }
        let mut data = vec![zero; n * n];
        for k in 0..n {
            for l in k..n {
                let mut acc = zero;
                for (j, &w) in weights.iter().enumerate() {
                    if w == T::zero() {
                        continue;
                    }
                    acc = acc + self.vectors[k * n + j] * self.vectors[l * n + j].conj() * w;
                }
                if k == l {
                    acc.im = T::zero();
                    data[k * n + k] = acc;
                } else {
                    data[k * n + l] = acc;
                    data[l * n + k] = acc.conj();
                }
            }
        }
        DenseHermitian::from_hermitian_unchecked(n, data)
    }

    /// For a diagonal decomposition, `weights` (indexed like `values`) placed on their rows.
    pub fn diagonal_weights(&self, weights: &[T]) -> Option<Vec<T>> {
        let order = self.diagonal_order.as_ref()?;
        let mut out = vec![T::zero(); self.n];
        for (&row, &w) in order.iter().zip(weights) {
            out[row] = w;
        }
        Some(out)
    }

    /// `V diag(f(values)) V†`.
    pub fn map(&self, f: impl Fn(T) -> T) -> DenseHermitian<T> {
        let w: Vec<T> = self.values.iter().map(|&x| f(x)).collect();
        self.compose(&w)
    }
}

/// Eigendecomposition of a Hermitian matrix.
pub fn eigh<T: Real>(h: &DenseHermitian<T>) -> Result<HermitianEigen<T>> {
    let n = h.dim();
    let zero = Complex::new(T::zero(), T::zero());
    let one = Complex::new(T::one(), T::zero());

    if h.is_diagonal() {
        let diag = h.diagonal_real();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            diag[a]
                .partial_cmp(&diag[b])
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let mut vectors = vec![zero; n * n];
        for (col, &row) in order.iter().enumerate() {
            vectors[row * n + col] = one;
        }
        let values = order.iter().map(|&i| diag[i]).collect();
        return Ok(HermitianEigen {
            n,
            values,
            vectors,
            diagonal_order: Some(order),
        });
    }

    let mut a = h.as_slice().to_vec();
    let mut v = vec![zero; n * n];
    for k in 0..n {
        v[k * n + k] = one;
    }
    let fro = h.frobenius_norm();
    let threshold = T::epsilon() * fro;

    let mut converged = false;
    for _sweep in 0..MAX_SWEEPS {
        let mut off = T::zero();
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[p * n + q].norm_sqr();
            }
        }
        if (off + off).sqrt() <= threshold {
            converged = true;
            break;
        }
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                rotate(&mut a, &mut v, n, p, q);
            }
        }
    }
    if !converged {
        return Err(Error::NoConvergence { sweeps: MAX_SWEEPS });
    }

    let diag: Vec<T> = (0..n).map(|k| a[k * n + k].re).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| {
        diag[x]
            .partial_cmp(&diag[y])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values = order.iter().map(|&i| diag[i]).collect();
    let mut vectors = vec![zero; n * n];
    for row in 0..n {
        for (col, &src) in order.iter().enumerate() {
            vectors[row * n + col] = v[row * n + src];
        }
    }
    Ok(HermitianEigen {
        n,
        values,
        vectors,
        diagonal_order: None,
    })
}

fn rotate<T: Real>(a: &mut [Complex<T>], v: &mut [Complex<T>], n: usize, p: usize, q: usize) {
    let g = a[p * n + q];
    let gabs = g.norm();
    if gabs == T::zero() {
        return;
    }
    let app = a[p * n + p].re;
    let aqq = a[q * n + q].re;
    let theta = (aqq - app) / (gabs + gabs);
    let t = if theta.abs() > T::lit(1e150) {
        T::one() / (theta + theta)
    } else {
        let s = if theta >= T::zero() {
            T::one()
        } else {
            -T::one()
        };
        s / (theta.abs() + (theta * theta + T::one()).sqrt())
    };
    let c = T::one() / (t * t + T::one()).sqrt();
    let s = t * c;
    let phase_conj = (g / gabs).conj();

    let g_pp = Complex::new(c, T::zero());
    let g_pq = Complex::new(s, T::zero());
    let g_qp = phase_conj * (-s);
    let g_qq = phase_conj * c;

    // A <- A G
    for k in 0..n {
        let akp = a[k * n + p];
        let akq = a[k * n + q];
        a[k * n + p] = akp * g_pp + akq * g_qp;
        a[k * n + q] = akp * g_pq + akq * g_qq;
    }
    // A <- G^H A
    for k in 0..n {
        let apk = a[p * n + k];
        let aqk = a[q * n + k];
        a[p * n + k] = g_pp.conj() * apk + g_qp.conj() * aqk;
        a[q * n + k] = g_pq.conj() * apk + g_qq.conj() * aqk;
    }
    let zero = Complex::new(T::zero(), T::zero());
    a[p * n + q] = zero;
    a[q * n + p] = zero;
    a[p * n + p].im = T::zero();
    a[q * n + q].im = T::zero();
    // V <- V G
    for k in 0..n {
        let vkp = v[k * n + p];
        let vkq = v[k * n + q];
        v[k * n + p] = vkp * g_pp + vkq * g_qp;
        v[k * n + q] = vkp * g_pq + vkq * g_qq;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hermitian(n: usize, seed: u64) -> DenseHermitian<f64> {
        let mut state = seed
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        let mut next = || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        let data = (0..n * n).map(|_| Complex::new(next(), next())).collect();
        DenseHermitian::from_row_major(n, data).unwrap()
    }

    #[test]
    fn reconstructs_random_hermitian() {
        for seed in 0..20 {
            let h = hermitian(7, seed);
            let eig = eigh(&h).unwrap();
            let back = eig.map(|x| x);
            assert!(back.max_abs_diff(&h) < 1e-12, "seed {seed}");
            assert!(eig.values().windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn eigenvectors_are_orthonormal() {
        let h = hermitian(6, 3);
        let eig = eigh(&h).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                let dot: Complex<f64> = (0..6)
                    .map(|k| eig.vector_entry(k, i).conj() * eig.vector_entry(k, j))
                    .sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((dot - Complex::new(expect, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn diagonal_shortcut_sorts() {
        let h = DenseHermitian::from_real_diagonal(&[3.0, -2.0, 0.0]);
        let eig = eigh(&h).unwrap();
        assert_eq!(eig.values(), &[-2.0, 0.0, 3.0]);
        let back = eig.map(|x| x * 2.0);
        assert_eq!(back.diagonal_real(), vec![6.0, -4.0, 0.0]);
    }

    #[test]
    fn works_in_single_precision() {
        let h = DenseHermitian::<f32>::from_real(2, &[2.0, 1.0, 1.0, 2.0]).unwrap();
        let eig = eigh(&h).unwrap();
        assert!((eig.values()[0] - 1.0).abs() < 1e-5);
        assert!((eig.values()[1] - 3.0).abs() < 1e-5);
    }

    #[test]
    fn empty_and_scalar() {
        let eig = eigh(&DenseHermitian::<f64>::zeros(0)).unwrap();
        assert!(eig.values().is_empty());
        let eig = eigh(&DenseHermitian::from_real(1, &[4.0]).unwrap()).unwrap();
        assert_eq!(eig.values(), &[4.0]);
    }
}
