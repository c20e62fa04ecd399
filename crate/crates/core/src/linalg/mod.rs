//! Dense and sparse Hermitian linear algebra.

mod dense;
mod eigen;
mod sparse;

pub use dense::DenseHermitian;
pub use eigen::{eigh, HermitianEigen};
pub use sparse::SparseHermitian;

use std::sync::OnceLock;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Largest dimension the dense routines accept unless a caller overrides it.
pub const DEFAULT_DENSE_LIMIT: usize = 1024;

/// A trace-one positive semidefinite matrix.
///
/// Diagonal states keep only their probabilities; the dense form is built on
/// first request.
#[derive(Clone, Debug)]
pub struct DensityMatrix<T> {
    n: usize,
    diagonal: Option<Vec<T>>,
    dense: OnceLock<DenseHermitian<T>>,
    trace: T,
    min_eigenvalue: T,
}

impl<T: Real> DensityMatrix<T> {
    /// Validates `matrix` against trace one and positivity.
    pub fn new(matrix: DenseHermitian<T>) -> Result<Self> {
        if matrix.is_diagonal() {
            return Self::from_probabilities(&matrix.diagonal_real());
        }
        let min_eigenvalue = min_eigenvalue(&matrix)?;
        let trace = matrix.trace();
        Self::check(matrix.dim(), None, Some(matrix), trace, min_eigenvalue)
    }

    fn check(
        n: usize,
        diagonal: Option<Vec<T>>,
        dense: Option<DenseHermitian<T>>,
        trace: T,
        min_eigenvalue: T,
    ) -> Result<Self> {
        let tol = T::tol(1e-10);
        if (trace - T::one()).abs() > tol {
            return Err(Error::InvalidMatrix(format!(
                "density matrix trace {trace} differs from 1"
            )));
        }
        if min_eigenvalue < -tol {
            return Err(Error::InvalidMatrix(format!(
                "density matrix has negative eigenvalue {min_eigenvalue}"
            )));
        }
        let cell = OnceLock::new();
        if let Some(d) = dense {
            let _ = cell.set(d);
        }
        Ok(Self {
            n,
            diagonal,
            dense: cell,
            trace,
            min_eigenvalue,
        })
    }

    /// `I / n`.
    pub fn maximally_mixed(n: usize) -> Self {
        let p = T::one() / T::lit(n as f64);
        Self {
            n,
            diagonal: Some(vec![p; n]),
            dense: OnceLock::new(),
            trace: T::one(),
            min_eigenvalue: p,
        }
    }

    /// Diagonal state with the given probabilities.
    pub fn from_probabilities(p: &[T]) -> Result<Self> {
        let trace: T = p.iter().copied().sum();
        let min = p.iter().copied().fold(T::infinity(), T::min);
        let min = if p.is_empty() { T::zero() } else { min };
        Self::check(p.len(), Some(p.to_vec()), None, trace, min)
    }

    /// `V diag(weights) V†` for probability weights over an eigenbasis.
    pub fn from_eigen_weights(eig: &HermitianEigen<T>, weights: &[T]) -> Result<Self> {
        if let Some(p) = eig.diagonal_weights(weights) {
            return Self::from_probabilities(&p);
        }
        let trace: T = weights.iter().copied().sum();
        let min = weights.iter().copied().fold(T::infinity(), T::min);
        Self::check(eig.dim(), None, Some(eig.compose(weights)), trace, min)
    }

    pub fn matrix(&self) -> &DenseHermitian<T> {
        self.dense.get_or_init(|| {
            DenseHermitian::from_real_diagonal(
                self.diagonal
                    .as_deref()
                    .expect("diagonal or dense form present"),
            )
        })
    }

    /// The probabilities of a diagonal state.
    pub fn diagonal(&self) -> Option<&[T]> {
        self.diagonal.as_deref()
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn trace(&self) -> T {
        self.trace
    }

    pub fn min_eigenvalue(&self) -> T {
        self.min_eigenvalue
    }
}

/// `e^H` via eigendecomposition, with the default dense limit.
pub fn hermitian_exp<T: Real>(h: &DenseHermitian<T>) -> Result<DenseHermitian<T>> {
    hermitian_exp_limited(h, DEFAULT_DENSE_LIMIT)
}

pub fn hermitian_exp_limited<T: Real>(
    h: &DenseHermitian<T>,
    limit: usize,
) -> Result<DenseHermitian<T>> {
    check_limit(h.dim(), limit)?;
    Ok(eigh(h)?.map(T::exp))
}

/// `e^H / tr(e^H)`, shifted by the largest eigenvalue before exponentiating.
pub fn gibbs_state<T: Real>(h: &DenseHermitian<T>) -> Result<DensityMatrix<T>> {
    gibbs_state_limited(h, DEFAULT_DENSE_LIMIT)
}

pub fn gibbs_state_limited<T: Real>(
    h: &DenseHermitian<T>,
    limit: usize,
) -> Result<DensityMatrix<T>> {
    check_limit(h.dim(), limit)?;
    let eig = eigh(h)?;
    DensityMatrix::from_eigen_weights(&eig, &softmax(eig.values()))
}

/// Normalized `exp(x_i - max x)`; empty input gives an empty vector.
pub fn softmax<T: Real>(x: &[T]) -> Vec<T> {
    let shift = x.iter().copied().fold(T::neg_infinity(), T::max);
    let mut w: Vec<T> = x.iter().map(|&v| (v - shift).exp()).collect();
    let z: T = w.iter().copied().sum();
    for v in &mut w {
        *v /= z;
    }
    w
}

fn check_limit(n: usize, limit: usize) -> Result<()> {
    if n > limit {
        return Err(Error::DenseLimit { n, limit });
    }
    Ok(())
}

pub fn min_eigenvalue<T: Real>(h: &DenseHermitian<T>) -> Result<T> {
    if h.is_diagonal() {
        return Ok(h.diagonal_real().into_iter().fold(T::infinity(), T::min));
    }
    Ok(eigh(h)?.min())
}

pub fn max_eigenvalue<T: Real>(h: &DenseHermitian<T>) -> Result<T> {
    if h.is_diagonal() {
        return Ok(h
            .diagonal_real()
            .into_iter()
            .fold(T::neg_infinity(), T::max));
    }
    Ok(eigh(h)?.max())
}

/// Largest absolute eigenvalue.
pub fn operator_norm<T: Real>(h: &DenseHermitian<T>) -> Result<T> {
    if h.dim() == 0 {
        return Ok(T::zero());
    }
    if h.is_diagonal() {
        return Ok(h
            .diagonal_real()
            .into_iter()
            .fold(T::zero(), |a, d| a.max(d.abs())));
    }
    let eig = eigh(h)?;
    Ok(eig.min().abs().max(eig.max().abs()))
}

/// Sum of absolute eigenvalues of `ρ − σ`.
pub fn trace_distance<T: Real>(rho: &DensityMatrix<T>, sigma: &DensityMatrix<T>) -> Result<T> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            got: sigma.dim(),
        });
    }
    if let (Some(p), Some(q)) = (rho.diagonal(), sigma.diagonal()) {
        return Ok(p.iter().zip(q).map(|(&a, &b)| (a - b).abs()).sum());
    }
    let diff = rho.matrix() - sigma.matrix();
    if diff.is_diagonal() {
        return Ok(diff.diagonal_real().into_iter().map(T::abs).sum());
    }
    Ok(eigh(&diff)?.values().iter().map(|v| v.abs()).sum())
}

/// A Hermitian operand of `tr(A ρ)`.
pub trait TraceOperand<T: Real> {
    fn operand_dim(&self) -> usize;

    /// `Σ_{kl} A_kl ρ_lk` before discarding the imaginary part.
    fn trace_with(&self, rho: &DenseHermitian<T>) -> Complex<T>;

    /// `Σ_k A_kk p_k` for a diagonal state.
    fn trace_with_diagonal(&self, p: &[T]) -> T;
}

impl<T: Real> TraceOperand<T> for DenseHermitian<T> {
    fn operand_dim(&self) -> usize {
        self.dim()
    }

    fn trace_with(&self, rho: &DenseHermitian<T>) -> Complex<T> {
        let n = self.dim();
        let (a, r) = (self.as_slice(), rho.as_slice());
        let mut acc = Complex::new(T::zero(), T::zero());
        for k in 0..n {
            for l in 0..n {
                acc = acc + a[k * n + l] * r[l * n + k];
            }
        }
        acc
    }

    fn trace_with_diagonal(&self, p: &[T]) -> T {
        p.iter()
            .enumerate()
            .map(|(k, &pk)| self.get(k, k).re * pk)
            .sum()
    }
}

impl<T: Real> TraceOperand<T> for SparseHermitian<T> {
    fn operand_dim(&self) -> usize {
        self.dim()
    }

    fn trace_with(&self, rho: &DenseHermitian<T>) -> Complex<T> {
        let mut acc = Complex::new(T::zero(), T::zero());
        for k in 0..self.dim() {
            let (cols, vals) = self.row(k);
            for (&l, &z) in cols.iter().zip(vals) {
                acc = acc + z * rho.get(l, k);
            }
        }
        acc
    }

    fn trace_with_diagonal(&self, p: &[T]) -> T {
        self.diagonal_entries().iter().map(|&(k, v)| v * p[k]).sum()
    }
}

/// `tr(A ρ)` as a real number.
pub fn trace_inner<T: Real, A: TraceOperand<T> + ?Sized>(
    a: &A,
    rho: &DensityMatrix<T>,
) -> Result<T> {
    if a.operand_dim() != rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            got: a.operand_dim(),
        });
    }
    if let Some(p) = rho.diagonal() {
        return Ok(a.trace_with_diagonal(p));
    }
    let z = a.trace_with(rho.matrix());
    debug_assert!(
        z.im.abs() <= T::tol(1e-10) * (T::one() + z.re.abs()),
        "imaginary residue {} in trace of Hermitian product",
        z.im
    );
    Ok(z.re)
}
