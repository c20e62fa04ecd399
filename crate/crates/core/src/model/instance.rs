use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::{operator_norm, SparseHermitian};
use crate::scalar::Real;

/// Primal `max tr(CX)` s.t. `tr(A_i X) <= b_i`, `X >= 0`, and its dual
/// `min b·y` s.t. `Σ y_i A_i >= C`, `y >= 0`.
///
/// `primal_bound` is the trace bound `R` on primal solutions; by convention
/// the first constraint is `tr(X) <= R`. `dual_bound` is an optional bound on
/// `‖y‖₁` of an optimal dual.
#[derive(Clone, Debug, PartialEq)]
pub struct SdpInstance<T> {
    n: usize,
    sparsity: usize,
    objective: SparseHermitian<T>,
    constraints: Vec<SparseHermitian<T>>,
    b: Vec<T>,
    primal_bound: T,
    dual_bound: Option<T>,
    norm_waiver: bool,
}

/// One broken normalization invariant.
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    ObjectiveNorm(f64),
    ConstraintNorm {
        index: usize,
        norm: f64,
    },
    FirstConstraintNotIdentity,
    FirstBoundNotPrimalBound {
        b1: f64,
        bound: f64,
    },
    MaxBoundMismatch {
        max_abs_b: f64,
        bound: f64,
    },
    NormUnavailable {
        index: Option<usize>,
        reason: String,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::ObjectiveNorm(v) => {
                write!(f, "objective matrix C has operator norm {v} > 1")
            }
            Violation::ConstraintNorm { index, norm } => {
                write!(
                    f,
                    "constraint matrix A[{index}] has operator norm {norm} > 1"
                )
            }
            Violation::FirstConstraintNotIdentity => write!(f, "A[0] is not the identity"),
            Violation::FirstBoundNotPrimalBound { b1, bound } => {
                write!(f, "b[0] = {b1} differs from R = {bound}")
            }
            Violation::MaxBoundMismatch { max_abs_b, bound } => {
                write!(f, "max |b_i| = {max_abs_b} differs from R = {bound}")
            }
            Violation::NormUnavailable { index, reason } => match index {
                Some(i) => write!(f, "norm of A[{i}] could not be computed: {reason}"),
                None => write!(f, "norm of C could not be computed: {reason}"),
            },
        }
    }
}

/// Every normalization invariant the instance breaks; empty when valid.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_valid() {
            return Ok(());
        }
        let msgs: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
        Err(Error::InvalidInstance(msgs.join("; ")))
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "valid");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

impl<T: Real> SdpInstance<T> {
    /// Checks structure only (dimensions, lengths, finiteness); see [`Self::validate`]
    /// for the normalization invariants.
    pub fn new(
        objective: SparseHermitian<T>,
        constraints: Vec<SparseHermitian<T>>,
        b: Vec<T>,
        primal_bound: T,
    ) -> Result<Self> {
        let n = objective.dim();
        if n == 0 {
            return Err(Error::InvalidInstance("dimension must be positive".into()));
        }
        if constraints.is_empty() {
            return Err(Error::InvalidInstance(
                "at least one constraint is required".into(),
            ));
        }
        if constraints.len() != b.len() {
            return Err(Error::InvalidInstance(format!(
                "{} constraint matrices but {} bounds",
                constraints.len(),
                b.len()
            )));
        }
        for (i, a) in constraints.iter().enumerate() {
            if a.dim() != n {
                return Err(Error::InvalidInstance(format!(
                    "A[{i}] has dimension {} but C has dimension {n}",
                    a.dim()
                )));
            }
        }
        if b.iter().any(|v| !v.is_finite())
            || !primal_bound.is_finite()
            || primal_bound <= T::zero()
        {
            return Err(Error::InvalidInstance(
                "bounds must be finite and R positive".into(),
            ));
        }
        let sparsity = constraints
            .iter()
            .map(SparseHermitian::row_sparsity)
            .chain(std::iter::once(objective.row_sparsity()))
            .max()
            .unwrap_or(0);
        Ok(Self {
            n,
            sparsity,
            objective,
            constraints,
            b,
            primal_bound,
            dual_bound: None,
            norm_waiver: false,
        })
    }

    /// Declares a row sparsity larger than the one the matrices realize.
    pub fn with_sparsity(mut self, s: usize) -> Result<Self> {
        if s < self.sparsity {
            return Err(Error::InvalidInstance(format!(
                "declared sparsity {s} is below the realized row sparsity {}",
                self.sparsity
            )));
        }
        self.sparsity = s;
        Ok(self)
    }

    pub fn with_dual_bound(mut self, r: Option<T>) -> Self {
        self.dual_bound = r;
        self
    }

    /// Exempts the constraint matrices from the norm check.
    pub fn with_norm_waiver(mut self, waiver: bool) -> Self {
        self.norm_waiver = waiver;
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.constraints.len()
    }

    /// Row sparsity `s`: the maximum number of stored entries in any row.
    pub fn s(&self) -> usize {
        self.sparsity
    }

    pub fn objective(&self) -> &SparseHermitian<T> {
        &self.objective
    }

    pub fn constraints(&self) -> &[SparseHermitian<T>] {
        &self.constraints
    }

    pub fn constraint(&self, i: usize) -> &SparseHermitian<T> {
        &self.constraints[i]
    }

    /// Constraint `j < m`, or the objective for `j == m`.
    pub fn matrix(&self, j: usize) -> Option<&SparseHermitian<T>> {
        if j == self.m() {
            Some(&self.objective)
        } else {
            self.constraints.get(j)
        }
    }

    pub fn b(&self) -> &[T] {
        &self.b
    }

    pub fn primal_bound(&self) -> T {
        self.primal_bound
    }

    pub fn dual_bound(&self) -> Option<T> {
        self.dual_bound
    }

    pub fn norm_waiver(&self) -> bool {
        self.norm_waiver
    }

    pub fn min_b(&self) -> T {
        self.b.iter().copied().fold(T::infinity(), T::min)
    }

    pub fn is_diagonal(&self) -> bool {
        self.objective.is_diagonal() && self.constraints.iter().all(SparseHermitian::is_diagonal)
    }

    /// Lists every broken normalization invariant.
    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        let limit = T::one() + T::tol(1e-9);
        match sparse_norm(&self.objective) {
            Ok(v) if v > limit => violations.push(Violation::ObjectiveNorm(v.to_f64_lossy())),
            Ok(_) => {}
            Err(e) => violations.push(Violation::NormUnavailable {
                index: None,
                reason: e.to_string(),
            }),
        }
        if !self.norm_waiver {
            for (index, a) in self.constraints.iter().enumerate() {
                match sparse_norm(a) {
                    Ok(v) if v > limit => violations.push(Violation::ConstraintNorm {
                        index,
                        norm: v.to_f64_lossy(),
                    }),
                    Ok(_) => {}
                    Err(e) => violations.push(Violation::NormUnavailable {
                        index: Some(index),
                        reason: e.to_string(),
                    }),
                }
            }
        }
        if self.constraints[0] != SparseHermitian::identity(self.n) {
            violations.push(Violation::FirstConstraintNotIdentity);
        }
        let tol = T::tol(1e-12) * T::one().max(self.primal_bound);
        if (self.b[0] - self.primal_bound).abs() > tol {
            violations.push(Violation::FirstBoundNotPrimalBound {
                b1: self.b[0].to_f64_lossy(),
                bound: self.primal_bound.to_f64_lossy(),
            });
        }
        let max_abs = self.b.iter().fold(T::zero(), |acc, v| acc.max(v.abs()));
        if (max_abs - self.primal_bound).abs() > tol {
            violations.push(Violation::MaxBoundMismatch {
                max_abs_b: max_abs.to_f64_lossy(),
                bound: self.primal_bound.to_f64_lossy(),
            });
        }
        ValidationReport { violations }
    }
}

fn sparse_norm<T: Real>(a: &SparseHermitian<T>) -> Result<T> {
    if a.is_diagonal() {
        return Ok(a
            .diagonal_real()
            .into_iter()
            .fold(T::zero(), |acc, d| acc.max(d.abs())));
    }
    operator_norm(&a.to_dense())
}
