use serde::{Deserialize, Serialize};

use super::SdpInstance;
use crate::error::{Error, Result};
use crate::linalg::{min_eigenvalue, DenseHermitian};
use crate::scalar::Real;

/// Nonnegative dual vector with its objective `b·y` and slack `λ_min(Σ y_j A_j − C)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DualVector<T> {
    y: Vec<T>,
    objective: T,
    min_slack: T,
}

/// Outcome of checking a dual vector against an objective bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualCertificate {
    pub feasible: bool,
    pub min_slack: f64,
    pub objective: f64,
    pub objective_limit: f64,
}

impl<T: Real> DualVector<T> {
    /// Evaluates `y` against `instance`; accumulation runs in index order.
    pub fn evaluate(instance: &SdpInstance<T>, y: Vec<T>) -> Result<Self> {
        if y.len() != instance.m() {
            return Err(Error::DimensionMismatch {
                expected: instance.m(),
                got: y.len(),
            });
        }
        if let Some((i, v)) = y
            .iter()
            .enumerate()
            .find(|(_, v)| !(**v >= T::zero()) || !v.is_finite())
        {
            return Err(Error::InfeasibleDual(format!(
                "component {i} is {v}, not a finite nonnegative value"
            )));
        }
        let objective = y
            .iter()
            .zip(instance.b())
            .fold(T::zero(), |acc, (&yi, &bi)| acc + yi * bi);
        let min_slack = min_slack(instance, &y)?;
        Ok(Self {
            y,
            objective,
            min_slack,
        })
    }

    pub fn y(&self) -> &[T] {
        &self.y
    }

    pub fn into_y(self) -> Vec<T> {
        self.y
    }

    pub fn objective(&self) -> T {
        self.objective
    }

    pub fn min_slack(&self) -> T {
        self.min_slack
    }

    /// `‖y‖₁`.
    pub fn norm1(&self) -> T {
        self.y.iter().copied().sum()
    }

    pub fn is_feasible(&self) -> bool {
        self.min_slack >= -T::lit(1e-6)
    }
}

/// `Σ y_j A_j − C` as a dense matrix.
pub fn slack_matrix<T: Real>(instance: &SdpInstance<T>, y: &[T]) -> DenseHermitian<T> {
    let mut s = DenseHermitian::zeros(instance.n());
    for (a, &yj) in instance.constraints().iter().zip(y) {
        if yj != T::zero() {
            a.add_scaled_into(&mut s, yj);
        }
    }
    instance.objective().add_scaled_into(&mut s, -T::one());
    s
}

/// `λ_min(Σ y_j A_j − C)`, without forming a dense matrix for diagonal instances.
pub fn min_slack<T: Real>(instance: &SdpInstance<T>, y: &[T]) -> Result<T> {
    if !instance.is_diagonal() {
        return min_eigenvalue(&slack_matrix(instance, y));
    }
    let mut d: Vec<T> = instance
        .objective()
        .diagonal_real()
        .into_iter()
        .map(|v| -v)
        .collect();
    for (a, &yj) in instance.constraints().iter().zip(y) {
        if yj != T::zero() {
            for &(k, v) in a.diagonal_entries() {
                d[k] += yj * v;
            }
        }
    }
    Ok(d.into_iter().fold(T::infinity(), T::min))
}

/// Checks feasibility (`λ_min ≥ −1e-6`) and `b·y ≤ (1+δ)α + 1e-9`, recomputing
/// both numbers from `y`.
pub fn verify_dual<T: Real>(
    instance: &SdpInstance<T>,
    dual: &DualVector<T>,
    alpha: f64,
    delta: f64,
) -> Result<DualCertificate> {
    let fresh = DualVector::evaluate(instance, dual.y.clone())?;
    let objective = fresh.objective.to_f64_lossy();
    let min_slack = fresh.min_slack.to_f64_lossy();
    let objective_limit = (1.0 + delta) * alpha + 1e-9;
    Ok(DualCertificate {
        feasible: min_slack >= -1e-6 && objective <= objective_limit,
        min_slack,
        objective,
        objective_limit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::SparseHermitian;

    fn instance(c: &[f64]) -> SdpInstance<f64> {
        let n = c.len();
        SdpInstance::new(
            SparseHermitian::from_real_diagonal(c),
            vec![
                SparseHermitian::identity(n),
                SparseHermitian::from_real_diagonal(&vec![0.5; n]),
            ],
            vec![1.0, 0.5],
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn identity_dominance() {
        let inst = instance(&[1.0, -1.0, 0.3]);
        let d = DualVector::evaluate(&inst, vec![2.0, 0.0]).unwrap();
        let cert = verify_dual(&inst, &d, 2.0, 0.1).unwrap();
        assert!(cert.feasible);
        assert_eq!(cert.objective, 2.0);
        assert_eq!(cert.min_slack, 1.0);
    }

    #[test]
    fn zero_dual_against_positive_objective() {
        let inst = instance(&[0.5, 0.0]);
        let d = DualVector::evaluate(&inst, vec![0.0, 0.0]).unwrap();
        assert!(!verify_dual(&inst, &d, 1.0, 0.1).unwrap().feasible);
        assert!(!d.is_feasible());
    }

    #[test]
    fn objective_limit_enforced() {
        let inst = instance(&[0.0, 0.0]);
        let d = DualVector::evaluate(&inst, vec![1.2, 0.0]).unwrap();
        assert!(!verify_dual(&inst, &d, 1.0, 0.1).unwrap().feasible);
        assert!(verify_dual(&inst, &d, 1.0, 0.2).unwrap().feasible);
    }

    #[test]
    fn negative_components_rejected() {
        let inst = instance(&[0.0, 0.0]);
        assert!(DualVector::evaluate(&inst, vec![-0.1, 0.0]).is_err());
        assert!(DualVector::evaluate(&inst, vec![0.1]).is_err());
    }
}
