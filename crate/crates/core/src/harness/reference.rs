//! Exact reference solver for diagonal instances by vertex enumeration.
//!
//! A diagonal SDP is the LP `min b·y` s.t. `Σ y_i a_i ≥ c`, `y ≥ 0`, where
//! `a_i` and `c` are the diagonals. Every vertex has a support `S` and a set of
//! `|S|` tight rows whose square subsystem is nonsingular, so enumerating
//! those pairs finds the optimum whenever it is finite.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::SdpInstance;

/// Default cap on the number of candidate bases.
pub const DEFAULT_BASIS_LIMIT: u128 = 2_000_000;

const FEAS_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceSolution {
    pub opt: f64,
    pub y: Vec<f64>,
}

/// `Σ_{k ≤ min(m, n)} C(m, k) C(n, k)`, the number of `(S, T)` pairs visited.
pub fn basis_count(n: usize, m: usize) -> u128 {
    (0..=n.min(m)).map(|k| binom(m, k) * binom(n, k)).sum()
}

fn binom(n: usize, k: usize) -> u128 {
    let k = k.min(n - k.min(n));
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

pub fn reference_solve_diagonal(instance: &SdpInstance<f64>) -> Result<ReferenceSolution> {
    reference_solve_diagonal_limited(instance, DEFAULT_BASIS_LIMIT)
}

pub fn reference_solve_diagonal_limited(
    instance: &SdpInstance<f64>,
    limit: u128,
) -> Result<ReferenceSolution> {
    if !instance.is_diagonal() {
        return Err(Error::Lp(
            "reference solver accepts diagonal instances only".into(),
        ));
    }
    let n = instance.n();
    let m = instance.m();
    let count = basis_count(n, m);
    if count > limit {
        return Err(Error::Lp(format!(
            "{count} candidate bases exceed the limit {limit}"
        )));
    }
    let cols: Vec<Vec<f64>> = instance
        .constraints()
        .iter()
        .map(|a| a.diagonal_real())
        .collect();
    let c = instance.objective().diagonal_real();
    let b = instance.b();

    // a ray d ≥ 0, Σd = 1, Σ d_i a_i ≥ 0 with b·d < 0 makes the minimum unbounded
    if let Some(ray) = best_vertex(&cols, &vec![0.0; n], b, true) {
        if ray.0 < -FEAS_TOL {
            return Err(Error::Lp(
                "dual objective is unbounded below (primal infeasible)".into(),
            ));
        }
    }
    match best_vertex(&cols, &c, b, false) {
        Some((opt, y)) => Ok(ReferenceSolution { opt, y }),
        None => Err(Error::Lp("dual constraints are infeasible".into())),
    }
}

/// Minimizes `b·y` over vertices of `{y ≥ 0, Σ y_i cols_i ≥ rhs}`, optionally with `Σ y = 1`.
fn best_vertex(
    cols: &[Vec<f64>],
    rhs: &[f64],
    b: &[f64],
    simplex: bool,
) -> Option<(f64, Vec<f64>)> {
    let m = cols.len();
    let n = rhs.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    let extra = usize::from(simplex);
    for k in 1.max(extra)..=m {
        let tight = k - extra;
        if tight > n {
            break;
        }
        for support in Subsets::new(m, k) {
            for rows in Subsets::new(n, tight) {
                let mut mat = DMatrix::<f64>::zeros(k, k);
                let mut v = DVector::<f64>::zeros(k);
                for (r, &row) in rows.iter().enumerate() {
                    for (s, &col) in support.iter().enumerate() {
                        mat[(r, s)] = cols[col][row];
                    }
                    v[r] = rhs[row];
                }
                if simplex {
                    for s in 0..k {
                        mat[(k - 1, s)] = 1.0;
                    }
                    v[k - 1] = 1.0;
                }
                let Some(sol) = mat.clone().lu().solve(&v) else {
                    continue;
                };
                if (&mat * &sol - &v).amax() > FEAS_TOL
                    || sol.iter().any(|&x| x < -FEAS_TOL || !x.is_finite())
                {
                    continue;
                }
                let mut y = vec![0.0; m];
                for (s, &col) in support.iter().enumerate() {
                    y[col] = sol[s].max(0.0);
                }
                consider(&mut best, cols, rhs, b, y);
            }
        }
    }
    if !simplex {
        // y = 0 is the vertex with empty support
        consider(&mut best, cols, rhs, b, vec![0.0; m]);
    }
    best
}

fn consider(
    best: &mut Option<(f64, Vec<f64>)>,
    cols: &[Vec<f64>],
    rhs: &[f64],
    b: &[f64],
    y: Vec<f64>,
) {
    let feasible = (0..rhs.len()).all(|row| {
        let lhs: f64 = cols.iter().zip(&y).map(|(col, yi)| col[row] * yi).sum();
        lhs >= rhs[row] - FEAS_TOL
    });
    if !feasible {
        return;
    }
    let obj: f64 = b.iter().zip(&y).map(|(bi, yi)| bi * yi).sum();
    if best.as_ref().is_none_or(|(o, _)| obj < *o) {
        *best = Some((obj, y));
    }
}

/// Lexicographic `k`-subsets of `0..n`.
struct Subsets {
    n: usize,
    idx: Vec<usize>,
    done: bool,
}

impl Subsets {
    fn new(n: usize, k: usize) -> Self {
        Self {
            n,
            idx: (0..k).collect(),
            done: k > n,
        }
    }
}

impl Iterator for Subsets {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.idx.clone();
        let k = self.idx.len();
        let mut i = k;
        loop {
            if i == 0 {
                self.done = true;
                break;
            }
            i -= 1;
            if self.idx[i] < self.n - k + i {
                self.idx[i] += 1;
                for j in (i + 1)..k {
                    self.idx[j] = self.idx[j - 1] + 1;
                }
                break;
            }
        }
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::generators::gen_lower_bound;
    use crate::linalg::SparseHermitian;

    #[test]
    fn subsets_enumerate_binomial() {
        assert_eq!(Subsets::new(5, 2).count(), 10);
        assert_eq!(Subsets::new(3, 0).count(), 1);
        assert_eq!(Subsets::new(2, 3).count(), 0);
        assert_eq!(basis_count(3, 2), 1 + 6 + 3);
    }

    #[test]
    fn single_constraint() {
        let inst = SdpInstance::new(
            SparseHermitian::from_real_diagonal(&[0.5]),
            vec![SparseHermitian::identity(1)],
            vec![3.0],
            3.0,
        )
        .unwrap();
        let sol = reference_solve_diagonal(&inst).unwrap();
        assert!((sol.opt - 1.5).abs() < 1e-12);
        assert!((sol.y[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn lower_bound_optima() {
        for seed in 0..5 {
            let g2 = gen_lower_bound(2, 6, 4, seed, false).unwrap();
            assert!((reference_solve_diagonal(&g2.instance).unwrap().opt - 1.0).abs() < 1e-9);
            let g1 = gen_lower_bound(1, 6, 4, seed, false).unwrap();
            assert!((reference_solve_diagonal(&g1.instance).unwrap().opt - 0.5).abs() < 1e-9);
            let g1n = gen_lower_bound(1, 6, 4, seed, true).unwrap();
            assert!((reference_solve_diagonal(&g1n.instance).unwrap().opt - 0.5).abs() < 1e-9);
        }
    }

    #[test]
    fn unbounded_reported() {
        // b_2 < 0 with a_2 ≥ 0 lets y_2 grow without bound
        let inst = SdpInstance::new(
            SparseHermitian::from_real_diagonal(&[0.0, 0.0]),
            vec![
                SparseHermitian::identity(2),
                SparseHermitian::from_real_diagonal(&[1.0, 0.5]),
            ],
            vec![1.0, -1.0],
            1.0,
        )
        .unwrap();
        assert!(reference_solve_diagonal(&inst).is_err());
    }

    #[test]
    fn dense_input_rejected() {
        let inst = crate::harness::generators::gen_random(3, 2, 3, 4).unwrap();
        assert!(reference_solve_diagonal(&inst).is_err());
    }
}
