//! Matrix multiplicative weights solver for the dual SDP.
//!
//! Each round asks an oracle for `y ∈ D_α = {y ≥ 0, b·y ≤ α}` with
//! `Σ y_j tr(A_j ρ) ≥ tr(C ρ)`, feeds the payoff `(Σ y_j A_j − C + ωI)/2ω`
//! back into the state `ρ ∝ exp(−ε′ Σ M)`, and finally averages the `y`s.

use crate::error::{Error, Result};
use crate::linalg::{
    gibbs_state_limited, max_eigenvalue, min_eigenvalue, operator_norm, softmax, trace_inner,
    DenseHermitian, DensityMatrix, SparseHermitian, DEFAULT_DENSE_LIMIT,
};
use crate::model::{min_slack, DualVector, SdpInstance};
use crate::scalar::{ceil_count, Real};

/// Round count used when the formula exceeds it unless the caller raises the cap.
pub const DEFAULT_ROUND_CAP: usize = 20_000_000;

/// Solver parameters for one guess `α` of the optimum.
#[derive(Clone, Debug)]
pub struct MmwConfig<T> {
    pub alpha: T,
    pub delta: T,
    /// `δα / (2R²)`.
    pub epsilon: T,
    /// `−ln(1 − ε)`.
    pub epsilon_prime: T,
    pub rounds: usize,
    /// Uncapped round count from the formula.
    pub formula_rounds: f64,
    pub width: T,
    /// Weight added to the first component of the averaged dual.
    pub dual_shift: T,
    /// Test the running average for feasibility every this many rounds and stop early when it passes.
    pub check_interval: Option<usize>,
    pub trace: TraceLevel,
    pub dense_limit: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum TraceLevel {
    /// Keep only the sums needed by [`check_regret`].
    #[default]
    Sums,
    /// Also keep `y` and `tr(Mρ)` per round.
    Rounds,
    /// Also keep every state and payoff matrix.
    Full,
}

/// `α + 1`, valid when every `b_i ≥ 1`.
pub fn width_bound<T: Real>(instance: &SdpInstance<T>, alpha: T) -> Result<T> {
    let min_b = instance.min_b();
    if min_b < T::one() {
        return Err(Error::Precondition(format!(
            "width bound α + 1 needs all b_i ≥ 1, found {min_b}"
        )));
    }
    Ok(alpha + T::one())
}

/// `α / min(1, min b) + 1`: the same argument as [`width_bound`] for positive `b` below one.
pub fn general_width_bound<T: Real>(instance: &SdpInstance<T>, alpha: T) -> Result<T> {
    let min_b = instance.min_b();
    if min_b <= T::zero() {
        return Err(Error::Precondition(format!(
            "D_α is unbounded when some b_i ≤ 0 (found {min_b})"
        )));
    }
    Ok(alpha / min_b.min(T::one()) + T::one())
}

impl<T: Real> MmwConfig<T> {
    pub fn new(instance: &SdpInstance<T>, alpha: T, delta: T) -> Result<Self> {
        if !(alpha > T::zero()) || !(delta > T::zero()) {
            return Err(Error::InvalidParameter(format!(
                "α = {alpha} and δ = {delta} must be positive"
            )));
        }
        let r = instance.primal_bound();
        let epsilon = delta * alpha / (T::lit(2.0) * r * r);
        if !(epsilon < T::lit(0.5)) {
            return Err(Error::InvalidParameter(format!(
                "ε = δα/(2R²) = {epsilon} must be below 1/2"
            )));
        }
        let epsilon_prime = -(T::one() - epsilon).ln();
        let n = T::lit(instance.n() as f64);
        let t = T::lit(16.0) * r.powi(4) * n.ln() / (alpha * alpha * delta * delta);
        let formula_rounds = t.to_f64_lossy();
        let rounds = round_count(formula_rounds, DEFAULT_ROUND_CAP);
        let width = general_width_bound(instance, alpha)?;
        Ok(Self {
            alpha,
            delta,
            epsilon,
            epsilon_prime,
            rounds,
            formula_rounds,
            width,
            dual_shift: delta * alpha / r,
            check_interval: Some(16),
            trace: TraceLevel::Sums,
            dense_limit: DEFAULT_DENSE_LIMIT,
        })
    }

    pub fn with_rounds(mut self, rounds: usize) -> Self {
        self.rounds = rounds.max(1);
        self
    }

    /// Replaces the default cap on the formula round count; may raise or lower it.
    pub fn with_round_cap(mut self, cap: usize) -> Self {
        self.rounds = round_count(self.formula_rounds, cap.max(1));
        self
    }

    pub fn with_width(mut self, width: T) -> Self {
        self.width = width;
        self
    }

    pub fn with_dual_shift(mut self, shift: T) -> Self {
        self.dual_shift = shift;
        self
    }

    pub fn with_check_interval(mut self, interval: Option<usize>) -> Self {
        self.check_interval = interval.filter(|&k| k > 0);
        self
    }

    pub fn with_trace(mut self, level: TraceLevel) -> Self {
        self.trace = level;
        self
    }
}

fn round_count(t: f64, cap: usize) -> usize {
    let t = ceil_count(t).max(1);
    if t > cap as u128 {
        log::warn!("round count {t} capped at {cap}");
        cap
    } else {
        t as usize
    }
}

/// What an oracle returns for one state.
#[derive(Clone, Debug, PartialEq)]
pub enum OracleOutcome<T> {
    /// No `y ∈ D_α` satisfies the state; optionally with a certified primal objective value.
    Fail {
        primal_lower_bound: Option<T>,
    },
    Dual(Vec<T>),
}

pub trait MmwOracle<T> {
    fn query(&mut self, round: usize, rho: &DensityMatrix<T>) -> Result<OracleOutcome<T>>;
}

impl<T, F> MmwOracle<T> for F
where
    F: FnMut(usize, &DensityMatrix<T>) -> Result<OracleOutcome<T>>,
{
    fn query(&mut self, round: usize, rho: &DensityMatrix<T>) -> Result<OracleOutcome<T>> {
        self(round, rho)
    }
}

/// Deterministic oracle working from exact expectations.
///
/// Returns the smallest multiple of the single constraint with the best
/// `tr(A_j ρ) / b_j` ratio that covers `tr(Cρ)`. On failure, `λρ` with
/// `λ = min_{e_i > 0} b_i / e_i` is primal feasible with objective above `α`.
#[derive(Debug)]
pub struct ExactOracle<'a, T> {
    instance: &'a SdpInstance<T>,
    alpha: T,
}

impl<'a, T: Real> ExactOracle<'a, T> {
    pub fn new(instance: &'a SdpInstance<T>, alpha: T) -> Result<Self> {
        if instance.min_b() <= T::zero() {
            return Err(Error::Precondition(
                "the exact oracle needs every b_i > 0".into(),
            ));
        }
        Ok(Self { instance, alpha })
    }

    pub fn decide(&self, expectations: &[T], objective: T) -> OracleOutcome<T> {
        let m = self.instance.m();
        if objective <= T::zero() {
            return OracleOutcome::Dual(vec![T::zero(); m]);
        }
        let b = self.instance.b();
        let best = (0..m)
            .filter(|&i| expectations[i] > T::zero())
            .min_by(|&i, &j| {
                (b[i] / expectations[i])
                    .partial_cmp(&(b[j] / expectations[j]))
                    .unwrap()
            });
        let Some(j) = best else {
            return OracleOutcome::Fail {
                primal_lower_bound: Some(T::infinity()),
            };
        };
        let scale = b[j] / expectations[j];
        if objective * scale > self.alpha {
            return OracleOutcome::Fail {
                primal_lower_bound: Some(objective * scale),
            };
        }
        let mut y = vec![T::zero(); m];
        y[j] = objective / expectations[j];
        OracleOutcome::Dual(y)
    }
}

impl<T: Real> MmwOracle<T> for ExactOracle<'_, T> {
    fn query(&mut self, _round: usize, rho: &DensityMatrix<T>) -> Result<OracleOutcome<T>> {
        let e = self
            .instance
            .constraints()
            .iter()
            .map(|a| trace_inner(a, rho))
            .collect::<Result<Vec<_>>>()?;
        let f = trace_inner(self.instance.objective(), rho)?;
        Ok(self.decide(&e, f))
    }
}

/// `(Σ y_j A_j − C + ωI) / 2ω`, with its spectrum checked against `[0, 1]`.
pub fn payoff_matrix<T: Real>(
    instance: &SdpInstance<T>,
    y: &[T],
    width: T,
) -> Result<DenseHermitian<T>> {
    let m = dense_payoff(instance, y, width);
    let (lo, hi) = (min_eigenvalue(&m)?, max_eigenvalue(&m)?);
    check_unit_band(lo, hi, width)?;
    Ok(m)
}

fn dense_payoff<T: Real>(instance: &SdpInstance<T>, y: &[T], width: T) -> DenseHermitian<T> {
    let mut m = DenseHermitian::zeros(instance.n());
    for (a, &yj) in instance.constraints().iter().zip(y) {
        if yj != T::zero() {
            a.add_scaled_into(&mut m, yj);
        }
    }
    instance.objective().add_scaled_into(&mut m, -T::one());
    m.add_identity(width);
    m.scaled(T::one() / (T::lit(2.0) * width))
}

fn check_unit_band<T: Real>(lo: T, hi: T, width: T) -> Result<()> {
    let tol = T::tol(1e-9);
    if lo < -tol || hi > T::one() + tol {
        return Err(Error::WidthViolation {
            min: lo.to_f64_lossy(),
            max: hi.to_f64_lossy(),
            width: width.to_f64_lossy(),
        });
    }
    Ok(())
}

/// `ρ ∝ exp(−ε′ Σ M)`.
pub fn mmw_state<T: Real>(
    payoff_sum: &DenseHermitian<T>,
    epsilon_prime: T,
) -> Result<DensityMatrix<T>> {
    crate::linalg::gibbs_state(&payoff_sum.scaled(-epsilon_prime))
}

#[derive(Clone, Debug)]
pub struct RoundRecord<T> {
    pub t: usize,
    pub y: Vec<T>,
    /// `tr(M ρ)` for this round's payoff and state.
    pub payoff_value: T,
    pub state: Option<DensityMatrix<T>>,
    pub payoff: Option<DenseHermitian<T>>,
}

/// History of a run, enough to re-check the regret inequality.
#[derive(Clone, Debug)]
pub struct MmwTrace<T> {
    pub records: Vec<RoundRecord<T>>,
    /// `Σ_t tr(M^(t) ρ^(t))`.
    pub payoff_value_sum: T,
    /// `Σ_t M^(t)`.
    pub payoff_sum: DenseHermitian<T>,
    pub rounds: usize,
}

impl<T: Real> MmwTrace<T> {
    /// Builds a trace from explicit `(state, payoff)` pairs.
    pub fn from_rounds(rounds: Vec<(DensityMatrix<T>, DenseHermitian<T>)>) -> Result<Self> {
        let n = rounds.first().map(|(r, _)| r.dim()).unwrap_or(0);
        let mut payoff_sum = DenseHermitian::zeros(n);
        let mut payoff_value_sum = T::zero();
        let mut records = Vec::with_capacity(rounds.len());
        for (t, (state, payoff)) in rounds.into_iter().enumerate() {
            let value = trace_inner(&payoff, &state)?;
            payoff_sum.add_scaled(&payoff, T::one())?;
            payoff_value_sum += value;
            records.push(RoundRecord {
                t,
                y: vec![],
                payoff_value: value,
                state: Some(state),
                payoff: Some(payoff),
            });
        }
        let count = records.len();
        Ok(Self {
            records,
            payoff_value_sum,
            payoff_sum,
            rounds: count,
        })
    }
}

/// Both sides of `Σ tr(Mρ) ≤ (1+ε) λ_min(Σ M) + ln(n)/ε`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegretCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

pub fn check_regret<T: Real>(trace: &MmwTrace<T>, epsilon: f64) -> Result<RegretCheck> {
    let n = trace.payoff_sum.dim() as f64;
    let lambda = min_eigenvalue(&trace.payoff_sum)?.to_f64_lossy();
    let lhs = trace.payoff_value_sum.to_f64_lossy();
    let rhs = (1.0 + epsilon) * lambda + n.ln() / epsilon;
    Ok(RegretCheck {
        lhs,
        rhs,
        holds: lhs <= rhs + 1e-9,
    })
}

#[derive(Clone, Debug)]
pub enum MmwOutcome<T> {
    Dual(DualVector<T>),
    /// The oracle failed on `state` at `round` (0-based).
    PrimalWitness {
        round: usize,
        state: DensityMatrix<T>,
        primal_lower_bound: Option<T>,
    },
}

#[derive(Clone, Debug)]
pub struct MmwRun<T> {
    pub outcome: MmwOutcome<T>,
    pub trace: MmwTrace<T>,
    /// Rounds in which the oracle returned a vector.
    pub rounds: usize,
    pub stopped_early: bool,
}

enum PayoffSum<T> {
    Diagonal(Vec<T>),
    Dense(DenseHermitian<T>),
}

/// Runs the multiplicative weights loop with `oracle` for up to `config.rounds` rounds.
pub fn run_arora_kale<T: Real>(
    instance: &SdpInstance<T>,
    config: &MmwConfig<T>,
    oracle: &mut dyn MmwOracle<T>,
) -> Result<MmwRun<T>> {
    let n = instance.n();
    let m = instance.m();
    let width = config.width;
    if !(width > T::zero()) {
        return Err(Error::InvalidParameter(format!(
            "width {width} must be positive"
        )));
    }
    let diagonal = instance.is_diagonal();
    let (diag_a, diag_c) = if diagonal {
        (
            instance
                .constraints()
                .iter()
                .map(SparseHermitian::diagonal_real)
                .collect::<Vec<_>>(),
            instance.objective().diagonal_real(),
        )
    } else {
        (vec![], vec![])
    };
    let norms = if diagonal {
        vec![]
    } else {
        instance
            .constraints()
            .iter()
            .map(|a| operator_norm(&a.to_dense()))
            .collect::<Result<Vec<_>>>()?
    };
    let c_norm = if diagonal {
        T::zero()
    } else {
        operator_norm(&instance.objective().to_dense())?
    };

    let mut sum = if diagonal {
        PayoffSum::Diagonal(vec![T::zero(); n])
    } else {
        PayoffSum::Dense(DenseHermitian::zeros(n))
    };
    let mut y_sum = vec![T::zero(); m];
    let mut records = Vec::new();
    let mut value_sum = T::zero();
    let mut completed = 0usize;
    let two_w = T::lit(2.0) * width;

    for t in 0..config.rounds {
        let rho = match &sum {
            PayoffSum::Diagonal(s) => {
                let logits: Vec<T> = s.iter().map(|&v| -config.epsilon_prime * v).collect();
                DensityMatrix::from_probabilities(&softmax(&logits))?
            }
            PayoffSum::Dense(s) => {
                gibbs_state_limited(&s.scaled(-config.epsilon_prime), config.dense_limit)?
            }
        };
        let y = match oracle.query(t, &rho).map_err(|e| Error::OracleAborted {
            round: t,
            reason: e.to_string(),
        })? {
            OracleOutcome::Fail { primal_lower_bound } => {
                log::debug!("oracle failed at round {t}");
                let trace = finish_trace(records, value_sum, sum, completed);
                return Ok(MmwRun {
                    outcome: MmwOutcome::PrimalWitness {
                        round: t,
                        state: rho,
                        primal_lower_bound,
                    },
                    trace,
                    rounds: completed,
                    stopped_early: false,
                });
            }
            OracleOutcome::Dual(y) => y,
        };
        if y.len() != m {
            return Err(Error::OracleAborted {
                round: t,
                reason: format!("vector of length {} for m = {m}", y.len()),
            });
        }
        if y.iter().any(|v| !(*v >= T::zero())) {
            return Err(Error::OracleAborted {
                round: t,
                reason: "negative component".into(),
            });
        }

        let (value, payoff) = match &mut sum {
            PayoffSum::Diagonal(s) => {
                let mut d: Vec<T> = diag_c.iter().map(|&c| width - c).collect();
                for (a, &yj) in diag_a.iter().zip(&y) {
                    if yj != T::zero() {
                        for (dk, &ak) in d.iter_mut().zip(a) {
                            *dk += yj * ak;
                        }
                    }
                }
                for dk in &mut d {
                    *dk /= two_w;
                }
                let lo = d.iter().copied().fold(T::infinity(), T::min);
                let hi = d.iter().copied().fold(T::neg_infinity(), T::max);
                check_unit_band(lo, hi, width)?;
                let p = rho.diagonal().expect("diagonal state");
                let value = d.iter().zip(p).map(|(&a, &b)| a * b).sum::<T>();
                for (sk, &dk) in s.iter_mut().zip(&d) {
                    *sk += dk;
                }
                let payoff = (config.trace == TraceLevel::Full)
                    .then(|| DenseHermitian::from_real_diagonal(&d));
                (value, payoff)
            }
            PayoffSum::Dense(s) => {
                let mpay = dense_payoff(instance, &y, width);
                let bound = y
                    .iter()
                    .zip(&norms)
                    .fold(c_norm, |acc, (&yj, &nj)| acc + yj * nj);
                if bound > width {
                    check_unit_band(min_eigenvalue(&mpay)?, max_eigenvalue(&mpay)?, width)?;
                }
                let value = trace_inner(&mpay, &rho)?;
                s.add_scaled(&mpay, T::one())?;
                (value, (config.trace == TraceLevel::Full).then_some(mpay))
            }
        };
        value_sum += value;
        for (acc, &v) in y_sum.iter_mut().zip(&y) {
            *acc += v;
        }
        completed += 1;
        if config.trace != TraceLevel::Sums {
            let state = (config.trace == TraceLevel::Full).then(|| rho.clone());
            records.push(RoundRecord {
                t,
                y: y.clone(),
                payoff_value: value,
                state,
                payoff,
            });
        }

        let last = completed == config.rounds;
        let probe = config.check_interval.is_some_and(|k| completed % k == 0);
        if probe && !last {
            let candidate = averaged_dual(&y_sum, completed, config.dual_shift);
            if min_slack(instance, &candidate)? >= T::zero() {
                let dual = DualVector::evaluate(instance, candidate)?;
                log::debug!(
                    "average feasible after {completed} of {} rounds",
                    config.rounds
                );
                return Ok(MmwRun {
                    outcome: MmwOutcome::Dual(dual),
                    trace: finish_trace(records, value_sum, sum, completed),
                    rounds: completed,
                    stopped_early: true,
                });
            }
        }
    }

    let dual = DualVector::evaluate(
        instance,
        averaged_dual(&y_sum, completed, config.dual_shift),
    )?;
    Ok(MmwRun {
        outcome: MmwOutcome::Dual(dual),
        trace: finish_trace(records, value_sum, sum, completed),
        rounds: completed,
        stopped_early: false,
    })
}

/// `shift · e_1 + (1/t) Σ y^(τ)`.
fn averaged_dual<T: Real>(y_sum: &[T], t: usize, shift: T) -> Vec<T> {
    let inv = T::one() / T::lit(t.max(1) as f64);
    let mut y: Vec<T> = y_sum.iter().map(|&v| v * inv).collect();
    y[0] += shift;
    y
}

fn finish_trace<T: Real>(
    records: Vec<RoundRecord<T>>,
    value_sum: T,
    sum: PayoffSum<T>,
    rounds: usize,
) -> MmwTrace<T> {
    let payoff_sum = match sum {
        PayoffSum::Diagonal(d) => DenseHermitian::from_real_diagonal(&d),
        PayoffSum::Dense(s) => s,
    };
    MmwTrace {
        records,
        payoff_value_sum: value_sum,
        payoff_sum,
        rounds,
    }
}
