//! Problem transformations and the reduction of optimization to feasibility.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::SparseHermitian;
use crate::mmw::{run_arora_kale, ExactOracle, MmwConfig, MmwOutcome};
use crate::model::{min_slack, DualVector, SdpInstance};

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReductionKind {
    Identity,
    /// Extension by one dimension and one variable making every bound at least 1.
    PositiveBounds {
        dual_bound: f64,
        objective_scale: f64,
    },
    /// Bounds divided by `alpha`.
    AlphaRescale {
        alpha: f64,
    },
}

/// A transformed instance with the maps that carry accuracy forward and solutions back.
#[derive(Clone, Debug)]
pub struct ReductionRecord<'a> {
    pub original: &'a SdpInstance<f64>,
    pub transformed: SdpInstance<f64>,
    pub kind: ReductionKind,
}

impl ReductionRecord<'_> {
    /// Accuracy the transformed instance must be solved to.
    pub fn map_delta(&self, delta: f64) -> f64 {
        match self.kind {
            ReductionKind::Identity => delta,
            ReductionKind::PositiveBounds {
                objective_scale, ..
            } => delta / objective_scale,
            ReductionKind::AlphaRescale { alpha } => delta * alpha,
        }
    }

    /// Original objective value corresponding to a transformed one.
    pub fn map_objective_back(&self, value: f64) -> f64 {
        match self.kind {
            ReductionKind::Identity => value,
            ReductionKind::PositiveBounds {
                dual_bound,
                objective_scale,
            } => value * objective_scale - (self.original.primal_bound() + 1.0) * dual_bound,
            ReductionKind::AlphaRescale { alpha } => value * alpha,
        }
    }

    pub fn describe_inverse(&self) -> String {
        match &self.kind {
            ReductionKind::Identity => "y unchanged".into(),
            ReductionKind::PositiveBounds {
                objective_scale, ..
            } => {
                format!("drop the last component and multiply by {objective_scale}")
            }
            ReductionKind::AlphaRescale { alpha } => {
                format!("y unchanged; objective multiplied by {alpha}")
            }
        }
    }

    /// Carries a dual of the transformed instance back, rejecting infeasible input.
    pub fn map_back(&self, dual: &DualVector<f64>) -> Result<DualVector<f64>> {
        let y = dual.y();
        if y.len() != self.transformed.m() {
            return Err(Error::DimensionMismatch {
                expected: self.transformed.m(),
                got: y.len(),
            });
        }
        let slack = min_slack(&self.transformed, y)?;
        if slack < -1e-6 {
            return Err(Error::InfeasibleDual(format!(
                "transformed dual has slack {slack}"
            )));
        }
        let y = match self.kind {
            ReductionKind::Identity | ReductionKind::AlphaRescale { .. } => y.to_vec(),
            ReductionKind::PositiveBounds {
                objective_scale, ..
            } => y[..self.original.m()]
                .iter()
                .map(|v| v * objective_scale)
                .collect(),
        };
        DualVector::evaluate(self.original, y)
    }
}

/// Extends the instance so every bound is at least 1.
///
/// Constraints become `[A_i 0; 0 1]` with bounds `b_i + R + 1`, a new variable
/// with matrix `[0 0; 0 1]` and bound `R + 1` is added, and the objective
/// becomes `[C 0; 0 r] / max(1, r)` so its norm stays at most 1. The
/// transformed size parameter is `2R + 1`.
pub fn extend_to_positive_b(
    instance: &SdpInstance<f64>,
    dual_bound: f64,
) -> Result<ReductionRecord<'_>> {
    if !(dual_bound > 0.0) || !dual_bound.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "dual bound r = {dual_bound} must be positive"
        )));
    }
    let n = instance.n();
    let big_r = instance.primal_bound();
    let scale = dual_bound.max(1.0);
    let mut a: Vec<SparseHermitian<f64>> = instance
        .constraints()
        .iter()
        .map(|ai| ai.with_corner(1.0))
        .collect();
    let mut last = vec![0.0; n + 1];
    last[n] = 1.0;
    a.push(SparseHermitian::from_real_diagonal(&last));
    let mut b: Vec<f64> = instance.b().iter().map(|bi| bi + big_r + 1.0).collect();
    b.push(big_r + 1.0);
    let new_r = 2.0 * big_r + 1.0;
    let max_b = b.iter().copied().fold(f64::MIN, f64::max);
    if (max_b - new_r).abs() > 1e-12 * new_r {
        log::warn!("extended bounds peak at {max_b}, not 2R + 1 = {new_r}");
    }
    let c = instance
        .objective()
        .with_corner(dual_bound)
        .scaled(1.0 / scale);
    let transformed = SdpInstance::new(c, a, b, new_r)?;
    Ok(ReductionRecord {
        original: instance,
        transformed,
        kind: ReductionKind::PositiveBounds {
            dual_bound,
            objective_scale: scale,
        },
    })
}

/// Divides every bound by `α < 1`; identity for `α ≥ 1`.
pub fn rescale_for_alpha(instance: &SdpInstance<f64>, alpha: f64) -> Result<ReductionRecord<'_>> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "α = {alpha} must be positive"
        )));
    }
    if alpha >= 1.0 {
        return Ok(ReductionRecord {
            original: instance,
            transformed: instance.clone(),
            kind: ReductionKind::Identity,
        });
    }
    if instance.min_b() < 1.0 {
        return Err(Error::Precondition(
            "α rescaling expects every b_i ≥ 1".into(),
        ));
    }
    rescale_bounds(instance, alpha)
}

/// Divides every bound and `R` by `alpha > 0` without preconditions on `b`.
///
/// Duals carry over unchanged; objectives scale by `1/alpha`.
pub fn rescale_bounds(instance: &SdpInstance<f64>, alpha: f64) -> Result<ReductionRecord<'_>> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "scale {alpha} must be positive"
        )));
    }
    let b = instance.b().iter().map(|v| v / alpha).collect();
    let transformed = SdpInstance::new(
        instance.objective().clone(),
        instance.constraints().to_vec(),
        b,
        instance.primal_bound() / alpha,
    )?
    .with_sparsity(instance.s())?
    .with_dual_bound(instance.dual_bound())
    .with_norm_waiver(instance.norm_waiver());
    Ok(ReductionRecord {
        original: instance,
        transformed,
        kind: ReductionKind::AlphaRescale { alpha },
    })
}

/// Multiplicative accuracy equivalent to additive accuracy `delta_add` at guess `α`.
pub fn multiplicative_to_additive(delta_add: f64, alpha: f64) -> f64 {
    delta_add / alpha
}

/// `α / min b`, a bound on `‖y‖₁` for any `y` with `b·y ≤ α`.
pub fn dual_size_bound(instance: &SdpInstance<f64>, alpha: f64) -> Result<f64> {
    let min_b = instance.min_b();
    if min_b <= 0.0 {
        return Err(Error::Precondition(format!(
            "min b = {min_b} ≤ 0; a dual bound must be supplied externally"
        )));
    }
    Ok(alpha / min_b)
}

/// What a feasibility solver reports for one guess.
#[derive(Clone, Debug)]
pub enum GuessOutcome {
    Dual(DualVector<f64>),
    /// The optimum exceeds `(1 − δ)α`; optionally with a certified primal value.
    Larger {
        primal_lower_bound: Option<f64>,
    },
}

pub trait FeasibilitySolver {
    /// Decides guess `alpha` at multiplicative accuracy `delta`.
    fn decide(
        &mut self,
        instance: &SdpInstance<f64>,
        alpha: f64,
        delta: f64,
    ) -> Result<GuessOutcome>;
}

impl<F> FeasibilitySolver for F
where
    F: FnMut(&SdpInstance<f64>, f64, f64) -> Result<GuessOutcome>,
{
    fn decide(
        &mut self,
        instance: &SdpInstance<f64>,
        alpha: f64,
        delta: f64,
    ) -> Result<GuessOutcome> {
        self(instance, alpha, delta)
    }
}

/// Classical solver with the exact oracle.
#[derive(Clone, Debug, Default)]
pub struct ClassicalSolver {
    pub round_cap: Option<usize>,
    pub check_interval: Option<usize>,
    /// Total oracle rounds over all guesses.
    pub rounds: usize,
}

impl FeasibilitySolver for ClassicalSolver {
    fn decide(
        &mut self,
        instance: &SdpInstance<f64>,
        alpha: f64,
        delta: f64,
    ) -> Result<GuessOutcome> {
        let mut cfg = MmwConfig::new(instance, alpha, delta)?
            .with_check_interval(self.check_interval.or(Some(16)));
        if let Some(cap) = self.round_cap {
            cfg = cfg.with_round_cap(cap);
        }
        let mut oracle = ExactOracle::new(instance, alpha)?;
        let run = run_arora_kale(instance, &cfg, &mut oracle)?;
        self.rounds += run.rounds;
        Ok(match run.outcome {
            MmwOutcome::Dual(d) if !d.is_feasible() => {
                return Err(Error::RoundCap {
                    rounds: run.rounds,
                    slack: d.min_slack(),
                });
            }
            MmwOutcome::Dual(d) => GuessOutcome::Dual(d),
            MmwOutcome::PrimalWitness {
                primal_lower_bound, ..
            } => GuessOutcome::Larger { primal_lower_bound },
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SearchStep {
    pub alpha: f64,
    pub larger: bool,
    /// Dual objective, or the certified primal value after `Larger` when one was given.
    pub value: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct SearchResult {
    pub opt_estimate: f64,
    pub lo: f64,
    pub hi: f64,
    /// Best dual seen; `None` only if every guess came back `Larger` and no starting dual applies.
    pub dual: Option<DualVector<f64>>,
    pub steps: Vec<SearchStep>,
}

impl SearchResult {
    pub fn calls(&self) -> usize {
        self.steps.len()
    }
}

/// Largest number of solver calls [`binary_search_opt`] makes.
pub fn max_search_calls(primal_bound: f64, delta: f64) -> usize {
    ((primal_bound / delta).ln() / (4.0f64 / 3.0).ln())
        .ceil()
        .max(0.0) as usize
        + 1
}

/// Brackets the optimum in `[lo, hi] ⊆ [0, R]` until `hi − lo ≤ δ·max(1, lo)`.
///
/// A guess at `α` is decided at multiplicative accuracy
/// `max(guess_delta, (hi − lo)/(4α))`, so early guesses are cheap and each
/// call still cuts the bracket to at most 3/4 of its width. A dual
/// lowers `hi` to its verified objective; `Larger` raises `lo` to
/// `(1 − guess_delta)α` or to a certified primal value if larger. A dual
/// whose objective falls below `lo`, or a `Larger` above `hi`, breaks the
/// solver contract and aborts.
pub fn binary_search_opt(
    instance: &SdpInstance<f64>,
    delta: f64,
    guess_delta: f64,
    solver: &mut dyn FeasibilitySolver,
) -> Result<SearchResult> {
    if !(delta > 0.0) {
        return Err(Error::InvalidParameter("δ must be positive".into()));
    }
    let max_calls = max_search_calls(instance.primal_bound(), delta);
    binary_search_until(
        instance,
        guess_delta,
        max_calls,
        &|lo, hi| hi - lo <= delta * lo.max(1.0),
        solver,
    )
}

/// [`binary_search_opt`] with a caller-supplied stopping rule on `(lo, hi)`.
pub fn binary_search_until(
    instance: &SdpInstance<f64>,
    guess_delta: f64,
    max_calls: usize,
    done: &dyn Fn(f64, f64) -> bool,
    solver: &mut dyn FeasibilitySolver,
) -> Result<SearchResult> {
    if !(guess_delta > 0.0) {
        return Err(Error::InvalidParameter(
            "guess accuracy must be positive".into(),
        ));
    }
    let big_r = instance.primal_bound();
    let mut lo = 0.0f64;
    // y = e_1 gives I ≥ C for a normalized instance, so R is a verified upper bound
    let start = DualVector::evaluate(instance, {
        let mut y = vec![0.0; instance.m()];
        y[0] = 1.0;
        y
    })?;
    let mut hi = big_r;
    let mut dual = start.is_feasible().then_some(start);
    let mut steps = Vec::new();
    let tol = 1e-9;
    while !done(lo, hi) && steps.len() < max_calls {
        let alpha = 0.5 * (lo + hi);
        let guess_delta = guess_delta.max(((hi - lo) / (4.0 * alpha)).min(0.25));
        match solver.decide(instance, alpha, guess_delta)? {
            GuessOutcome::Dual(d) => {
                let objective = d.objective();
                if !d.is_feasible() || objective > (1.0 + guess_delta) * alpha + tol {
                    return Err(Error::ContractViolation(format!(
                        "dual at α = {alpha} has objective {objective} and slack {}",
                        d.min_slack()
                    )));
                }
                if objective < lo - tol {
                    return Err(Error::ContractViolation(format!(
                        "dual objective {objective} at α = {alpha} lies below the certified lower end {lo}"
                    )));
                }
                steps.push(SearchStep {
                    alpha,
                    larger: false,
                    value: Some(objective),
                });
                if objective < hi {
                    hi = objective.max(lo);
                    dual = Some(d);
                }
            }
            GuessOutcome::Larger { primal_lower_bound } => {
                let mut raised = (1.0 - guess_delta) * alpha;
                if let Some(v) = primal_lower_bound.filter(|v| v.is_finite()) {
                    raised = raised.max(v);
                }
                if raised > hi + tol {
                    return Err(Error::ContractViolation(format!(
                        "Larger at α = {alpha} implies optimum ≥ {raised}, above the verified dual {hi}"
                    )));
                }
                steps.push(SearchStep {
                    alpha,
                    larger: true,
                    value: primal_lower_bound,
                });
                lo = lo.max(raised.min(hi));
            }
        }
    }
    Ok(SearchResult {
        opt_estimate: 0.5 * (lo + hi),
        lo,
        hi,
        dual,
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{gen_diagonal_lp, gen_lower_bound};

    #[test]
    fn extension_bounds() {
        let inst = SdpInstance::new(
            SparseHermitian::from_real_diagonal(&[0.5, 0.0]),
            vec![
                SparseHermitian::identity(2),
                SparseHermitian::from_real_diagonal(&[1.0, -1.0]),
            ],
            vec![1.0, -1.0],
            1.0,
        )
        .unwrap();
        let rec = extend_to_positive_b(&inst, 3.0).unwrap();
        assert_eq!(rec.transformed.b(), &[3.0, 1.0, 2.0]);
        assert_eq!(rec.transformed.primal_bound(), 3.0);
        assert!(
            rec.transformed.validate().is_valid(),
            "{}",
            rec.transformed.validate()
        );
        assert!((rec.map_delta(0.3) - 0.1).abs() < 1e-15);
        assert!(extend_to_positive_b(&inst, 0.0).is_err());
    }

    #[test]
    fn map_back_zero_padding_and_rejection() {
        let inst = gen_diagonal_lp(3, 2, 5).unwrap();
        let rec = extend_to_positive_b(&inst, 1.0).unwrap();
        let good = DualVector::evaluate(&rec.transformed, vec![1.0, 0.0, 0.0]).unwrap();
        assert_eq!(rec.map_back(&good).unwrap().y(), &[1.0, 0.0]);
        let bad = DualVector::evaluate(&rec.transformed, vec![0.0, 0.0, 0.0]).unwrap();
        assert!(rec.map_back(&bad).is_err());
    }

    #[test]
    fn alpha_rescale() {
        let inst = SdpInstance::new(
            SparseHermitian::from_real_diagonal(&[0.0]),
            vec![SparseHermitian::identity(1), SparseHermitian::identity(1)],
            vec![4.0, 2.0],
            4.0,
        )
        .unwrap();
        let rec = rescale_for_alpha(&inst, 0.5).unwrap();
        assert_eq!(rec.transformed.b(), &[8.0, 4.0]);
        assert_eq!(rec.map_delta(0.1), 0.05);
        assert_eq!(
            rescale_for_alpha(&inst, 1.0).unwrap().kind,
            ReductionKind::Identity
        );
        assert!(rescale_for_alpha(&inst, 0.0).is_err());
    }

    #[test]
    fn scalar_maps() {
        assert_eq!(multiplicative_to_additive(0.1, 1.0), 0.1);
        assert_eq!(multiplicative_to_additive(0.1, 2.0), 0.05);
        let inst = SdpInstance::new(
            SparseHermitian::from_real_diagonal(&[0.0]),
            vec![SparseHermitian::identity(1), SparseHermitian::identity(1)],
            vec![2.0, 1.0],
            2.0,
        )
        .unwrap();
        assert_eq!(dual_size_bound(&inst, 3.0).unwrap(), 3.0);
    }

    #[test]
    fn search_on_lower_bound_instances() {
        let delta = 0.05;
        for (case, expected) in [(1u8, 0.5), (2, 1.0)] {
            let g = gen_lower_bound(case, 8, 8, 3, case == 1).unwrap();
            let mut solver = ClassicalSolver::default();
            let res = binary_search_opt(&g.instance, delta, delta / 4.0, &mut solver).unwrap();
            assert!(
                (res.opt_estimate - expected).abs() <= 2.0 * delta * expected,
                "{res:?}"
            );
            assert!(res.calls() <= max_search_calls(1.0, delta));
        }
    }

    #[test]
    fn search_zero_objective_collapses_low() {
        let inst = SdpInstance::new(
            SparseHermitian::zeros(3),
            vec![SparseHermitian::identity(3)],
            vec![1.0],
            1.0,
        )
        .unwrap();
        let res = binary_search_opt(&inst, 0.05, 0.0125, &mut ClassicalSolver::default()).unwrap();
        assert!(res.opt_estimate <= 0.05, "{res:?}");
    }

    #[test]
    fn crossing_is_a_contract_violation() {
        let inst = gen_lower_bound(2, 4, 2, 0, false).unwrap().instance;
        let mut overclaim = |_: &SdpInstance<f64>, _a: f64, _d: f64| -> Result<GuessOutcome> {
            Ok(GuessOutcome::Larger {
                primal_lower_bound: Some(1.5),
            })
        };
        let err = binary_search_opt(&inst, 0.05, 0.01, &mut overclaim).unwrap_err();
        assert!(matches!(err, Error::ContractViolation(_)));
        let mut bad_dual = |i: &SdpInstance<f64>, _a: f64, _d: f64| -> Result<GuessOutcome> {
            Ok(GuessOutcome::Dual(DualVector::evaluate(i, vec![0.0, 0.0])?))
        };
        assert!(matches!(
            binary_search_opt(&inst, 0.05, 0.01, &mut bad_dual),
            Err(Error::ContractViolation(_))
        ));
    }
}
