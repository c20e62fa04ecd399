//! Gibbs distributions over constraint indices and the grid search that turns
//! them into oracle answers.
//!
//! A candidate dual is `y = κN · q` where `q(i) ∝ exp(λ e_i + μ b_i)`,
//! `e_i = tr(A_i ρ)`, and `(λ, μ)` run over a one-parameter family indexed by
//! `k ∈ [1, γ]`.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::softmax;
use crate::scalar::ceil_count;

/// Distribution `q(i) ∝ exp(λ e_i + μ b_i)` over constraint indices.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstraintGibbs {
    pub weights: Vec<f64>,
    pub lambda: f64,
    pub mu: f64,
}

impl ConstraintGibbs {
    pub fn m(&self) -> usize {
        self.weights.len()
    }

    /// `Σ q(i) v_i`.
    pub fn expectation(&self, v: &[f64]) -> f64 {
        self.weights.iter().zip(v).map(|(q, x)| q * x).sum()
    }
}

pub fn constraint_gibbs(e: &[f64], b: &[f64], lambda: f64, mu: f64) -> Result<ConstraintGibbs> {
    if e.len() != b.len() || e.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "expectations ({}) and bounds ({}) must have the same nonzero length",
            e.len(),
            b.len()
        )));
    }
    if !lambda.is_finite() || !mu.is_finite() || e.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter(
            "Gibbs inputs must be finite".into(),
        ));
    }
    let logits: Vec<f64> = e
        .iter()
        .zip(b)
        .map(|(ei, bi)| lambda * ei + mu * bi)
        .collect();
    Ok(ConstraintGibbs {
        weights: softmax(&logits),
        lambda,
        mu,
    })
}

/// Sign convention of the family `k ↦ (λ_k, μ_k)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    /// `λ = −c·k`, `μ = −c·(γ − k)`: weight moves toward small `e_i` and small `b_i`.
    #[default]
    AsPrinted,
    /// `λ = +c·k`, `μ = −c·(γ − k)`: weight moves toward large `e_i` and small `b_i`,
    /// the direction the acceptance tests reward.
    Corrected,
}

/// Grid of `(k, N)` pairs searched by the oracle.
#[derive(Clone, Debug, PartialEq)]
pub struct JaynesGrid {
    pub kappa: f64,
    /// `⌈(8/κ²) ln(m) R²⌉`, at least 1.
    pub gamma: usize,
    /// `⌈α/κ⌉`, at least 1.
    pub n_max: usize,
    /// Exponent scale `c`; `κ/(4R²)` by default.
    pub coefficient: f64,
    pub orientation: Orientation,
}

impl JaynesGrid {
    pub fn new(kappa: f64, m: usize, primal_bound: f64, alpha: f64) -> Result<Self> {
        if !(kappa > 0.0) || !kappa.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "κ = {kappa} must be positive"
            )));
        }
        if m == 0 || !(primal_bound > 0.0) || !(alpha > 0.0) {
            return Err(Error::InvalidParameter(
                "grid needs m ≥ 1, R > 0 and α > 0".into(),
            ));
        }
        let r2 = primal_bound * primal_bound;
        Ok(Self {
            kappa,
            gamma: grid_gamma(kappa, m, primal_bound),
            n_max: (ceil_count(alpha / kappa) as usize).max(1),
            coefficient: kappa / (4.0 * r2),
            orientation: Orientation::AsPrinted,
        })
    }

    pub fn with_coefficient(mut self, c: f64) -> Self {
        self.coefficient = c;
        self
    }

    pub fn with_orientation(mut self, orientation: Orientation) -> Self {
        self.orientation = orientation;
        self
    }

    pub fn parameters(&self, k: usize) -> (f64, f64) {
        let c = self.coefficient;
        let lambda = match self.orientation {
            Orientation::AsPrinted => -c * k as f64,
            Orientation::Corrected => c * k as f64,
        };
        (lambda, -c * (self.gamma - k) as f64)
    }
}

/// `⌈(8/κ²) ln(m) R²⌉`, at least 1.
pub fn grid_gamma(kappa: f64, m: usize, primal_bound: f64) -> usize {
    let g = 8.0 / (kappa * kappa) * (m as f64).ln() * primal_bound * primal_bound;
    (ceil_count(g) as usize).max(1)
}

/// Member `k ∈ [1, γ]` of the family.
pub fn gibbs_k(e: &[f64], b: &[f64], k: usize, grid: &JaynesGrid) -> Result<ConstraintGibbs> {
    if k == 0 || k > grid.gamma {
        return Err(Error::IndexOutOfRange(format!(
            "k = {k} outside [1, {}]",
            grid.gamma
        )));
    }
    let (lambda, mu) = grid.parameters(k);
    constraint_gibbs(e, b, lambda, mu)
}

/// Moves `min(ν/2, q_min)` probability from the least likely outcome (last
/// among ties) to the most likely one (first among ties); `‖q̃ − q‖₁ ≤ ν`.
pub fn perturb_toward_mode(q: &[f64], nu: f64) -> Vec<f64> {
    let mut out = q.to_vec();
    if q.len() < 2 || nu <= 0.0 {
        return out;
    }
    let mut hi = 0;
    let mut lo = q.len() - 1;
    for (i, &v) in q.iter().enumerate() {
        if v > q[hi] {
            hi = i;
        }
    }
    for (i, &v) in q.iter().enumerate().rev() {
        if v < q[lo] {
            lo = i;
        }
    }
    if lo == hi {
        lo = if hi == q.len() - 1 { 0 } else { q.len() - 1 };
    }
    let moved = (0.5 * nu).min(out[lo]);
    out[lo] -= moved;
    out[hi] += moved;
    out
}

/// Inputs of one grid search.
#[derive(Clone, Debug)]
pub struct GridQuery<'a> {
    /// Estimates of `tr(A_i ρ)` for every constraint.
    pub expectations: &'a [f64],
    /// Estimate of `tr(C ρ)`.
    pub objective: f64,
    pub b: &'a [f64],
    pub alpha: f64,
    pub primal_bound: f64,
    /// Estimation and sampler accuracy.
    pub nu: f64,
    /// `k` values to scan in order; `None` scans `1..=γ`.
    pub k_values: Option<&'a [usize]>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridAcceptance {
    pub k: usize,
    pub n: usize,
    /// `‖y‖₁ = κN`.
    pub norm: f64,
    /// The sampled distribution `y / ‖y‖₁`.
    pub weights: Vec<f64>,
    /// The `M` indices that passed the tests (empty for the exact variant).
    pub samples: Vec<usize>,
    pub mean_e: f64,
    pub mean_b: f64,
    pub points_tested: usize,
}

impl GridAcceptance {
    /// `y = κN · q`.
    pub fn y(&self) -> Vec<f64> {
        self.weights.iter().map(|q| q * self.norm).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum GridOutcome {
    Accepted(GridAcceptance),
    Fail { points_tested: usize },
}

impl GridOutcome {
    pub fn accepted(&self) -> Option<&GridAcceptance> {
        match self {
            GridOutcome::Accepted(a) => Some(a),
            GridOutcome::Fail { .. } => None,
        }
    }
}

fn check_query(q: &GridQuery<'_>, grid: &JaynesGrid) -> Result<()> {
    if q.expectations.len() != q.b.len() {
        return Err(Error::DimensionMismatch {
            expected: q.b.len(),
            got: q.expectations.len(),
        });
    }
    if !(q.nu >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "ν = {} must be nonnegative",
            q.nu
        )));
    }
    if let Some(ks) = q.k_values {
        if let Some(&k) = ks.iter().find(|&&k| k == 0 || k > grid.gamma) {
            return Err(Error::IndexOutOfRange(format!(
                "k = {k} outside [1, {}]",
                grid.gamma
            )));
        }
    }
    Ok(())
}

/// Both acceptance tests at one grid point.
pub fn grid_point_passes(
    mean_e: f64,
    mean_b: f64,
    n: usize,
    q: &GridQuery<'_>,
    kappa: f64,
) -> bool {
    let kn = kappa * n as f64;
    let slack = kappa + q.nu;
    mean_e >= q.objective / kn - slack && mean_b <= q.alpha / kn + q.primal_bound * slack
}

fn scan<F>(q: &GridQuery<'_>, grid: &JaynesGrid, mut point: F) -> Result<GridOutcome>
where
    F: FnMut(usize, usize, &[f64]) -> (f64, f64, Vec<usize>),
{
    check_query(q, grid)?;
    let all: Vec<usize>;
    let ks = match q.k_values {
        Some(ks) => ks,
        None => {
            all = (1..=grid.gamma).collect();
            &all
        }
    };
    let mut tested = 0;
    for &k in ks {
        let dist = gibbs_k(q.expectations, q.b, k, grid)?;
        let weights = perturb_toward_mode(&dist.weights, q.nu);
        for n in 1..=grid.n_max {
            tested += 1;
            let (mean_e, mean_b, samples) = point(k, n, &weights);
            if grid_point_passes(mean_e, mean_b, n, q, grid.kappa) {
                return Ok(GridOutcome::Accepted(GridAcceptance {
                    k,
                    n,
                    norm: grid.kappa * n as f64,
                    weights,
                    samples,
                    mean_e,
                    mean_b,
                    points_tested: tested,
                }));
            }
        }
    }
    Ok(GridOutcome::Fail {
        points_tested: tested,
    })
}

/// Scans `k` (outer) and `N` (inner), drawing `samples` fresh indices per
/// point, and accepts the first point whose empirical means pass.
pub fn grid_oracle(
    q: &GridQuery<'_>,
    grid: &JaynesGrid,
    samples: usize,
    seed: u64,
) -> Result<GridOutcome> {
    if samples == 0 {
        return Err(Error::InvalidParameter(
            "sample count must be at least 1".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    scan(q, grid, |_, _, weights| {
        let dist = WeightedIndex::new(weights).expect("weights form a distribution");
        let draws: Vec<usize> = (0..samples).map(|_| dist.sample(&mut rng)).collect();
        let mean_e = draws.iter().map(|&i| q.expectations[i]).sum::<f64>() / samples as f64;
        let mean_b = draws.iter().map(|&i| q.b[i]).sum::<f64>() / samples as f64;
        (mean_e, mean_b, draws)
    })
}

/// [`grid_oracle`] with exact expectations in place of empirical means.
pub fn exact_grid_oracle(q: &GridQuery<'_>, grid: &JaynesGrid) -> Result<GridOutcome> {
    scan(q, grid, |_, _, weights| {
        let mean_e = weights.iter().zip(q.expectations).map(|(w, e)| w * e).sum();
        let mean_b = weights.iter().zip(q.b).map(|(w, b)| w * b).sum();
        (mean_e, mean_b, Vec::new())
    })
}

/// `(Σ(π − π̃)e, Σ(π − π̃)b)` for the family member `k`.
pub fn witness_gaps(
    pi: &[f64],
    e: &[f64],
    b: &[f64],
    k: usize,
    grid: &JaynesGrid,
) -> Result<(f64, f64)> {
    let tilde = gibbs_k(e, b, k, grid)?;
    let de = pi
        .iter()
        .zip(&tilde.weights)
        .zip(e)
        .map(|((p, t), x)| (p - t) * x)
        .sum();
    let db = pi
        .iter()
        .zip(&tilde.weights)
        .zip(b)
        .map(|((p, t), x)| (p - t) * x)
        .sum();
    Ok((de, db))
}

/// How a witness's moment gaps are judged against `κ`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum WitnessCriterion {
    /// `max(|Σ(π−π̃)e|, |Σ(π−π̃)b|) ≤ κ`.
    #[default]
    Absolute,
    /// `Σ(π−π̃)e ≤ κ` and `Σ(π̃−π)b ≤ κ`: the one-sided pair the oracle's correctness argument consumes.
    OracleSided,
}

/// First `k ∈ [1, γ]` whose family member matches `π` on `e` and `b` within `κ`.
pub fn jaynes_witness(
    pi: &[f64],
    e: &[f64],
    b: &[f64],
    grid: &JaynesGrid,
    criterion: WitnessCriterion,
) -> Result<Option<usize>> {
    if pi.len() != e.len() {
        return Err(Error::DimensionMismatch {
            expected: e.len(),
            got: pi.len(),
        });
    }
    for k in 1..=grid.gamma {
        let (de, db) = witness_gaps(pi, e, b, k, grid)?;
        let ok = match criterion {
            WitnessCriterion::Absolute => de.abs().max(db.abs()) <= grid.kappa,
            WitnessCriterion::OracleSided => de <= grid.kappa && -db <= grid.kappa,
        };
        if ok {
            return Ok(Some(k));
        }
    }
    Ok(None)
}
