//! Classical simulation of the sampling-based SDP algorithm.
//!
//! Quantum subroutines are replaced by contracts: a Gibbs sampler returns
//! draws from a distribution within `ν` of the exact one, expectation
//! estimates carry bounded additive noise, and every call is charged to a
//! [`CostLedger`] under the query-cost model.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jaynes::{grid_gamma, perturb_toward_mode, JaynesGrid, Orientation};
use crate::linalg::{
    eigh, gibbs_state, operator_norm, softmax, trace_distance, trace_inner, DenseHermitian,
    DensityMatrix, SparseHermitian,
};
use crate::mmw::payoff_matrix;
use crate::model::{verify_dual, DualCertificate, DualVector, EntryOracle, SdpInstance};
use crate::scalar::ceil_count;

pub const LEDGER_SCHEMA: &str = "gibbs-sdp/cost-ledger/v1";

/// Refuse runs whose sampling work exceeds this many index draws.
pub const DEFAULT_WORK_LIMIT: f64 = 5e9;

/// `δ / (28R²)`.
pub fn epsilon(delta: f64, primal_bound: f64) -> f64 {
    delta / (28.0 * primal_bound * primal_bound)
}

/// `−ln(1 − ε)`.
pub fn epsilon_prime(eps: f64) -> f64 {
    -(1.0 - eps).ln()
}

/// `500 R³ ln(n) / δ²`.
pub fn rounds_formula(n: usize, primal_bound: f64, delta: f64) -> f64 {
    500.0 * primal_bound.powi(3) * (n as f64).ln() / (delta * delta)
}

/// `80 ln^{1+ξ}(8R²nm/ε) / ε²`.
pub fn sample_count_m(n: usize, m: usize, primal_bound: f64, eps: f64, xi: f64) -> f64 {
    let arg = 8.0 * primal_bound * primal_bound * (n * m) as f64 / eps;
    80.0 * arg.ln().powf(1.0 + xi) / (eps * eps)
}

/// `80 ln^{1+ξ}(nm) / ε²`.
pub fn sample_count_l(n: usize, m: usize, eps: f64, xi: f64) -> f64 {
    80.0 * ((n * m) as f64).ln().powf(1.0 + xi) / (eps * eps)
}

/// `10⁶ R⁶ ln^{2+ξ}(nm) / δ⁴`.
pub fn sample_count_q(n: usize, m: usize, primal_bound: f64, delta: f64, xi: f64) -> f64 {
    1e6 * primal_bound.powi(6) * ((n * m) as f64).ln().powf(2.0 + xi) / delta.powi(4)
}

/// `δ / (56R²)`.
pub fn h_precision(delta: f64, primal_bound: f64) -> f64 {
    delta / (56.0 * primal_bound * primal_bound)
}

/// `exp(−ln^ξ(nm))`.
pub fn failure_probability(n: usize, m: usize, xi: f64) -> f64 {
    (-((n * m) as f64).ln().powf(xi)).exp()
}

/// Query cost of one Gibbs-state preparation: `⌈√dim · β · s / ν⌉`.
pub type CostModel = fn(usize, usize, f64, f64) -> u128;

pub fn sampler_cost(dim: usize, sparsity: usize, beta: f64, nu: f64) -> u128 {
    ceil_count((dim as f64).sqrt() * beta * sparsity as f64 / nu)
}

/// Cost of one expectation estimate: `s · accuracy⁻² · ⌈ln⁴(ns / (p_e · accuracy))⌉`.
pub fn measurement_cost(n: usize, s: usize, accuracy: f64, p_e: f64) -> u128 {
    let polylog = ceil_count(((n * s) as f64 / (p_e * accuracy)).ln().powi(4)) as f64;
    ceil_count(s as f64 / (accuracy * accuracy) * polylog)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    /// Every count from its closed form.
    Paper,
    /// Desk-scale counts from [`PracticalScales`].
    #[default]
    Practical,
}

impl Profile {
    pub fn name(self) -> &'static str {
        match self {
            Profile::Paper => "paper",
            Profile::Practical => "practical",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "paper" => Some(Profile::Paper),
            "practical" => Some(Profile::Practical),
            _ => None,
        }
    }
}

/// Overrides used by [`Profile::Practical`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PracticalScales {
    /// Round cap; the run uses `min(T, rounds)`.
    pub rounds: usize,
    pub m_samples: usize,
    pub l_samples: usize,
    pub q_samples: usize,
    /// Number of evenly spaced `k` values scanned out of `[1, γ]`.
    pub k_grid: usize,
    /// Draw fresh samples for every `N` instead of once per `k`.
    pub resample_per_n: bool,
}

impl Default for PracticalScales {
    fn default() -> Self {
        Self {
            rounds: 200,
            m_samples: 200,
            l_samples: 50,
            q_samples: 400,
            k_grid: 32,
            resample_per_n: false,
        }
    }
}

/// Which passing grid point a round keeps.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridSelection {
    /// Stop at the first passing `(k, N)` in scan order.
    #[default]
    First,
    /// Scan the whole grid and keep the last passing `(k, N)`.
    Last,
}

/// Derived parameters of one run at guess `α`.
#[derive(Clone, Debug)]
pub struct QsimConfig {
    pub n: usize,
    pub m: usize,
    pub s: usize,
    pub delta: f64,
    pub xi: f64,
    pub alpha: f64,
    pub primal_bound: f64,
    pub epsilon: f64,
    pub epsilon_prime: f64,
    /// Closed-form values before any profile override.
    pub rounds_formula: f64,
    pub gamma: usize,
    pub m_formula: f64,
    pub l_formula: f64,
    pub q_formula: f64,
    pub h_precision: f64,
    pub failure_probability: f64,
    pub profile: Profile,
    /// Counts the run executes.
    pub rounds: usize,
    pub m_samples: usize,
    pub l_samples: usize,
    pub q_samples: usize,
    pub n_max: usize,
    pub k_values: Vec<usize>,
    pub resample_per_n: bool,
    /// Exponent scale of the constraint Hamiltonian, `ε/(8R²)` by default.
    pub coefficient: f64,
    pub orientation: Orientation,
    pub selection: GridSelection,
    pub faults: bool,
    /// Track the exact-payoff state and report its distance to the simulated one.
    pub instrument: bool,
    pub cost_model: CostModel,
    pub work_limit: f64,
}

fn to_count(x: f64, what: &str) -> Result<usize> {
    let c = ceil_count(x);
    usize::try_from(c)
        .ok()
        .filter(|&c| c >= 1)
        .ok_or_else(|| Error::InvalidParameter(format!("{what} = {x} is not a usable count")))
}

/// `count` evenly spaced integers in `[1, gamma]`, or all of them when `gamma ≤ count`.
pub fn spaced_k_values(gamma: usize, count: usize) -> Vec<usize> {
    if count == 0 || gamma <= count {
        return (1..=gamma).collect();
    }
    if count == 1 {
        return vec![gamma];
    }
    let mut out: Vec<usize> = (0..count)
        .map(|j| 1 + ((j * (gamma - 1)) as f64 / (count - 1) as f64).round() as usize)
        .collect();
    out.dedup();
    out
}

impl QsimConfig {
    pub fn new(
        n: usize,
        m: usize,
        s: usize,
        primal_bound: f64,
        alpha: f64,
        delta: f64,
        xi: f64,
        profile: Profile,
    ) -> Result<Self> {
        Self::with_scales(
            n,
            m,
            s,
            primal_bound,
            alpha,
            delta,
            xi,
            profile,
            &PracticalScales::default(),
        )
    }

    #[allow(clippy::too_many_arguments)]
    pub fn with_scales(
        n: usize,
        m: usize,
        s: usize,
        primal_bound: f64,
        alpha: f64,
        delta: f64,
        xi: f64,
        profile: Profile,
        scales: &PracticalScales,
    ) -> Result<Self> {
        if n < 2 || m < 1 || s < 1 {
            return Err(Error::InvalidParameter(format!(
                "need n ≥ 2, m ≥ 1, s ≥ 1 (got {n}, {m}, {s})"
            )));
        }
        if !(delta > 0.0 && delta < 1.0) || !(xi > 0.0) || !(primal_bound > 0.0) || !(alpha > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "need 0 < δ < 1, ξ > 0, R > 0, α > 0 (got δ = {delta}, ξ = {xi}, R = {primal_bound}, α = {alpha})"
            )));
        }
        let eps = epsilon(delta, primal_bound);
        let rounds_f = rounds_formula(n, primal_bound, delta);
        let gamma = grid_gamma(eps, m, primal_bound);
        let m_f = sample_count_m(n, m, primal_bound, eps, xi);
        let l_f = sample_count_l(n, m, eps, xi);
        let q_f = sample_count_q(n, m, primal_bound, delta, xi);
        let n_max = to_count(alpha / eps, "⌈α/ε⌉")?;
        let rounds_exact = to_count(rounds_f, "T")?;
        let (rounds, m_samples, l_samples, q_samples, k_values, resample_per_n) = match profile {
            Profile::Paper => (
                rounds_exact,
                to_count(m_f, "M")?,
                to_count(l_f, "L")?,
                to_count(q_f, "Q")?,
                Vec::new(),
                true,
            ),
            Profile::Practical => (
                rounds_exact.min(scales.rounds.max(1)),
                scales.m_samples.max(1),
                scales.l_samples.max(1),
                scales.q_samples.max(1),
                spaced_k_values(gamma, scales.k_grid),
                scales.resample_per_n,
            ),
        };
        Ok(Self {
            n,
            m,
            s,
            delta,
            xi,
            alpha,
            primal_bound,
            epsilon: eps,
            epsilon_prime: epsilon_prime(eps),
            rounds_formula: rounds_f,
            gamma,
            m_formula: m_f,
            l_formula: l_f,
            q_formula: q_f,
            h_precision: h_precision(delta, primal_bound),
            failure_probability: failure_probability(n, m, xi),
            profile,
            rounds,
            m_samples,
            l_samples,
            q_samples,
            n_max,
            k_values,
            resample_per_n,
            coefficient: eps / (8.0 * primal_bound * primal_bound),
            orientation: Orientation::Corrected,
            selection: GridSelection::First,
            faults: false,
            instrument: false,
            cost_model: sampler_cost,
            work_limit: DEFAULT_WORK_LIMIT,
        })
    }

    pub fn for_instance(
        instance: &SdpInstance<f64>,
        alpha: f64,
        delta: f64,
        xi: f64,
        profile: Profile,
        scales: &PracticalScales,
    ) -> Result<Self> {
        Self::with_scales(
            instance.n(),
            instance.m(),
            instance.s(),
            instance.primal_bound(),
            alpha,
            delta,
            xi,
            profile,
            scales,
        )
    }

    pub fn with_orientation(mut self, orientation: Orientation) -> Self {
        self.orientation = orientation;
        self
    }

    pub fn with_selection(mut self, selection: GridSelection) -> Self {
        self.selection = selection;
        self
    }

    pub fn with_coefficient(mut self, c: f64) -> Self {
        self.coefficient = c;
        self
    }

    pub fn with_faults(mut self, faults: bool) -> Self {
        self.faults = faults;
        self
    }

    pub fn with_instrument(mut self, instrument: bool) -> Self {
        self.instrument = instrument;
        self
    }

    pub fn with_cost_model(mut self, model: CostModel) -> Self {
        self.cost_model = model;
        self
    }

    pub fn with_work_limit(mut self, limit: f64) -> Self {
        self.work_limit = limit;
        self
    }

    /// The `k` values scanned each round, in order.
    pub fn scanned_k(&self) -> Vec<usize> {
        if self.k_values.is_empty() {
            (1..=self.gamma).collect()
        } else {
            self.k_values.clone()
        }
    }

    fn k_count(&self) -> usize {
        if self.k_values.is_empty() {
            self.gamma
        } else {
            self.k_values.len()
        }
    }

    /// Worst-case number of index draws over all rounds.
    pub fn worst_case_draws(&self) -> f64 {
        let per_k = if self.resample_per_n {
            self.n_max as f64
        } else {
            1.0
        };
        self.rounds as f64
            * (self.k_count() as f64 * per_k * self.m_samples as f64 + self.q_samples as f64)
    }

    pub fn grid(&self) -> JaynesGrid {
        JaynesGrid {
            kappa: self.epsilon,
            gamma: self.gamma,
            n_max: self.n_max,
            coefficient: self.coefficient,
            orientation: self.orientation,
        }
    }

    /// Inverse temperature charged for constraint-distribution samplers.
    pub fn hbar_beta(&self) -> f64 {
        1.0 / self.epsilon
    }

    /// Inverse temperature charged for state samplers, `ε′T`.
    pub fn state_beta(&self) -> f64 {
        self.epsilon_prime * self.rounds as f64
    }

    /// Sampler accuracy, `ε/4`.
    pub fn sampler_noise(&self) -> f64 {
        self.epsilon / 4.0
    }
}

/// `C_t := (10 ln(m)/ε²)(γα/ε · M + Q) G_h̄ + (2γα/ε) M L`, rounded up.
pub fn cost_ct(cfg: &QsimConfig, g_hbar_t: u128) -> u128 {
    let eps = cfg.epsilon;
    let ga = cfg.gamma as f64 * cfg.alpha / eps;
    let (mm, l, q) = (
        cfg.m_samples as f64,
        cfg.l_samples as f64,
        cfg.q_samples as f64,
    );
    let prep = 10.0 * (cfg.m as f64).ln() / (eps * eps) * (ga * mm + q);
    ceil_count(prep * g_hbar_t as f64 + 2.0 * ga * mm * l)
}

/// Diagonal constraint Hamiltonian with entries rounded to a fixed precision.
#[derive(Clone, Debug, PartialEq)]
pub struct HbarHamiltonian {
    pub raw: Vec<f64>,
    pub rounded: Vec<f64>,
    pub precision: f64,
    pub corrupted: usize,
}

impl HbarHamiltonian {
    pub fn m(&self) -> usize {
        self.raw.len()
    }

    /// Gibbs distribution of the rounded entries.
    pub fn gibbs(&self) -> Vec<f64> {
        softmax(&self.rounded)
    }
}

/// Rounds half away from zero to a multiple of `precision`.
pub fn round_to_precision(x: f64, precision: f64) -> f64 {
    (x / precision).round() * precision
}

/// `r_i = λ e_i + μ b_i` rounded to `precision`; with `faults`, each entry is
/// moved to an adjacent bucket with probability `p_e`.
pub fn build_hbar(
    estimates: &[f64],
    b: &[f64],
    lambda: f64,
    mu: f64,
    precision: f64,
    faults: Option<(f64, &mut ChaCha8Rng)>,
) -> Result<HbarHamiltonian> {
    if estimates.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: b.len(),
            got: estimates.len(),
        });
    }
    if !(precision > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "precision {precision} must be positive"
        )));
    }
    let raw: Vec<f64> = estimates
        .iter()
        .zip(b)
        .map(|(e, bi)| lambda * e + mu * bi)
        .collect();
    let mut rounded: Vec<f64> = raw
        .iter()
        .map(|&r| round_to_precision(r, precision))
        .collect();
    let mut corrupted = 0;
    if let Some((p_e, rng)) = faults {
        for r in &mut rounded {
            if rng.random::<f64>() < p_e {
                *r += if rng.random::<bool>() {
                    precision
                } else {
                    -precision
                };
                corrupted += 1;
            }
        }
    }
    Ok(HbarHamiltonian {
        raw,
        rounded,
        precision,
        corrupted,
    })
}

/// Sampler contract: draws come from a distribution within `nu` (in `‖·‖₁`)
/// of the exact Gibbs distribution.
#[derive(Clone, Copy, Debug)]
pub struct GibbsSamplerSim {
    pub nu: f64,
    pub cost_model: CostModel,
}

/// Draws and their charged cost.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleBatch {
    pub samples: Vec<usize>,
    /// The distribution the draws came from.
    pub distribution: Vec<f64>,
    pub preparations: u128,
    pub cost_per_preparation: u128,
}

impl GibbsSamplerSim {
    pub fn new(nu: f64) -> Self {
        Self {
            nu,
            cost_model: sampler_cost,
        }
    }

    /// The perturbed distribution for diagonal Hamiltonian `h`.
    pub fn distribution(&self, h: &[f64]) -> Vec<f64> {
        let exact = softmax(h);
        let out = perturb_toward_mode(&exact, self.nu);
        debug_assert!(
            out.iter()
                .zip(&exact)
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>()
                <= self.nu + 1e-12
        );
        out
    }

    /// `count` draws from the perturbed Gibbs distribution of `h`; one
    /// preparation is charged per draw.
    pub fn sample(
        &self,
        h: &[f64],
        beta: f64,
        count: usize,
        rng: &mut ChaCha8Rng,
    ) -> Result<SampleBatch> {
        let distribution = self.distribution(h);
        let samples = draw(&distribution, count, rng)?;
        let cost_per_preparation = (self.cost_model)(h.len(), 1, beta, self.nu);
        Ok(SampleBatch {
            samples,
            distribution,
            preparations: count as u128,
            cost_per_preparation,
        })
    }

    /// Gibbs state of `h` with its eigenvalue weights perturbed by `nu`.
    pub fn state(&self, h: &DenseHermitian<f64>) -> Result<DensityMatrix<f64>> {
        let eig = eigh(h)?;
        let weights = perturb_toward_mode(&softmax(eig.values()), self.nu);
        DensityMatrix::from_eigen_weights(&eig, &weights)
    }
}

/// Diagonal-Hamiltonian draws, the free-function form of [`GibbsSamplerSim::sample`].
pub fn simulated_gibbs_sample(h: &[f64], nu: f64, count: usize, seed: u64) -> Result<SampleBatch> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    GibbsSamplerSim::new(nu).sample(h, 1.0, count, &mut rng)
}

fn draw(distribution: &[f64], count: usize, rng: &mut ChaCha8Rng) -> Result<Vec<usize>> {
    let dist = WeightedIndex::new(distribution)
        .map_err(|e| Error::InvalidParameter(format!("sampling distribution rejected: {e}")))?;
    Ok((0..count).map(|_| dist.sample(rng)).collect())
}

/// An expectation estimate and its charged cost.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub cost: u128,
    pub faulted: bool,
}

fn noisy(exact: f64, accuracy: f64, p_e: f64, faults: bool, rng: &mut ChaCha8Rng) -> (f64, bool) {
    if faults && rng.random::<f64>() < p_e {
        return (rng.random_range(-1.0..=1.0), true);
    }
    (exact + rng.random_range(-accuracy..=accuracy), false)
}

/// `tr(Aρ) + u` with `|u| ≤ accuracy`; with `faults`, an arbitrary value in
/// `[−1, 1]` with probability `p_e`.
pub fn estimate_expectation(
    a: &SparseHermitian<f64>,
    rho: &DensityMatrix<f64>,
    accuracy: f64,
    p_e: f64,
    faults: bool,
    rng: &mut ChaCha8Rng,
) -> Result<Estimate> {
    let exact = trace_inner(a, rho)?;
    let (value, faulted) = noisy(exact, accuracy, p_e, faults, rng);
    Ok(Estimate {
        value,
        cost: measurement_cost(a.dim(), a.row_sparsity().max(1), accuracy, p_e),
        faulted,
    })
}

/// `(scale/Q · Σ_j A_{i_j} − C + 2αI) / 4α`, read through the entry oracle.
pub fn sparsify_payoff(
    oracle: &EntryOracle<'_, f64>,
    samples: &[usize],
    scale: f64,
    alpha: f64,
) -> Result<DenseHermitian<f64>> {
    if samples.is_empty() {
        return Err(Error::InvalidParameter(
            "payoff sparsification needs at least one sample".into(),
        ));
    }
    let inst = oracle.instance();
    let mut counts = vec![0usize; inst.m()];
    for &i in samples {
        *counts.get_mut(i).ok_or_else(|| {
            Error::IndexOutOfRange(format!("sampled constraint {i} with m = {}", inst.m()))
        })? += 1;
    }
    let mut acc = DenseHermitian::zeros(inst.n());
    let q = samples.len() as f64;
    for (i, &c) in counts.iter().enumerate() {
        if c > 0 {
            oracle.accumulate(i, scale * c as f64 / q, &mut acc)?;
        }
    }
    oracle.accumulate(inst.m(), -1.0, &mut acc)?;
    acc.add_identity(2.0 * alpha);
    Ok(acc.scaled(1.0 / (4.0 * alpha)))
}

/// `‖M − M̂‖`.
pub fn sparsification_deviation(
    sampled: &DenseHermitian<f64>,
    exact: &DenseHermitian<f64>,
) -> Result<f64> {
    let mut diff = sampled.clone();
    diff.add_scaled(exact, -1.0)?;
    operator_norm(&diff)
}

/// Largest number of nonzero entries in a row.
pub fn dense_row_sparsity(h: &DenseHermitian<f64>) -> usize {
    let n = h.dim();
    (0..n)
        .map(|k| (0..n).filter(|&l| h.get(k, l).norm_sqr() > 0.0).count())
        .max()
        .unwrap_or(0)
}

/// Per-round ledger entry.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundCost {
    pub t: usize,
    pub k_t: Option<usize>,
    #[serde(rename = "N_t")]
    pub n_t: Option<usize>,
    #[serde(rename = "C_t")]
    pub c_t: u128,
    #[serde(rename = "G_hbar_t")]
    pub g_hbar_t: u128,
    #[serde(rename = "G_M_t")]
    pub g_m_t: u128,
    pub measurement_cost_t: u128,
    pub constraint_preparations_t: u128,
    pub entry_reads_t: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerTotals {
    pub rounds: usize,
    #[serde(rename = "C_total")]
    pub c_total: u128,
    pub measurement_total: u128,
    /// `Σ C_t + Σ measurement_cost_t`.
    pub total_queries: u128,
    #[serde(rename = "G_hbar")]
    pub g_hbar: u128,
    #[serde(rename = "G_M")]
    pub g_m: u128,
    #[serde(rename = "T_meas")]
    pub t_meas: u128,
    pub constraint_preparations: u128,
    pub entry_reads: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostLedger {
    pub schema: String,
    pub rounds: Vec<RoundCost>,
    pub totals: LedgerTotals,
}

impl Default for CostLedger {
    fn default() -> Self {
        Self {
            schema: LEDGER_SCHEMA.to_string(),
            rounds: Vec::new(),
            totals: LedgerTotals::default(),
        }
    }
}

impl CostLedger {
    pub fn push(&mut self, round: RoundCost, t_meas: u128) {
        let tot = &mut self.totals;
        tot.rounds += 1;
        tot.c_total += round.c_t;
        tot.measurement_total += round.measurement_cost_t;
        tot.total_queries = tot.c_total + tot.measurement_total;
        tot.g_hbar = tot.g_hbar.max(round.g_hbar_t);
        tot.g_m = tot.g_m.max(round.g_m_t);
        tot.t_meas = tot.t_meas.max(t_meas);
        tot.constraint_preparations += round.constraint_preparations_t;
        tot.entry_reads += round.entry_reads_t;
        self.rounds.push(round);
    }

    /// Recomputes the totals from the rounds and compares.
    pub fn is_consistent(&self) -> bool {
        let r = &self.rounds;
        let c: u128 = r.iter().map(|x| x.c_t).sum();
        let meas: u128 = r.iter().map(|x| x.measurement_cost_t).sum();
        let t = &self.totals;
        t.rounds == r.len()
            && t.c_total == c
            && t.measurement_total == meas
            && t.total_queries == c + meas
            && t.g_hbar == r.iter().map(|x| x.g_hbar_t).max().unwrap_or(0)
            && t.g_m == r.iter().map(|x| x.g_m_t).max().unwrap_or(0)
            && t.entry_reads == r.iter().map(|x| x.entry_reads_t).sum::<u64>()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Entry-oracle reads split by phase; the parts sum to the oracle's counter.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReadCounters {
    pub expectation_reads: u64,
    pub payoff_reads: u64,
}

impl ReadCounters {
    pub fn total(&self) -> u64 {
        self.expectation_reads + self.payoff_reads
    }
}

#[derive(Clone, Debug)]
pub enum QsimOutcome {
    /// `ȳ = norm · weights`, with the certificate recomputed from `ȳ`.
    Dual {
        norm: f64,
        weights: Vec<f64>,
        dual: DualVector<f64>,
        certificate: DualCertificate,
    },
    /// No grid point passed at `round`.
    Larger { round: usize },
}

impl QsimOutcome {
    pub fn dual(&self) -> Option<&DualVector<f64>> {
        match self {
            QsimOutcome::Dual { dual, .. } => Some(dual),
            QsimOutcome::Larger { .. } => None,
        }
    }

    /// A draw from `ȳ / ‖ȳ‖₁`.
    pub fn sample(&self, rng: &mut ChaCha8Rng) -> Option<usize> {
        match self {
            QsimOutcome::Dual { weights, .. } => draw(weights, 1, rng).ok().map(|v| v[0]),
            QsimOutcome::Larger { .. } => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct QsimRun {
    pub outcome: QsimOutcome,
    pub ledger: CostLedger,
    pub reads: ReadCounters,
    pub rounds_run: usize,
    pub max_sparsification_deviation: f64,
    /// `max_t ‖ρ^(t) − ρ̂^(t)‖₁` when instrumented.
    pub max_state_deviation: Option<f64>,
    pub faults_injected: usize,
}

impl QsimRun {
    /// A dual whose recomputed certificate failed.
    pub fn flagged(&self) -> bool {
        matches!(&self.outcome, QsimOutcome::Dual { certificate, .. } if !certificate.feasible)
    }
}

struct Acceptance {
    k: usize,
    n: usize,
    distribution: Vec<f64>,
}

/// Runs the sampling algorithm at guess `cfg.alpha`.
pub fn run_quantum_sim(
    instance: &SdpInstance<f64>,
    cfg: &QsimConfig,
    seed: u64,
) -> Result<QsimRun> {
    let (n, m) = (instance.n(), instance.m());
    if cfg.n != n || cfg.m != m {
        return Err(Error::InvalidParameter(format!(
            "configuration built for n = {}, m = {} but instance has n = {n}, m = {m}",
            cfg.n, cfg.m
        )));
    }
    if cfg.alpha < 1.0 {
        return Err(Error::Precondition(format!(
            "α = {} < 1; rescale the bounds first",
            cfg.alpha
        )));
    }
    if instance.min_b() < 1.0 {
        return Err(Error::Precondition(format!(
            "min b = {} < 1; extend the instance to positive bounds first",
            instance.min_b()
        )));
    }
    let draws = cfg.worst_case_draws();
    if draws > cfg.work_limit {
        return Err(Error::InvalidParameter(format!(
            "{} profile needs up to {draws:.3e} sample draws, above the limit {:.3e}",
            cfg.profile.name(),
            cfg.work_limit
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let oracle = EntryOracle::new(instance);
    let grid = cfg.grid();
    let ks = cfg.scanned_k();
    let eps = cfg.epsilon;
    let est_acc = eps / 2.0;
    let p_e = cfg.failure_probability;
    let t_meas = measurement_cost(n, instance.s(), est_acc, p_e);
    let noise = cfg.sampler_noise();
    let hbar_sampler = GibbsSamplerSim {
        nu: noise,
        cost_model: cfg.cost_model,
    };
    let state_sampler = GibbsSamplerSim {
        nu: noise,
        cost_model: cfg.cost_model,
    };
    let g_hbar_t = (cfg.cost_model)(m, 1, cfg.hbar_beta(), noise);
    let sparsify_allowance = 1.0 / (4.0 * cfg.rounds as f64) + 1e-9;

    let mut rho = DensityMatrix::maximally_mixed(n);
    let mut payoff_sum = DenseHermitian::zeros(n);
    let mut exact_sum = DenseHermitian::zeros(n);
    let mut y_sum = vec![0.0; m];
    let mut ledger = CostLedger::default();
    let mut reads = ReadCounters::default();
    let mut max_sparse_dev: f64 = 0.0;
    let mut max_state_dev: Option<f64> = None;
    let mut faults_injected = 0;

    for t in 1..=cfg.rounds {
        let reads_before = oracle.queries();
        let exact_e = (0..m)
            .map(|i| oracle.trace_with(i, &rho))
            .collect::<Result<Vec<_>>>()?;
        let exact_f = oracle.trace_with(m, &rho)?;
        reads.expectation_reads += oracle.queries() - reads_before;

        let hbar_estimates: Vec<f64> = exact_e
            .iter()
            .map(|&e| {
                let (v, f) = noisy(e, cfg.h_precision, p_e, cfg.faults, &mut rng);
                faults_injected += f as usize;
                v
            })
            .collect();

        let mut preparations: u128 = 0;
        let mut measurement: u128 = 0;
        let mut accepted: Option<Acceptance> = None;
        'scan: for &k in &ks {
            let (lambda, mu) = grid.parameters(k);
            let faults = cfg.faults.then_some((p_e, &mut rng));
            let hbar = build_hbar(
                &hbar_estimates,
                instance.b(),
                lambda,
                mu,
                cfg.h_precision,
                faults,
            )?;
            faults_injected += hbar.corrupted;
            let distribution = hbar_sampler.distribution(&hbar.rounded);
            let mut means: Option<(f64, f64, f64)> = None;
            for big_n in 1..=cfg.n_max {
                if means.is_none() || cfg.resample_per_n {
                    let samples = draw(&distribution, cfg.m_samples, &mut rng)?;
                    preparations += cfg.m_samples as u128;
                    measurement += (cfg.m_samples as u128 + 1) * t_meas;
                    let mut sum_e = 0.0;
                    let mut sum_b = 0.0;
                    for &i in &samples {
                        let (v, f) = noisy(exact_e[i], est_acc, p_e, cfg.faults, &mut rng);
                        faults_injected += f as usize;
                        sum_e += v;
                        sum_b += instance.b()[i];
                    }
                    let (f_est, f_fault) = noisy(exact_f, est_acc, p_e, cfg.faults, &mut rng);
                    faults_injected += f_fault as usize;
                    let mm = cfg.m_samples as f64;
                    means = Some((sum_e / mm, sum_b / mm, f_est));
                }
                let (mean_e, mean_b, f) = means.expect("means drawn above");
                let en = eps * big_n as f64;
                if mean_e >= f / en - eps && mean_b <= cfg.alpha / en + cfg.primal_bound * eps {
                    accepted = Some(Acceptance {
                        k,
                        n: big_n,
                        distribution: distribution.clone(),
                    });
                    if cfg.selection == GridSelection::First {
                        break 'scan;
                    }
                }
            }
        }

        let Some(acc) = accepted else {
            let round_reads = oracle.queries() - reads_before;
            ledger.push(
                RoundCost {
                    t,
                    k_t: None,
                    n_t: None,
                    c_t: 0,
                    g_hbar_t,
                    g_m_t: 0,
                    measurement_cost_t: measurement,
                    constraint_preparations_t: preparations,
                    entry_reads_t: round_reads,
                },
                t_meas,
            );
            return Ok(QsimRun {
                outcome: QsimOutcome::Larger { round: t },
                ledger,
                reads,
                rounds_run: t,
                max_sparsification_deviation: max_sparse_dev,
                max_state_deviation: max_state_dev,
                faults_injected,
            });
        };

        let scale = eps * acc.n as f64;
        let payoff_samples = draw(&acc.distribution, cfg.q_samples, &mut rng)?;
        preparations += cfg.q_samples as u128 + 1;
        let before_payoff = oracle.queries();
        let sampled = sparsify_payoff(&oracle, &payoff_samples, scale, cfg.alpha)?;
        reads.payoff_reads += oracle.queries() - before_payoff;

        let y_t: Vec<f64> = acc.distribution.iter().map(|q| q * scale).collect();
        let exact = payoff_matrix(instance, &y_t, 2.0 * cfg.alpha)?;
        let dev = sparsification_deviation(&sampled, &exact)?;
        max_sparse_dev = max_sparse_dev.max(dev);
        if dev > sparsify_allowance {
            return Err(Error::Sparsification {
                deviation: dev,
                allowance: sparsify_allowance,
            });
        }
        for (s, y) in y_sum.iter_mut().zip(&y_t) {
            *s += y;
        }

        payoff_sum.add_scaled(&sampled, 1.0)?;
        rho = state_sampler.state(&payoff_sum.scaled(-cfg.epsilon_prime))?;
        let g_m_t = (cfg.cost_model)(
            n,
            dense_row_sparsity(&payoff_sum).max(1),
            cfg.state_beta(),
            noise,
        );
        if cfg.instrument {
            exact_sum.add_scaled(&exact, 1.0)?;
            let rho_hat = gibbs_state(&exact_sum.scaled(-cfg.epsilon_prime))?;
            let d = trace_distance(&rho, &rho_hat)?;
            max_state_dev = Some(max_state_dev.map_or(d, |x: f64| x.max(d)));
        }

        ledger.push(
            RoundCost {
                t,
                k_t: Some(acc.k),
                n_t: Some(acc.n),
                c_t: cost_ct(cfg, g_hbar_t),
                g_hbar_t,
                g_m_t,
                measurement_cost_t: measurement,
                constraint_preparations_t: preparations,
                entry_reads_t: oracle.queries() - reads_before,
            },
            t_meas,
        );
    }

    let shift = cfg.delta * cfg.alpha / (2.0 * cfg.primal_bound);
    let rounds = cfg.rounds as f64;
    let mut y_bar: Vec<f64> = y_sum.iter().map(|s| s / rounds).collect();
    y_bar[0] += shift;
    let norm: f64 = y_bar.iter().sum();
    let weights: Vec<f64> = y_bar.iter().map(|y| y / norm).collect();
    let dual = DualVector::evaluate(instance, y_bar)?;
    let certificate = verify_dual(instance, &dual, cfg.alpha, cfg.delta)?;
    if !certificate.feasible {
        log::warn!(
            "sampled dual fails verification: min slack {:.3e}, objective {:.6} vs limit {:.6}",
            certificate.min_slack,
            certificate.objective,
            certificate.objective_limit
        );
    }
    Ok(QsimRun {
        outcome: QsimOutcome::Dual {
            norm,
            weights,
            dual,
            certificate,
        },
        ledger,
        reads,
        rounds_run: cfg.rounds,
        max_sparsification_deviation: max_sparse_dev,
        max_state_deviation: max_state_dev,
        faults_injected,
    })
}

/// Feasibility solver running the sampling algorithm at each guess.
///
/// Guesses below 1 or bounds below 1 are handled by dividing every bound by
/// `min(α, min b)`; duals carry over unchanged. Bounds that are not positive
/// need the extension reduction first and are rejected here.
#[derive(Clone, Debug)]
pub struct QsimSolver {
    pub xi: f64,
    pub profile: Profile,
    pub scales: PracticalScales,
    pub selection: GridSelection,
    pub orientation: Orientation,
    pub seed: u64,
    pub calls: u64,
    pub rounds: usize,
    pub ledgers: Vec<CostLedger>,
    pub flagged: usize,
}

impl QsimSolver {
    pub fn new(xi: f64, profile: Profile, seed: u64) -> Self {
        Self {
            xi,
            profile,
            scales: PracticalScales::default(),
            selection: GridSelection::First,
            orientation: Orientation::Corrected,
            seed,
            calls: 0,
            rounds: 0,
            ledgers: Vec::new(),
            flagged: 0,
        }
    }

    /// Runs one guess and returns the run with the bound scale that was applied.
    pub fn run(
        &mut self,
        instance: &SdpInstance<f64>,
        alpha: f64,
        delta: f64,
    ) -> Result<(QsimRun, f64)> {
        let min_b = instance.min_b();
        if min_b <= 0.0 {
            return Err(Error::Precondition(format!(
                "min b = {min_b} ≤ 0; apply the positive-bounds extension first"
            )));
        }
        let scale = alpha.min(min_b).min(1.0);
        let record = crate::reductions::rescale_bounds(instance, scale)?;
        let inst = &record.transformed;
        let cfg = QsimConfig::for_instance(
            inst,
            alpha / scale,
            delta,
            self.xi,
            self.profile,
            &self.scales,
        )?
        .with_selection(self.selection)
        .with_orientation(self.orientation);
        let seed = self.seed.wrapping_add(self.calls);
        self.calls += 1;
        let run = run_quantum_sim(inst, &cfg, seed)?;
        self.rounds += run.rounds_run;
        self.ledgers.push(run.ledger.clone());
        if run.flagged() {
            self.flagged += 1;
        }
        Ok((run, scale))
    }
}

impl crate::reductions::FeasibilitySolver for QsimSolver {
    fn decide(
        &mut self,
        instance: &SdpInstance<f64>,
        alpha: f64,
        delta: f64,
    ) -> Result<crate::reductions::GuessOutcome> {
        use crate::reductions::GuessOutcome;
        let (run, _) = self.run(instance, alpha, delta)?;
        match run.outcome {
            QsimOutcome::Larger { .. } => Ok(GuessOutcome::Larger {
                primal_lower_bound: None,
            }),
            QsimOutcome::Dual {
                dual, certificate, ..
            } => {
                if !certificate.feasible {
                    return Err(Error::InfeasibleDual(format!(
                        "sampled dual at α = {alpha}: min slack {:.3e}, objective {:.6} (limit {:.6})",
                        certificate.min_slack, certificate.objective, certificate.objective_limit
                    )));
                }
                Ok(GuessOutcome::Dual(DualVector::evaluate(
                    instance,
                    dual.into_y(),
                )?))
            }
        }
    }
}

/// Closed-form cost bounds for given sizes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub n: usize,
    pub m: usize,
    pub s: usize,
    #[serde(rename = "R")]
    pub primal_bound: f64,
    pub delta: f64,
    /// `√m R² / δ`, polylog factors dropped.
    pub g_hbar_bound: f64,
    /// `√n s² R⁹ / δ⁶`.
    pub g_m_bound: f64,
    /// `s / ε²` with `ε = δ/(28R²)`.
    pub t_meas_bound: f64,
    /// `(R²¹/δ¹¹) G_h̄ G_M + (R¹³/δ⁵) T_meas`.
    pub total_bound: f64,
    /// `√(nm) s² R³² / δ¹⁸`.
    pub corollary_bound: f64,
    /// Ledger totals divided by the corresponding bounds.
    pub ledger_ratios: Option<LedgerRatios>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LedgerRatios {
    pub g_hbar: f64,
    pub g_m: f64,
    pub t_meas: f64,
}

pub fn theoretical_cost_report(
    n: usize,
    m: usize,
    s: usize,
    primal_bound: f64,
    delta: f64,
    ledger: Option<&CostLedger>,
) -> Result<CostReport> {
    if n == 0 || m == 0 || s == 0 || !(primal_bound > 0.0) || !(delta > 0.0) {
        return Err(Error::InvalidParameter(
            "cost report needs positive parameters".into(),
        ));
    }
    let r = primal_bound;
    let (nf, mf, sf) = (n as f64, m as f64, s as f64);
    let g_hbar_bound = mf.sqrt() * r * r / delta;
    let g_m_bound = nf.sqrt() * sf * sf * r.powi(9) / delta.powi(6);
    let eps = epsilon(delta, r);
    let t_meas_bound = sf / (eps * eps);
    let total_bound = r.powi(21) / delta.powi(11) * g_hbar_bound * g_m_bound
        + r.powi(13) / delta.powi(5) * t_meas_bound;
    let corollary_bound = (nf * mf).sqrt() * sf * sf * r.powi(32) / delta.powi(18);
    let ledger_ratios = ledger.map(|l| LedgerRatios {
        g_hbar: l.totals.g_hbar as f64 / g_hbar_bound,
        g_m: l.totals.g_m as f64 / g_m_bound,
        t_meas: l.totals.t_meas as f64 / t_meas_bound,
    });
    Ok(CostReport {
        n,
        m,
        s,
        primal_bound,
        delta,
        g_hbar_bound,
        g_m_bound,
        t_meas_bound,
        total_bound,
        corollary_bound,
        ledger_ratios,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_ties_go_away_from_zero() {
        assert_eq!(round_to_precision(0.25, 0.5), 0.5);
        assert_eq!(round_to_precision(-0.25, 0.5), -0.5);
        assert_eq!(round_to_precision(0.2, 0.5), 0.0);
    }

    #[test]
    fn hbar_zero_parameters() {
        let h = build_hbar(&[0.3, -0.2], &[1.0, 2.0], 0.0, 0.0, 0.01, None).unwrap();
        assert_eq!(h.rounded, vec![0.0, 0.0]);
    }

    #[test]
    fn measurement_cost_substitution() {
        let polylog = (320000f64).ln().powi(4).ceil() as u128;
        assert_eq!(measurement_cost(16, 2, 0.1, 1e-3), 200 * polylog);
    }

    #[test]
    fn ct_without_hbar_cost() {
        let cfg = QsimConfig::new(4, 4, 1, 1.0, 1.0, 0.5, 1.0, Profile::Practical).unwrap();
        let ga = cfg.gamma as f64 * cfg.alpha / cfg.epsilon;
        let expect = ceil_count(2.0 * ga * cfg.m_samples as f64 * cfg.l_samples as f64);
        assert_eq!(cost_ct(&cfg, 0), expect);
    }

    #[test]
    fn k_spacing() {
        assert_eq!(spaced_k_values(5, 32), vec![1, 2, 3, 4, 5]);
        let ks = spaced_k_values(1000, 4);
        assert_eq!(ks, vec![1, 334, 667, 1000]);
    }

    #[test]
    fn sampler_perturbation() {
        let s = GibbsSamplerSim::new(0.1);
        let d = s.distribution(&[0.0, 0.0]);
        assert!((d[0] - 0.55).abs() < 1e-15 && (d[1] - 0.45).abs() < 1e-15);
    }
}
