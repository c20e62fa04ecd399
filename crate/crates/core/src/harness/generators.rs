//! Seeded instance generators.

use num_complex::Complex64;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{operator_norm, SparseHermitian};
use crate::model::SdpInstance;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorKind {
    /// Marked constraint entry 2, norm check waived.
    LowerBoundCase1,
    /// Marked constraint entry 1 with bound 1/2.
    LowerBoundCase1Normalized,
    LowerBoundCase2,
    RandomDense,
    RandomSparse,
    DiagonalLp,
    /// Diagonal instance with bounds of both signs and a known feasible primal point.
    DiagonalMixed,
}

impl GeneratorKind {
    pub const ALL: [GeneratorKind; 7] = [
        GeneratorKind::LowerBoundCase1,
        GeneratorKind::LowerBoundCase1Normalized,
        GeneratorKind::LowerBoundCase2,
        GeneratorKind::RandomDense,
        GeneratorKind::RandomSparse,
        GeneratorKind::DiagonalLp,
        GeneratorKind::DiagonalMixed,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GeneratorKind::LowerBoundCase1 => "lower_bound_case1",
            GeneratorKind::LowerBoundCase1Normalized => "lower_bound_case1_normalized",
            GeneratorKind::LowerBoundCase2 => "lower_bound_case2",
            GeneratorKind::RandomDense => "random_dense",
            GeneratorKind::RandomSparse => "random_sparse",
            GeneratorKind::DiagonalLp => "diagonal_lp",
            GeneratorKind::DiagonalMixed => "diagonal_mixed",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub kind: GeneratorKind,
    pub n: usize,
    pub m: usize,
    #[serde(default)]
    pub s: Option<usize>,
    pub seed: u64,
}

/// The marked row and constraint of a lower-bound instance, kept apart from the instance file.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HiddenAnswer {
    pub row: usize,
    /// `None` for the second case, which has no marked constraint.
    pub constraint: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct Generated {
    pub instance: SdpInstance<f64>,
    pub answer: Option<HiddenAnswer>,
}

pub fn generate(spec: &GeneratorSpec) -> Result<Generated> {
    let GeneratorSpec {
        kind,
        n,
        m,
        s,
        seed,
    } = *spec;
    match kind {
        GeneratorKind::LowerBoundCase1 => gen_lower_bound(1, n, m, seed, false),
        GeneratorKind::LowerBoundCase1Normalized => gen_lower_bound(1, n, m, seed, true),
        GeneratorKind::LowerBoundCase2 => gen_lower_bound(2, n, m, seed, false),
        GeneratorKind::RandomDense => plain(gen_random(n, m, n, seed)),
        GeneratorKind::RandomSparse => plain(gen_random(n, m, s.unwrap_or(2.min(n)), seed)),
        GeneratorKind::DiagonalLp => plain(gen_diagonal_lp(n, m, seed)),
        GeneratorKind::DiagonalMixed => plain(gen_diagonal_mixed(n, m, seed)),
    }
}

fn plain(instance: Result<SdpInstance<f64>>) -> Result<Generated> {
    Ok(Generated {
        instance: instance?,
        answer: None,
    })
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn unit(k: usize, n: usize, value: f64) -> SparseHermitian<f64> {
    let mut d = vec![0.0; n];
    d[k] = value;
    SparseHermitian::from_real_diagonal(&d)
}

/// Two instances that differ in one entry: in case 1 the optimum is 1/2, in case 2 it is 1.
///
/// `R = 1`, `A_1 = I`, `C = |i⟩⟨i|` for a random row `i`. Case 1 additionally
/// puts 2 at `(i, i)` of a random constraint `j ≥ 2` and waives its norm; the
/// normalized variant puts 1 there and sets `b_j = 1/2` instead.
pub fn gen_lower_bound(
    case: u8,
    n: usize,
    m: usize,
    seed: u64,
    normalized: bool,
) -> Result<Generated> {
    if n < 2 || m < 2 {
        return Err(Error::InvalidParameter(format!(
            "lower-bound instances need n, m ≥ 2 (got {n}, {m})"
        )));
    }
    let mut r = rng(seed);
    let i = r.random_range(0..n);
    let mut a = vec![SparseHermitian::identity(n)];
    a.extend((1..m).map(|_| SparseHermitian::zeros(n)));
    let mut b = vec![1.0; m];
    let mut waiver = false;
    let constraint = match case {
        1 => {
            let j = r.random_range(1..m);
            if normalized {
                a[j] = unit(i, n, 1.0);
                b[j] = 0.5;
            } else {
                a[j] = unit(i, n, 2.0);
                waiver = true;
            }
            Some(j)
        }
        2 => None,
        _ => {
            return Err(Error::InvalidParameter(format!(
                "unknown lower-bound case {case}"
            )))
        }
    };
    let instance = SdpInstance::new(unit(i, n, 1.0), a, b, 1.0)?.with_norm_waiver(waiver);
    Ok(Generated {
        instance,
        answer: Some(HiddenAnswer { row: i, constraint }),
    })
}

/// Random Hermitian matrix with at most `s` entries per row, rescaled to operator norm 1.
fn random_sparse_hermitian(r: &mut ChaCha8Rng, n: usize, s: usize) -> Result<SparseHermitian<f64>> {
    let mut count = vec![0usize; n];
    let mut triplets = Vec::new();
    for k in 0..n {
        if count[k] < s && r.random_bool(0.5) {
            triplets.push((k, k, Complex64::new(r.random_range(-1.0..1.0), 0.0)));
            count[k] += 1;
        }
        let free: Vec<usize> = ((k + 1)..n).filter(|&l| count[l] < s).collect();
        let want = s.saturating_sub(count[k]).min(free.len());
        if want == 0 {
            continue;
        }
        let take = r.random_range(0..=want);
        for idx in sample(r, free.len(), take) {
            let l = free[idx];
            triplets.push((
                k,
                l,
                Complex64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)),
            ));
            count[k] += 1;
            count[l] += 1;
        }
    }
    let a = SparseHermitian::from_upper_triplets(n, triplets)?;
    let norm = operator_norm(&a.to_dense())?;
    Ok(if norm > 0.0 { a.scaled(1.0 / norm) } else { a })
}

/// Random instance: `s`-sparse `C` and `A_2..A_m` of unit norm, `A_1 = I`, `b_i ~ U[1, 2]`, `b_1 = R = max b`.
pub fn gen_random(n: usize, m: usize, s: usize, seed: u64) -> Result<SdpInstance<f64>> {
    if n == 0 || m == 0 || s == 0 || s > n {
        return Err(Error::InvalidParameter(format!(
            "need n, m ≥ 1 and 1 ≤ s ≤ n (got n={n}, m={m}, s={s})"
        )));
    }
    let mut r = rng(seed);
    let c = random_sparse_hermitian(&mut r, n, s)?;
    let mut a = vec![SparseHermitian::identity(n)];
    for _ in 1..m {
        a.push(random_sparse_hermitian(&mut r, n, s)?);
    }
    let mut b: Vec<f64> = (0..m).map(|_| r.random_range(1.0..2.0)).collect();
    let big_r = b.iter().copied().fold(f64::MIN, f64::max);
    b[0] = big_r;
    SdpInstance::new(c, a, b, big_r)?.with_sparsity(s)
}

/// Diagonal instance (an LP): entries of `C` and `A_2..A_m` uniform in `[-1, 1]`, `b` as in [`gen_random`].
pub fn gen_diagonal_lp(n: usize, m: usize, seed: u64) -> Result<SdpInstance<f64>> {
    if n == 0 || m == 0 {
        return Err(Error::InvalidParameter("need n, m ≥ 1".into()));
    }
    let mut r = rng(seed);
    let diag =
        |r: &mut ChaCha8Rng| -> Vec<f64> { (0..n).map(|_| r.random_range(-1.0..1.0)).collect() };
    let c = SparseHermitian::from_real_diagonal(&diag(&mut r));
    let mut a = vec![SparseHermitian::identity(n)];
    for _ in 1..m {
        a.push(SparseHermitian::from_real_diagonal(&diag(&mut r)));
    }
    let mut b: Vec<f64> = (0..m).map(|_| r.random_range(1.0..2.0)).collect();
    let big_r = b.iter().copied().fold(f64::MIN, f64::max);
    b[0] = big_r;
    SdpInstance::new(c, a, b, big_r)
}

/// Diagonal instance with `R = 1` and bounds of both signs.
///
/// A random diagonal `X0 ≥ 0` with `tr X0 = 1/2` is made strictly feasible
/// with slack at least 0.2 in every constraint, which bounds the dual optimum:
/// `‖y*‖₁ ≤ (R − tr(C X0)) / 0.2`. That bound is stored as the dual bound `r`.
pub fn gen_diagonal_mixed(n: usize, m: usize, seed: u64) -> Result<SdpInstance<f64>> {
    if n == 0 || m < 2 {
        return Err(Error::InvalidParameter("need n ≥ 1 and m ≥ 2".into()));
    }
    let mut r = rng(seed);
    let raw: Vec<f64> = (0..n).map(|_| r.random_range(0.0..1.0)).collect();
    let total: f64 = raw.iter().sum::<f64>().max(f64::MIN_POSITIVE);
    let x0: Vec<f64> = raw.iter().map(|v| 0.5 * v / total).collect();
    let c_diag: Vec<f64> = (0..n).map(|_| r.random_range(-1.0..1.0)).collect();
    let mut a = vec![SparseHermitian::identity(n)];
    let mut b = vec![1.0];
    for _ in 1..m {
        let d: Vec<f64> = (0..n).map(|_| r.random_range(-1.0..1.0)).collect();
        let load: f64 = d.iter().zip(&x0).map(|(a, x)| a * x).sum();
        b.push(load + r.random_range(0.2..0.5));
        a.push(SparseHermitian::from_real_diagonal(&d));
    }
    let c_load: f64 = c_diag.iter().zip(&x0).map(|(c, x)| c * x).sum();
    let dual_bound = (1.0 - c_load) / 0.2;
    Ok(
        SdpInstance::new(SparseHermitian::from_real_diagonal(&c_diag), a, b, 1.0)?
            .with_dual_bound(Some(dual_bound)),
    )
}
