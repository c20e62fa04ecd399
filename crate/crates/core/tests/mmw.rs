mod common;

use common::{bracketed_eigenvalues, random_hermitian, rng};
use gibbs_sdp::harness::{gen_lower_bound, gen_random};
use gibbs_sdp::linalg::{DenseHermitian, DensityMatrix, SparseHermitian};
use gibbs_sdp::mmw::{
    check_regret, general_width_bound, mmw_state, payoff_matrix, run_arora_kale, ExactOracle,
    MmwConfig, MmwOutcome, MmwTrace,
};
use gibbs_sdp::model::{min_slack, SdpInstance};
use proptest::prelude::*;
use rand::Rng;

fn solve(inst: &SdpInstance<f64>, alpha: f64, delta: f64) -> MmwOutcome<f64> {
    let cfg = MmwConfig::new(inst, alpha, delta).unwrap();
    let mut oracle = ExactOracle::new(inst, alpha).unwrap();
    run_arora_kale(inst, &cfg, &mut oracle).unwrap().outcome
}

#[test]
fn unit_optimum_above_guess_yields_witness() {
    let inst = gen_lower_bound(2, 8, 4, 3, false).unwrap().instance;
    match solve(&inst, 0.9, 0.05) {
        MmwOutcome::PrimalWitness {
            primal_lower_bound, ..
        } => {
            assert!(primal_lower_bound.unwrap() > 0.9 * 0.95);
        }
        MmwOutcome::Dual(d) => panic!("dual with objective {}", d.objective()),
    }
}

#[test]
fn half_optimum_below_guess_yields_dual() {
    for normalized in [false, true] {
        let inst = gen_lower_bound(1, 8, 4, 3, normalized).unwrap().instance;
        match solve(&inst, 0.6, 0.05) {
            MmwOutcome::Dual(d) => {
                assert!(d.is_feasible(), "slack {}", d.min_slack());
                assert!(d.objective() <= 0.63 + 1e-9, "objective {}", d.objective());
            }
            MmwOutcome::PrimalWitness { .. } => panic!("witness on an instance with optimum 1/2"),
        }
    }
}

#[test]
fn zero_objective_returns_shift_only() {
    let n = 3;
    let inst = SdpInstance::new(
        SparseHermitian::zeros(n),
        vec![
            SparseHermitian::identity(n),
            SparseHermitian::from_real_diagonal(&[1.0, 0.0, -1.0]),
        ],
        vec![1.0, 1.0],
        1.0,
    )
    .unwrap();
    let cfg = MmwConfig::new(&inst, 1.0, 0.1).unwrap();
    let run = run_arora_kale(&inst, &cfg, &mut ExactOracle::new(&inst, 1.0).unwrap()).unwrap();
    let MmwOutcome::Dual(d) = run.outcome else {
        panic!("expected a dual")
    };
    assert_eq!(d.y(), &[0.1, 0.0]);
    assert!(run.stopped_early);
}

#[test]
fn completed_runs_meet_postconditions() {
    for seed in 0..10 {
        let n = 3 + seed as usize % 4;
        let inst = gen_random(n, 4, n, seed).unwrap();
        let (alpha, delta) = (inst.primal_bound(), 0.2);
        let cfg = MmwConfig::new(&inst, alpha, delta)
            .unwrap()
            .with_check_interval(None);
        let run =
            run_arora_kale(&inst, &cfg, &mut ExactOracle::new(&inst, alpha).unwrap()).unwrap();
        let MmwOutcome::Dual(d) = run.outcome else {
            panic!("oracle cannot fail at α = R")
        };
        assert_eq!(run.rounds, cfg.rounds);
        assert!(d.y().iter().all(|&v| v >= 0.0));
        assert!(d.objective() <= (1.0 + delta) * alpha + 1e-9);
        assert!(min_slack(&inst, d.y()).unwrap() >= -1e-6);
        let regret = check_regret(&run.trace, cfg.epsilon).unwrap();
        assert!(regret.holds, "{regret:?}");
    }
}

#[test]
fn payoff_spectrum_in_unit_band() {
    let mut r = rng(21);
    for trial in 0..100 {
        let inst = gen_random(5, 4, 5, trial).unwrap();
        let alpha = 0.5 + r.random::<f64>();
        // random y with y ≥ 0 and b·y ≤ α
        let raw: Vec<f64> = (0..4).map(|_| r.random::<f64>()).collect();
        let by: f64 = raw.iter().zip(inst.b()).map(|(y, b)| y * b).sum();
        let y: Vec<f64> = raw
            .iter()
            .map(|v| v * alpha * r.random::<f64>() / by)
            .collect();
        let width = general_width_bound(&inst, alpha).unwrap();
        let m = payoff_matrix(&inst, &y, width).unwrap();
        let eig = bracketed_eigenvalues(&m);
        assert!(
            eig[0] >= -1e-8 && eig[eig.len() - 1] <= 1.0 + 1e-8,
            "{eig:?}"
        );
    }
}

#[test]
fn concentrated_wrong_state_breaks_regret() {
    let bad = DensityMatrix::from_probabilities(&[1.0, 0.0]).unwrap();
    let payoff = DenseHermitian::from_real_diagonal(&[1.0, 0.0]);
    let trace = MmwTrace::from_rounds(vec![(bad, payoff); 5]).unwrap();
    let check = check_regret(&trace, 0.5).unwrap();
    assert!(!check.holds, "{check:?}");
    assert!((check.lhs - 5.0).abs() < 1e-12);
}

fn contraction(r: &mut impl Rng, n: usize) -> DenseHermitian<f64> {
    // (H/‖H‖ + I)/2 has its spectrum in [0, 1]
    let h = random_hermitian(r, n, 1.0);
    let eig = bracketed_eigenvalues(&h);
    let norm = eig[0].abs().max(eig[n - 1].abs()).max(1e-12);
    let mut m = h.scaled(0.5 / norm);
    m.add_identity(0.5);
    m
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]
    #[test]
    fn regret_holds_on_random_traces(seed in 0u64..1000, n in 2usize..6, rounds in 1usize..30, eps in 0.05f64..0.5) {
        let mut r = rng(seed);
        let eps_prime = -(1.0f64 - eps).ln();
        let mut sum = DenseHermitian::zeros(n);
        let mut pairs = Vec::new();
        for _ in 0..rounds {
            let state = mmw_state(&sum, eps_prime).unwrap();
            let m = contraction(&mut r, n);
            sum.add_scaled(&m, 1.0).unwrap();
            pairs.push((state, m));
        }
        let trace = MmwTrace::from_rounds(pairs).unwrap();
        // independent right-hand side
        let lam = bracketed_eigenvalues(&trace.payoff_sum)[0];
        let rhs = (1.0 + eps) * lam + (n as f64).ln() / eps;
        prop_assert!(trace.payoff_value_sum <= rhs + 1e-7);
        prop_assert!(check_regret(&trace, eps).unwrap().holds);
    }
}
