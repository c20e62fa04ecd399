use gibbs_sdp::harness::{gen_diagonal_lp, gen_lower_bound};
use gibbs_sdp::linalg::{DensityMatrix, SparseHermitian};
use gibbs_sdp::model::{EntryOracle, SdpInstance};
use gibbs_sdp::qsim::{
    build_hbar, cost_ct, estimate_expectation, run_quantum_sim, simulated_gibbs_sample,
    sparsify_payoff, GridSelection, PracticalScales, Profile, QsimConfig, QsimOutcome, QsimSolver,
};
use gibbs_sdp::reductions::{FeasibilitySolver, GuessOutcome};
use gibbs_sdp::Error;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn small_scales() -> PracticalScales {
    PracticalScales {
        rounds: 40,
        m_samples: 64,
        l_samples: 16,
        q_samples: 128,
        k_grid: 8,
        resample_per_n: false,
    }
}

#[test]
fn derived_counts_match_closed_forms() {
    let (n, m, r, delta, xi) = (16usize, 8usize, 1.5f64, 0.2f64, 1.0f64);
    let cfg = QsimConfig::new(n, m, 3, r, 2.0, delta, xi, Profile::Paper).unwrap();
    let eps = 0.2 / (28.0 * 2.25);
    assert!((cfg.epsilon - eps).abs() < 1e-15);
    assert!((cfg.rounds_formula - 500.0 * 3.375 * 16f64.ln() / 0.04).abs() < 1e-6);
    assert_eq!(cfg.rounds as f64, cfg.rounds_formula.ceil());
    assert_eq!(
        cfg.gamma as f64,
        (8.0 / (eps * eps) * 8f64.ln() * 2.25).ceil()
    );
    assert_eq!(cfg.n_max as f64, (2.0 / eps).ceil());
    let lnm = 128f64.ln();
    assert!((cfg.l_formula - 80.0 * lnm * lnm / (eps * eps)).abs() / cfg.l_formula < 1e-12);
    let arg = (8.0 * 2.25 * 128.0 / eps).ln();
    assert!((cfg.m_formula - 80.0 * arg * arg / (eps * eps)).abs() / cfg.m_formula < 1e-12);
    assert!(
        (cfg.q_formula - 1e6 * r.powi(6) * lnm.powi(3) / delta.powi(4)).abs() / cfg.q_formula
            < 1e-12
    );
    assert!((cfg.h_precision - 0.2 / (56.0 * 2.25)).abs() < 1e-15);
    assert!((cfg.failure_probability - (-lnm).exp()).abs() < 1e-15);
}

#[test]
fn round_cost_formula() {
    let cfg = QsimConfig::new(16, 16, 1, 1.0, 1.0, 0.1, 1.0, Profile::Practical).unwrap();
    let eps = cfg.epsilon;
    let ga = cfg.gamma as f64 / eps;
    let (mm, l, q) = (
        cfg.m_samples as f64,
        cfg.l_samples as f64,
        cfg.q_samples as f64,
    );
    let g = 7u128;
    let want = 10.0 * 16f64.ln() / (eps * eps) * (ga * mm + q) * 7.0 + 2.0 * ga * mm * l;
    let got = cost_ct(&cfg, g) as f64;
    assert!(
        (got - want.ceil()).abs() <= 1.0 + want * 1e-12,
        "{got} vs {want}"
    );
}

#[test]
fn ledger_is_consistent_and_reproducible() {
    let inst = gen_diagonal_lp(6, 4, 5).unwrap();
    let cfg = QsimConfig::for_instance(&inst, 2.0, 0.2, 1.0, Profile::Practical, &small_scales())
        .unwrap();
    let a = run_quantum_sim(&inst, &cfg, 17).unwrap();
    let b = run_quantum_sim(&inst, &cfg, 17).unwrap();
    assert!(a.ledger.is_consistent());
    assert_eq!(a.ledger.rounds.len(), a.rounds_run);
    let sum: u128 = a
        .ledger
        .rounds
        .iter()
        .map(|r| r.c_t + r.measurement_cost_t)
        .sum();
    assert_eq!(a.ledger.totals.total_queries, sum);
    let reads: u64 = a.ledger.rounds.iter().map(|r| r.entry_reads_t).sum();
    assert_eq!(reads, a.reads.total());
    assert_eq!(a.ledger, b.ledger);
    assert_eq!(
        a.outcome.dual().map(|d| d.y().to_vec()),
        b.outcome.dual().map(|d| d.y().to_vec())
    );
    let json = a.ledger.to_json().unwrap();
    assert!(json.contains("\"C_total\"") && json.contains("\"G_hbar_t\""));
}

#[test]
fn negative_objective_gives_small_dual() {
    let n = 4;
    let inst = SdpInstance::new(
        SparseHermitian::identity(n).scaled(-1.0),
        vec![
            SparseHermitian::identity(n),
            SparseHermitian::from_real_diagonal(&[1.0, 0.0, 0.0, 0.0]),
        ],
        vec![1.0, 1.0],
        1.0,
    )
    .unwrap();
    let cfg = QsimConfig::for_instance(&inst, 1.0, 0.2, 1.0, Profile::Practical, &small_scales())
        .unwrap();
    let run = run_quantum_sim(&inst, &cfg, 1).unwrap();
    match &run.outcome {
        QsimOutcome::Dual {
            norm, certificate, ..
        } => {
            assert!(certificate.feasible);
            // the dual shift δα/R plus a few grid steps
            assert!(*norm <= cfg.delta + 20.0 * cfg.epsilon, "norm {norm}");
        }
        QsimOutcome::Larger { .. } => panic!("expected a dual"),
    }
}

/// Practical round counts are too short to certify `Larger` here; the run must
/// still never hand back a verified dual below the optimum.
#[test]
fn no_verified_dual_below_unit_optimum() {
    let inst = gen_lower_bound(2, 8, 3, 4, false).unwrap().instance;
    for selection in [GridSelection::First, GridSelection::Last] {
        let mut solver = QsimSolver::new(1.0, Profile::Practical, 2);
        solver.selection = selection;
        match solver.decide(&inst, 0.9, 0.05) {
            Ok(GuessOutcome::Larger { .. }) => {}
            Ok(GuessOutcome::Dual(d)) => {
                panic!("dual with objective {} below the optimum 1", d.objective())
            }
            Err(e) => assert!(
                matches!(e, Error::InfeasibleDual(_) | Error::Sparsification { .. }),
                "{e}"
            ),
        }
        assert_eq!(solver.calls, 1);
    }
}

#[test]
fn instrumented_state_tracks_exact_payoffs() {
    let inst = gen_diagonal_lp(5, 3, 8).unwrap();
    let cfg = QsimConfig::for_instance(&inst, 2.0, 0.2, 1.0, Profile::Practical, &small_scales())
        .unwrap()
        .with_instrument(true);
    let run = run_quantum_sim(&inst, &cfg, 4).unwrap();
    let dev = run.max_state_deviation.expect("instrumented");
    assert!(dev.is_finite() && dev >= 0.0);
}

#[test]
fn preconditions_rejected() {
    let inst = gen_diagonal_lp(4, 3, 1).unwrap();
    let cfg = QsimConfig::for_instance(&inst, 0.5, 0.2, 1.0, Profile::Practical, &small_scales())
        .unwrap();
    assert!(run_quantum_sim(&inst, &cfg, 0).is_err());
    let paper =
        QsimConfig::for_instance(&inst, 2.0, 0.1, 1.0, Profile::Paper, &small_scales()).unwrap();
    assert!(
        run_quantum_sim(&inst, &paper, 0).is_err(),
        "paper-profile work exceeds the limit"
    );
}

#[test]
fn uniform_sampler_within_bands() {
    let count = 100_000;
    let batch = simulated_gibbs_sample(&[0.0; 4], 0.0, count, 3).unwrap();
    let mut hist = [0usize; 4];
    for &i in &batch.samples {
        hist[i] += 1;
    }
    let sigma = (count as f64 * 0.25 * 0.75).sqrt();
    for h in hist {
        assert!((h as f64 - 25_000.0).abs() <= 3.0 * sigma, "{hist:?}");
    }
}

#[test]
fn perturbed_sampler_moves_half_nu() {
    let count = 100_000;
    let batch = simulated_gibbs_sample(&[0.0, 0.0], 0.1, count, 5).unwrap();
    assert!((batch.distribution[0] - 0.55).abs() < 1e-12);
    let freq = batch.samples.iter().filter(|&&i| i == 0).count() as f64 / count as f64;
    assert!(
        (freq - 0.55).abs() <= 3.0 * (0.55 * 0.45 / count as f64).sqrt(),
        "{freq}"
    );
}

#[test]
fn identity_expectation_within_accuracy() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let rho = DensityMatrix::maximally_mixed(5);
    for _ in 0..100 {
        let est = estimate_expectation(
            &SparseHermitian::identity(5),
            &rho,
            0.05,
            1e-3,
            false,
            &mut rng,
        )
        .unwrap();
        assert!((est.value - 1.0).abs() <= 0.05);
        assert!(est.cost > 0 && !est.faulted);
    }
}

#[test]
fn identity_payoff_ignores_samples() {
    let n = 3;
    let inst = SdpInstance::new(
        SparseHermitian::identity(n),
        vec![SparseHermitian::identity(n); 3],
        vec![1.0, 1.0, 1.0],
        1.0,
    )
    .unwrap();
    let oracle = EntryOracle::new(&inst);
    let (scale, alpha) = (0.7, 1.5);
    let want = (scale - 1.0 + 2.0 * alpha) / (4.0 * alpha);
    for samples in [vec![0], vec![1, 2, 2], vec![2, 0, 1, 1]] {
        let m = sparsify_payoff(&oracle, &samples, scale, alpha).unwrap();
        for k in 0..n {
            for l in 0..n {
                let expect = if k == l { want } else { 0.0 };
                assert!((m.get(k, l).re - expect).abs() < 1e-12 && m.get(k, l).im.abs() < 1e-12);
            }
        }
    }
}

proptest! {
    #[test]
    fn rounding_stays_within_half_precision(
        pairs in prop::collection::vec((-1.0f64..1.0, 0.5f64..2.0), 1..8),
        lambda in -5.0f64..5.0,
        mu in -5.0f64..5.0,
        precision in 1e-4f64..0.1,
    ) {
        let (e, b): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let h = build_hbar(&e, &b, lambda, mu, precision, None).unwrap();
        for ((raw, rounded), (x, y)) in h.raw.iter().zip(&h.rounded).zip(e.iter().zip(&b)) {
            prop_assert!((raw - (lambda * x + mu * y)).abs() <= 1e-12);
            prop_assert!((raw - rounded).abs() <= precision / 2.0 + 1e-12);
        }
    }
}
