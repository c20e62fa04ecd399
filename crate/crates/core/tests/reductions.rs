use gibbs_sdp::harness::{gen_diagonal_lp, gen_diagonal_mixed, reference_solve_diagonal};
use gibbs_sdp::linalg::SparseHermitian;
use gibbs_sdp::model::{verify_dual, DualVector, SdpInstance};
use gibbs_sdp::reductions::{
    binary_search_opt, dual_size_bound, extend_to_positive_b, rescale_for_alpha, ClassicalSolver,
    ReductionKind,
};

fn mixed_instances(count: usize) -> Vec<SdpInstance<f64>> {
    (0u64..)
        .map(|seed| gen_diagonal_mixed(2 + seed as usize % 5, 2 + seed as usize % 4, seed).unwrap())
        .filter(|inst| inst.min_b() < 0.0)
        .take(count)
        .collect()
}

#[test]
fn box_corners_map_to_one_and_top() {
    let inst = SdpInstance::new(
        SparseHermitian::from_real_diagonal(&[0.3, -0.2]),
        vec![
            SparseHermitian::identity(2),
            SparseHermitian::from_real_diagonal(&[-1.0, 0.0]),
            SparseHermitian::from_real_diagonal(&[0.0, 1.0]),
        ],
        vec![2.0, -2.0, 2.0],
        2.0,
    )
    .unwrap();
    let rec = extend_to_positive_b(&inst, 4.0).unwrap();
    assert_eq!(rec.transformed.b(), &[5.0, 1.0, 5.0, 3.0]);
    assert_eq!(rec.transformed.primal_bound(), 5.0);
    assert_eq!(rec.transformed.n(), 3);
}

#[test]
fn feasible_extended_duals_map_back_feasible() {
    for inst in mixed_instances(50) {
        let r = inst.dual_bound().unwrap();
        let rec = extend_to_positive_b(&inst, r).unwrap();
        let ext = reference_solve_diagonal(&rec.transformed).unwrap();
        let d = DualVector::evaluate(&rec.transformed, ext.y.clone()).unwrap();
        assert!(d.is_feasible());
        let back = rec.map_back(&d).unwrap();
        let cert = verify_dual(&inst, &back, f64::INFINITY, 0.0).unwrap();
        assert!(cert.min_slack >= -1e-6, "slack {}", cert.min_slack);
        // an optimal extended dual maps to an optimal original one
        let orig = reference_solve_diagonal(&inst).unwrap();
        assert!(
            (back.objective() - orig.opt).abs() <= 1e-6,
            "{} vs {}",
            back.objective(),
            orig.opt
        );
        assert!((rec.map_objective_back(ext.opt) - orig.opt).abs() <= 1e-6);
    }
}

#[test]
fn constructed_extended_dual_returns_original() {
    for inst in mixed_instances(10) {
        let r = inst.dual_bound().unwrap();
        let rec = extend_to_positive_b(&inst, r).unwrap();
        let ReductionKind::PositiveBounds {
            objective_scale, ..
        } = rec.kind
        else {
            unreachable!()
        };
        let z = reference_solve_diagonal(&inst).unwrap().y;
        let total: f64 = z.iter().sum();
        let mut y: Vec<f64> = z.iter().map(|v| v / objective_scale).collect();
        y.push(((r - total) / objective_scale).max(0.0));
        let back = rec
            .map_back(&DualVector::evaluate(&rec.transformed, y).unwrap())
            .unwrap();
        for (a, b) in back.y().iter().zip(&z) {
            assert!((a - b).abs() <= 1e-12);
        }
    }
}

#[test]
fn alpha_rescale_examples() {
    let inst = SdpInstance::new(
        SparseHermitian::from_real_diagonal(&[0.5, 0.0]),
        vec![
            SparseHermitian::identity(2),
            SparseHermitian::from_real_diagonal(&[0.0, 1.0]),
        ],
        vec![2.0, 4.0],
        4.0,
    )
    .unwrap()
    .with_norm_waiver(true);
    let rec = rescale_for_alpha(&inst, 0.5).unwrap();
    assert_eq!(rec.transformed.b(), &[4.0, 8.0]);
    assert_eq!(
        rescale_for_alpha(&inst, 1.0).unwrap().kind,
        ReductionKind::Identity
    );
    assert_eq!(dual_size_bound(&inst, 3.0).unwrap(), 1.5);
}

#[test]
fn rescaled_search_matches_reference() {
    for seed in 0..4 {
        let inst = gen_diagonal_lp(4, 3, seed).unwrap();
        let alpha = 0.5;
        let rec = rescale_for_alpha(&inst, alpha).unwrap();
        let delta = 0.05;
        let res = binary_search_opt(
            &rec.transformed,
            delta,
            delta / 4.0,
            &mut ClassicalSolver::default(),
        )
        .unwrap();
        let want = reference_solve_diagonal(&inst).unwrap().opt;
        let got = rec.map_objective_back(res.opt_estimate);
        assert!(
            (got - want).abs() <= delta * want.max(1.0),
            "{got} vs {want}"
        );
    }
}

#[test]
fn nonpositive_bounds_need_a_dual_bound() {
    let inst = mixed_instances(1).remove(0);
    assert!(dual_size_bound(&inst, 1.0).is_err());
    assert!(extend_to_positive_b(&inst, 0.0).is_err());
}
