use gibbs_sdp::harness::{
    generate, instance_digest, reference_solve_diagonal, run_benchmark, solve, write_csv,
    BenchSpec, GeneratorKind, GeneratorSpec, RunStatus, SolveOptions, SolverPath, CSV_COLUMNS,
    REPORT_SCHEMA,
};
use gibbs_sdp::qsim::PracticalScales;

fn spec(kind: GeneratorKind, n: usize, m: usize, seed: u64) -> GeneratorSpec {
    GeneratorSpec {
        kind,
        n,
        m,
        s: None,
        seed,
    }
}

#[test]
fn generators_are_seed_deterministic() {
    for kind in GeneratorKind::ALL {
        let a = generate(&spec(kind, 5, 3, 11)).unwrap();
        let b = generate(&spec(kind, 5, 3, 11)).unwrap();
        assert_eq!(a.instance, b.instance, "{}", kind.name());
        assert_eq!(instance_digest(&a.instance), instance_digest(&b.instance));
        assert_eq!(a.answer, b.answer);
    }
}

#[test]
fn classical_search_report_fields() {
    let inst = generate(&spec(GeneratorKind::DiagonalLp, 5, 3, 2))
        .unwrap()
        .instance;
    let digest = instance_digest(&inst);
    let report = solve(&inst, "d", &digest, &SolveOptions::default());
    assert_eq!(report.status, RunStatus::Dual);
    assert_eq!(report.schema, REPORT_SCHEMA);
    let want = reference_solve_diagonal(&inst).unwrap().opt;
    let (lo, hi) = report.bracket.unwrap();
    assert!(
        lo <= want + 1e-9 && want <= hi + 1e-9,
        "[{lo}, {hi}] vs {want}"
    );
    assert!(report.min_slack.unwrap() >= -1e-6);
    assert!(report.ledgers.is_empty());
    let json: serde_json::Value = serde_json::from_str(&report.to_json().unwrap()).unwrap();
    assert_eq!(json["instance_digest"], digest.as_str());
}

#[test]
fn mixed_bounds_go_through_the_extension() {
    let inst = (0u64..)
        .map(|seed| {
            generate(&spec(GeneratorKind::DiagonalMixed, 3, 3, seed))
                .unwrap()
                .instance
        })
        .find(|i| i.min_b() < 0.0)
        .unwrap();
    let report = solve(
        &inst,
        "mixed",
        "",
        &SolveOptions {
            delta: 0.1,
            ..SolveOptions::default()
        },
    );
    assert_eq!(report.status, RunStatus::Dual, "{:?}", report.error);
    assert!(report.reduction.is_some());
    let want = reference_solve_diagonal(&inst).unwrap().opt;
    let obj = report.dual_objective.unwrap();
    assert!(
        obj >= want - 1e-6 && obj - want <= 0.1 * want.max(1.0),
        "{obj} vs {want}"
    );
    assert_eq!(report.dual.as_ref().unwrap().len(), inst.m());
}

#[test]
fn qsim_reports_are_reproducible() {
    let inst = generate(&spec(GeneratorKind::DiagonalLp, 4, 3, 6))
        .unwrap()
        .instance;
    let opts = SolveOptions {
        path: SolverPath::Qsim,
        alpha: Some(3.0),
        delta: 0.2,
        seed: 5,
        scales: PracticalScales {
            rounds: 30,
            m_samples: 32,
            l_samples: 8,
            q_samples: 64,
            k_grid: 4,
            ..Default::default()
        },
        ..SolveOptions::default()
    };
    let mut a = solve(&inst, "q", "", &opts);
    let mut b = solve(&inst, "q", "", &opts);
    assert_eq!(a.ledgers.len(), 1);
    assert!(a.total_queries.unwrap() > 0);
    a.wall_ms = 0;
    b.wall_ms = 0;
    assert_eq!(a, b);
}

#[test]
fn single_guess_rejects_nonpositive_bounds() {
    let inst = (0u64..)
        .map(|seed| {
            generate(&spec(GeneratorKind::DiagonalMixed, 3, 3, seed))
                .unwrap()
                .instance
        })
        .find(|i| i.min_b() < 0.0)
        .unwrap();
    let report = solve(
        &inst,
        "x",
        "",
        &SolveOptions {
            alpha: Some(1.0),
            ..SolveOptions::default()
        },
    );
    assert_eq!(report.status, RunStatus::InputError);
}

#[test]
fn bench_csv_has_fixed_header() {
    let spec: BenchSpec = serde_json::from_str(
        r#"{"instances": [{"kind": "diagonal_lp", "n": 3, "m": 2, "seed": 1}], "seeds": [0, 1], "alpha": 2.0}"#,
    )
    .unwrap();
    let reports = run_benchmark(&spec, std::path::Path::new(".")).unwrap();
    assert_eq!(reports.len(), 2);
    let mut out = Vec::new();
    write_csv(&reports, &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), CSV_COLUMNS.join(","));
    assert!(lines.all(|l| l.starts_with("diagonal_lp-n3-m2-seed1,classical,practical,")));
    assert!(serde_json::from_str::<BenchSpec>(r#"{"instance": []}"#).is_err());
}
