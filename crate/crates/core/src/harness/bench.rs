//! Single solves, benchmark sweeps, and their reports.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::generators::{generate, GeneratorKind, GeneratorSpec};
use crate::error::{Error, Result};
use crate::jaynes::Orientation;
use crate::model::{verify_dual, DualVector, SdpInstance};
use crate::qsim::{CostLedger, GridSelection, PracticalScales, Profile, QsimOutcome, QsimSolver};
use crate::reductions::{
    binary_search_opt, binary_search_until, extend_to_positive_b, max_search_calls,
    ClassicalSolver, FeasibilitySolver, GuessOutcome,
};

pub const REPORT_SCHEMA: &str = "gibbs-sdp/run-report/v1";

pub const CSV_COLUMNS: [&str; 14] = [
    "instance_id",
    "path",
    "profile",
    "seed",
    "status",
    "opt_estimate",
    "dual_objective",
    "min_slack",
    "G_hbar",
    "G_M",
    "T_meas",
    "total_queries",
    "rounds",
    "wall_ms",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverPath {
    /// Matrix multiplicative weights with the exact oracle.
    Classical,
    /// The simulated sampling algorithm.
    Qsim,
}

impl SolverPath {
    pub fn name(self) -> &'static str {
        match self {
            SolverPath::Classical => "classical",
            SolverPath::Qsim => "qsim",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "classical" => Some(SolverPath::Classical),
            "qsim" => Some(SolverPath::Qsim),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    /// A verified dual.
    Dual,
    /// `Larger` at the single queried guess.
    Larger,
    /// A dual was emitted but failed verification.
    Flagged,
    /// The input was rejected.
    InputError,
    /// The run aborted.
    Failed,
}

impl RunStatus {
    pub fn name(self) -> &'static str {
        match self {
            RunStatus::Dual => "dual",
            RunStatus::Larger => "larger",
            RunStatus::Flagged => "flagged",
            RunStatus::InputError => "input_error",
            RunStatus::Failed => "failed",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub path: SolverPath,
    pub profile: Profile,
    /// Single guess; `None` runs the binary search.
    pub alpha: Option<f64>,
    pub delta: f64,
    pub xi: f64,
    pub seed: u64,
    /// Smallest per-guess accuracy in the search; `δ/4` when absent, or half
    /// the mapped accuracy when the bounds had to be extended.
    pub guess_delta: Option<f64>,
    pub selection: GridSelection,
    pub orientation: Orientation,
    pub scales: PracticalScales,
    /// Round cap for the classical path.
    pub round_cap: Option<usize>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            path: SolverPath::Classical,
            profile: Profile::Practical,
            alpha: None,
            delta: 0.1,
            xi: 1.0,
            seed: 0,
            guess_delta: None,
            selection: GridSelection::First,
            orientation: Orientation::Corrected,
            scales: PracticalScales::default(),
            round_cap: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema: String,
    pub instance_id: String,
    /// SHA-256 of the instance bytes.
    pub instance_digest: String,
    pub path: SolverPath,
    pub profile: Profile,
    pub seed: u64,
    pub alpha: Option<f64>,
    pub delta: f64,
    pub xi: f64,
    pub status: RunStatus,
    pub opt_estimate: Option<f64>,
    pub bracket: Option<(f64, f64)>,
    pub dual_objective: Option<f64>,
    pub min_slack: Option<f64>,
    pub dual: Option<Vec<f64>>,
    pub solver_calls: usize,
    pub rounds: usize,
    #[serde(rename = "G_hbar")]
    pub g_hbar: Option<u128>,
    #[serde(rename = "G_M")]
    pub g_m: Option<u128>,
    #[serde(rename = "T_meas")]
    pub t_meas: Option<u128>,
    pub total_queries: Option<u128>,
    pub ledgers: Vec<CostLedger>,
    pub reduction: Option<String>,
    pub error: Option<String>,
    pub wall_ms: u128,
}

impl RunReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    fn csv_row(&self) -> Vec<String> {
        fn opt<T: ToString>(v: &Option<T>) -> String {
            v.as_ref().map(ToString::to_string).unwrap_or_default()
        }
        vec![
            self.instance_id.clone(),
            self.path.name().into(),
            self.profile.name().into(),
            self.seed.to_string(),
            self.status.name().into(),
            opt(&self.opt_estimate),
            opt(&self.dual_objective),
            opt(&self.min_slack),
            opt(&self.g_hbar),
            opt(&self.g_m),
            opt(&self.t_meas),
            opt(&self.total_queries),
            self.rounds.to_string(),
            self.wall_ms.to_string(),
        ]
    }
}

pub fn digest_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Digest of the canonical JSON encoding.
pub fn instance_digest(instance: &SdpInstance<f64>) -> String {
    digest_bytes(instance.to_json_string().as_bytes())
}

fn is_input_error(e: &Error) -> bool {
    matches!(
        e,
        Error::InvalidParameter(_)
            | Error::Precondition(_)
            | Error::InvalidInstance(_)
            | Error::DimensionMismatch { .. }
            | Error::IndexOutOfRange(_)
            | Error::Json(_)
    )
}

enum Solver {
    Classical(ClassicalSolver),
    Qsim(QsimSolver),
}

impl Solver {
    fn new(opts: &SolveOptions) -> Self {
        match opts.path {
            SolverPath::Classical => Solver::Classical(ClassicalSolver {
                round_cap: opts.round_cap,
                ..ClassicalSolver::default()
            }),
            SolverPath::Qsim => {
                let mut s = QsimSolver::new(opts.xi, opts.profile, opts.seed);
                s.scales = opts.scales.clone();
                s.selection = opts.selection;
                s.orientation = opts.orientation;
                Solver::Qsim(s)
            }
        }
    }

    fn as_dyn(&mut self) -> &mut dyn FeasibilitySolver {
        match self {
            Solver::Classical(s) => s,
            Solver::Qsim(s) => s,
        }
    }

    fn rounds(&self) -> usize {
        match self {
            Solver::Classical(s) => s.rounds,
            Solver::Qsim(s) => s.rounds,
        }
    }

    fn ledgers(&self) -> Vec<CostLedger> {
        match self {
            Solver::Classical(_) => Vec::new(),
            Solver::Qsim(s) => s.ledgers.clone(),
        }
    }
}

struct Solved {
    status: RunStatus,
    opt_estimate: Option<f64>,
    bracket: Option<(f64, f64)>,
    dual: Option<DualVector<f64>>,
    calls: usize,
    reduction: Option<String>,
    error: Option<String>,
}

fn single_guess(
    instance: &SdpInstance<f64>,
    alpha: f64,
    opts: &SolveOptions,
    solver: &mut Solver,
) -> Result<Solved> {
    if instance.min_b() <= 0.0 {
        return Err(Error::Precondition(
            "single-guess mode needs positive bounds; run the search to apply the extension".into(),
        ));
    }
    let solved = |status, dual| Solved {
        status,
        opt_estimate: None,
        bracket: None,
        dual,
        calls: 1,
        reduction: None,
        error: None,
    };
    match solver {
        Solver::Qsim(q) => {
            let (run, _) = q.run(instance, alpha, opts.delta)?;
            Ok(match run.outcome {
                QsimOutcome::Larger { .. } => solved(RunStatus::Larger, None),
                QsimOutcome::Dual {
                    dual, certificate, ..
                } => {
                    let dual = DualVector::evaluate(instance, dual.into_y())?;
                    let status = if certificate.feasible {
                        RunStatus::Dual
                    } else {
                        RunStatus::Flagged
                    };
                    solved(status, Some(dual))
                }
            })
        }
        Solver::Classical(c) => Ok(match c.decide(instance, alpha, opts.delta)? {
            GuessOutcome::Larger { .. } => solved(RunStatus::Larger, None),
            GuessOutcome::Dual(dual) => {
                let cert = verify_dual(instance, &dual, alpha, opts.delta)?;
                let status = if cert.feasible {
                    RunStatus::Dual
                } else {
                    RunStatus::Flagged
                };
                solved(status, Some(dual))
            }
        }),
    }
}

fn search(instance: &SdpInstance<f64>, opts: &SolveOptions, solver: &mut Solver) -> Result<Solved> {
    let guess_delta = opts.guess_delta.unwrap_or(opts.delta / 4.0);
    if instance.min_b() > 0.0 {
        let res = binary_search_opt(instance, opts.delta, guess_delta, solver.as_dyn())?;
        return Ok(Solved {
            status: RunStatus::Dual,
            opt_estimate: Some(res.opt_estimate),
            bracket: Some((res.lo, res.hi)),
            calls: res.calls(),
            dual: res.dual,
            reduction: None,
            error: None,
        });
    }
    let r = instance.dual_bound().ok_or_else(|| {
        Error::Precondition(
            "bounds are not all positive and the instance carries no dual bound r".into(),
        )
    })?;
    let record = extend_to_positive_b(instance, r)?;
    // stop on the original-units rule; guesses are decided to about δ/scale absolute
    let inner_delta = record.map_delta(opts.delta);
    let guess_delta = opts.guess_delta.unwrap_or(inner_delta / 2.0);
    let big_r = record.transformed.primal_bound();
    let done = |lo: f64, hi: f64| {
        let lo_orig = record.map_objective_back(lo);
        record.map_objective_back(hi) - lo_orig <= opts.delta * lo_orig.max(1.0)
    };
    let max_calls = max_search_calls(big_r, inner_delta / big_r);
    let res = binary_search_until(
        &record.transformed,
        guess_delta,
        max_calls,
        &done,
        solver.as_dyn(),
    )?;
    let dual = res.dual.as_ref().map(|d| record.map_back(d)).transpose()?;
    Ok(Solved {
        status: RunStatus::Dual,
        opt_estimate: Some(record.map_objective_back(res.opt_estimate)),
        bracket: Some((
            record.map_objective_back(res.lo),
            record.map_objective_back(res.hi),
        )),
        calls: res.calls(),
        dual,
        reduction: Some(record.describe_inverse()),
        error: None,
    })
}

/// Solves one instance; failures are recorded in the report, never raised.
pub fn solve(
    instance: &SdpInstance<f64>,
    instance_id: &str,
    digest: &str,
    opts: &SolveOptions,
) -> RunReport {
    let start = Instant::now();
    let mut solver = Solver::new(opts);
    let outcome = match opts.alpha {
        Some(alpha) => single_guess(instance, alpha, opts, &mut solver),
        None => search(instance, opts, &mut solver),
    };
    let solved = outcome.unwrap_or_else(|e| Solved {
        status: if is_input_error(&e) {
            RunStatus::InputError
        } else {
            RunStatus::Failed
        },
        opt_estimate: None,
        bracket: None,
        dual: None,
        calls: 0,
        reduction: None,
        error: Some(e.to_string()),
    });
    let ledgers = solver.ledgers();
    let qsim = opts.path == SolverPath::Qsim;
    let max_of =
        |f: fn(&CostLedger) -> u128| qsim.then(|| ledgers.iter().map(f).max().unwrap_or(0));
    RunReport {
        schema: REPORT_SCHEMA.into(),
        instance_id: instance_id.into(),
        instance_digest: digest.into(),
        path: opts.path,
        profile: opts.profile,
        seed: opts.seed,
        alpha: opts.alpha,
        delta: opts.delta,
        xi: opts.xi,
        status: solved.status,
        opt_estimate: solved.opt_estimate,
        bracket: solved.bracket,
        dual_objective: solved.dual.as_ref().map(|d| d.objective()),
        min_slack: solved.dual.as_ref().map(|d| d.min_slack()),
        dual: solved.dual.map(|d| d.into_y()),
        solver_calls: solved.calls,
        rounds: solver.rounds(),
        g_hbar: max_of(|l| l.totals.g_hbar),
        g_m: max_of(|l| l.totals.g_m),
        t_meas: max_of(|l| l.totals.t_meas),
        total_queries: qsim.then(|| ledgers.iter().map(|l| l.totals.total_queries).sum()),
        ledgers,
        reduction: solved.reduction,
        error: solved.error,
        wall_ms: start.elapsed().as_millis(),
    }
}

/// One instance of a benchmark: generated from a spec or loaded from a file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchInstance {
    #[serde(default)]
    pub id: Option<String>,
    #[serde(default)]
    pub file: Option<String>,
    #[serde(default)]
    pub kind: Option<GeneratorKind>,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub m: Option<usize>,
    #[serde(default)]
    pub s: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
}

fn default_delta() -> f64 {
    0.1
}

fn default_xi() -> f64 {
    1.0
}

fn default_paths() -> Vec<SolverPath> {
    vec![SolverPath::Classical]
}

fn default_profiles() -> Vec<Profile> {
    vec![Profile::Practical]
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchSpec {
    #[serde(default)]
    pub instances: Vec<BenchInstance>,
    #[serde(default = "default_paths")]
    pub paths: Vec<SolverPath>,
    #[serde(default = "default_profiles")]
    pub profiles: Vec<Profile>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_xi")]
    pub xi: f64,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub selection: GridSelection,
    #[serde(default)]
    pub scales: PracticalScales,
    #[serde(default)]
    pub round_cap: Option<usize>,
}

impl BenchSpec {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

struct Prepared {
    id: String,
    digest: String,
    instance: SdpInstance<f64>,
}

fn prepare(entry: &BenchInstance, index: usize, base: &Path) -> Result<Prepared> {
    if let Some(file) = &entry.file {
        let path = base.join(file);
        let bytes = std::fs::read(&path)?;
        let text = String::from_utf8(bytes.clone())
            .map_err(|e| Error::InvalidInstance(format!("{}: {e}", path.display())))?;
        let instance = SdpInstance::from_json_str(&text)?;
        let id = entry.id.clone().unwrap_or_else(|| file.clone());
        return Ok(Prepared {
            id,
            digest: digest_bytes(&bytes),
            instance,
        });
    }
    let (Some(kind), Some(n), Some(m)) = (entry.kind, entry.n, entry.m) else {
        return Err(Error::InvalidParameter(format!(
            "benchmark instance {index} needs `file` or `kind`, `n`, `m`"
        )));
    };
    let seed = entry.seed.unwrap_or(0);
    let instance = generate(&GeneratorSpec {
        kind,
        n,
        m,
        s: entry.s,
        seed,
    })?
    .instance;
    let id = entry
        .id
        .clone()
        .unwrap_or_else(|| format!("{}-n{n}-m{m}-seed{seed}", kind.name()));
    Ok(Prepared {
        id,
        digest: instance_digest(&instance),
        instance,
    })
}

/// One report per (instance, path, profile, seed), in that nesting order.
pub fn run_benchmark(spec: &BenchSpec, base: &Path) -> Result<Vec<RunReport>> {
    let prepared = spec
        .instances
        .iter()
        .enumerate()
        .map(|(i, e)| prepare(e, i, base))
        .collect::<Result<Vec<_>>>()?;
    let mut reports = Vec::new();
    for p in &prepared {
        for &path in &spec.paths {
            for &profile in &spec.profiles {
                for &seed in &spec.seeds {
                    let opts = SolveOptions {
                        path,
                        profile,
                        alpha: spec.alpha,
                        delta: spec.delta,
                        xi: spec.xi,
                        seed,
                        selection: spec.selection,
                        scales: spec.scales.clone(),
                        round_cap: spec.round_cap,
                        ..SolveOptions::default()
                    };
                    log::info!(
                        "bench {} {} {} seed {seed}",
                        p.id,
                        path.name(),
                        profile.name()
                    );
                    reports.push(solve(&p.instance, &p.id, &p.digest, &opts));
                }
            }
        }
    }
    Ok(reports)
}

pub fn write_csv<W: Write>(reports: &[RunReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    for r in reports {
        w.write_record(r.csv_row())?;
    }
    w.flush()?;
    Ok(())
}
