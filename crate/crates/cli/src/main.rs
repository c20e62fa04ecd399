use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::Value;

use gibbs_sdp::harness::{
    digest_bytes, generate, run_benchmark, solve, write_csv, BenchSpec, GeneratorKind,
    GeneratorSpec, RunStatus, SolveOptions, SolverPath,
};
use gibbs_sdp::model::{verify_dual, DualVector, SdpInstance};
use gibbs_sdp::qsim::{self, theoretical_cost_report, CostReport, GridSelection, Profile};
use gibbs_sdp::Error;

const EXIT_OK: u8 = 0;
const EXIT_NEGATIVE: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_INTERNAL: u8 = 3;

#[derive(Parser)]
#[command(
    name = "gibbs-sdp",
    version,
    about = "Approximate SDP solving with Gibbs-state oracles"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an instance file.
    Gen {
        #[arg(long, value_parser = parse_kind)]
        kind: GeneratorKind,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        /// Row sparsity, for the sparse random kind.
        #[arg(long)]
        s: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Where to write the hidden answer of lower-bound instances.
        #[arg(long)]
        answer_out: Option<PathBuf>,
    },
    /// Solve an instance; without --alpha, binary-search the optimum.
    Solve {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value = "classical", value_parser = parse_path)]
        path: SolverPath,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
        #[arg(long, default_value_t = 1.0)]
        xi: f64,
        #[arg(long, default_value = "practical", value_parser = parse_profile)]
        profile: Profile,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Keep the last passing grid point of each round instead of the first.
        #[arg(long)]
        last_grid_point: bool,
        #[arg(long)]
        round_cap: Option<usize>,
        #[arg(long)]
        out_report: Option<PathBuf>,
    },
    /// Check a dual vector against an instance.
    Verify {
        #[arg(long)]
        instance: PathBuf,
        /// A JSON array, an object with `y`, or a run report with `dual`.
        #[arg(long)]
        dual: PathBuf,
        /// Also check `b·y ≤ (1+δ)α`.
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long, default_value_t = 0.0)]
        delta: f64,
    },
    /// Run a benchmark spec and write one CSV row per run.
    Bench {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out_csv: PathBuf,
        /// Also write the full reports as a JSON array.
        #[arg(long)]
        out_reports: Option<PathBuf>,
    },
    /// Print closed-form cost bounds and sample counts.
    CostModel {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        s: usize,
        #[arg(long = "R")]
        r: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = 1.0)]
        xi: f64,
    },
}

fn parse_kind(s: &str) -> Result<GeneratorKind, String> {
    GeneratorKind::parse(s).ok_or_else(|| {
        let names: Vec<_> = GeneratorKind::ALL.iter().map(|k| k.name()).collect();
        format!("unknown kind `{s}`; expected one of {}", names.join(", "))
    })
}

fn parse_path(s: &str) -> Result<SolverPath, String> {
    SolverPath::parse(s).ok_or_else(|| format!("unknown path `{s}`; expected classical or qsim"))
}

fn parse_profile(s: &str) -> Result<Profile, String> {
    Profile::parse(s).ok_or_else(|| format!("unknown profile `{s}`; expected paper or practical"))
}

/// Error carrying its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidParameter(_)
            | Error::Precondition(_)
            | Error::InvalidInstance(_)
            | Error::DimensionMismatch { .. }
            | Error::IndexOutOfRange(_)
            | Error::InvalidMatrix(_)
            | Error::Json(_)
            | Error::Io(_)
            | Error::Csv(_) => EXIT_INPUT,
            _ => EXIT_INTERNAL,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn input_error(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_INPUT,
        message: message.into(),
    }
}

fn read_instance(path: &Path) -> Result<(SdpInstance<f64>, Vec<u8>), Failure> {
    let bytes = std::fs::read(path).map_err(|e| input_error(format!("{}: {e}", path.display())))?;
    let text =
        std::str::from_utf8(&bytes).map_err(|e| input_error(format!("{}: {e}", path.display())))?;
    let instance = SdpInstance::from_json_str(text)?;
    Ok((instance, bytes))
}

fn write_json<T: Serialize>(value: &T, path: Option<&Path>) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(Error::from)?;
    match path {
        Some(p) => std::fs::write(p, text + "\n").map_err(Error::from)?,
        None => {
            use std::io::Write;
            match writeln!(std::io::stdout().lock(), "{text}") {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => {
                    return Err(Error::from(e).into())
                }
                _ => {}
            }
        }
    }
    Ok(())
}

fn read_dual(path: &Path) -> Result<Vec<f64>, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| input_error(format!("{}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text).map_err(Error::from)?;
    let array = match &value {
        Value::Array(_) => &value,
        Value::Object(map) => map
            .get("y")
            .or_else(|| map.get("dual"))
            .ok_or_else(|| input_error("dual file has neither `y` nor `dual`"))?,
        _ => return Err(input_error("dual file must hold an array or an object")),
    };
    serde_json::from_value(array.clone()).map_err(|e| input_error(format!("dual vector: {e}")))
}

fn status_code(status: RunStatus) -> u8 {
    match status {
        RunStatus::Dual => EXIT_OK,
        RunStatus::Larger | RunStatus::Flagged => EXIT_NEGATIVE,
        RunStatus::InputError => EXIT_INPUT,
        RunStatus::Failed => EXIT_INTERNAL,
    }
}

#[derive(Serialize)]
struct CostModelOutput {
    bounds: CostReport,
    epsilon: f64,
    epsilon_prime: f64,
    rounds: f64,
    gibbs_samples: f64,
    estimation_samples: f64,
    sparsification_samples: f64,
    hamiltonian_precision: f64,
    failure_probability: f64,
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Gen {
            kind,
            n,
            m,
            s,
            seed,
            out,
            answer_out,
        } => {
            let generated = generate(&GeneratorSpec {
                kind,
                n,
                m,
                s,
                seed,
            })?;
            generated.instance.save(&out)?;
            if let Some(path) = answer_out {
                write_json(&generated.answer, Some(&path))?;
            }
            eprintln!(
                "wrote {} (n = {n}, m = {m}, s = {})",
                out.display(),
                generated.instance.s()
            );
            Ok(EXIT_OK)
        }
        Command::Solve {
            instance,
            path,
            alpha,
            delta,
            xi,
            profile,
            seed,
            last_grid_point,
            round_cap,
            out_report,
        } => {
            let (inst, bytes) = read_instance(&instance)?;
            let opts = SolveOptions {
                path,
                profile,
                alpha,
                delta,
                xi,
                seed,
                selection: if last_grid_point {
                    GridSelection::Last
                } else {
                    GridSelection::First
                },
                round_cap,
                ..SolveOptions::default()
            };
            let id = instance
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            let report = solve(&inst, &id, &digest_bytes(&bytes), &opts);
            write_json(&report, out_report.as_deref())?;
            match (&report.error, report.opt_estimate, report.dual_objective) {
                (Some(e), _, _) => eprintln!("{}: {e}", report.status.name()),
                (None, Some(opt), _) => eprintln!("{}: optimum ≈ {opt:.6}", report.status.name()),
                (None, None, Some(obj)) => {
                    eprintln!("{}: dual objective {obj:.6}", report.status.name())
                }
                _ => eprintln!("{}", report.status.name()),
            }
            Ok(status_code(report.status))
        }
        Command::Verify {
            instance,
            dual,
            alpha,
            delta,
        } => {
            let (inst, _) = read_instance(&instance)?;
            let y = read_dual(&dual)?;
            let dual = DualVector::evaluate(&inst, y).map_err(|e| match e {
                Error::InfeasibleDual(msg) => input_error(msg),
                e => Failure::from(e),
            })?;
            let cert = verify_dual(&inst, &dual, alpha.unwrap_or(f64::INFINITY), delta)?;
            let mut out = serde_json::json!({
                "feasible": cert.feasible,
                "min_slack": cert.min_slack,
                "objective": cert.objective,
            });
            if alpha.is_some() {
                out["objective_limit"] = cert.objective_limit.into();
            }
            write_json(&out, None)?;
            Ok(if cert.feasible {
                EXIT_OK
            } else {
                EXIT_NEGATIVE
            })
        }
        Command::Bench {
            spec,
            out_csv,
            out_reports,
        } => {
            let bench = BenchSpec::load(&spec)?;
            let base = spec.parent().unwrap_or(Path::new("."));
            let reports = run_benchmark(&bench, base)?;
            let file = std::fs::File::create(&out_csv).map_err(Error::from)?;
            write_csv(&reports, file)?;
            if let Some(path) = out_reports {
                write_json(&reports, Some(&path))?;
            }
            eprintln!("wrote {} rows to {}", reports.len(), out_csv.display());
            Ok(EXIT_OK)
        }
        Command::CostModel {
            n,
            m,
            s,
            r,
            delta,
            xi,
        } => {
            let bounds = theoretical_cost_report(n, m, s, r, delta, None)?;
            if !(xi > 0.0) {
                return Err(input_error("xi must be positive"));
            }
            let eps = qsim::epsilon(delta, r);
            let out = CostModelOutput {
                bounds,
                epsilon: eps,
                epsilon_prime: qsim::epsilon_prime(eps),
                rounds: qsim::rounds_formula(n, r, delta),
                gibbs_samples: qsim::sample_count_m(n, m, r, eps, xi),
                estimation_samples: qsim::sample_count_l(n, m, eps, xi),
                sparsification_samples: qsim::sample_count_q(n, m, r, delta, xi),
                hamiltonian_precision: qsim::h_precision(delta, r),
                failure_probability: qsim::failure_probability(n, m, xi),
            };
            write_json(&out, None)?;
            Ok(EXIT_OK)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
