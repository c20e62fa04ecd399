//! Instance generators, the reference solver, and benchmark reporting.

pub mod bench;
pub mod generators;
pub mod reference;

pub use bench::{
    digest_bytes, instance_digest, run_benchmark, solve, write_csv, BenchInstance, BenchSpec,
    RunReport, RunStatus, SolveOptions, SolverPath, CSV_COLUMNS, REPORT_SCHEMA,
};
pub use generators::{
    gen_diagonal_lp, gen_diagonal_mixed, gen_lower_bound, gen_random, generate, Generated,
    GeneratorKind, GeneratorSpec, HiddenAnswer,
};
pub use reference::{reference_solve_diagonal, ReferenceSolution};
