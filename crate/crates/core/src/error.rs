use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix dimension {n} exceeds the dense limit {limit}")]
    DenseLimit { n: usize, limit: usize },

    #[error("eigendecomposition did not converge after {sweeps} sweeps")]
    NoConvergence { sweeps: usize },

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("payoff spectrum [{min}, {max}] leaves [0, 1]; width {width} is underestimated")]
    WidthViolation { min: f64, max: f64, width: f64 },

    #[error("sparsified payoff deviates from its expectation by {deviation}, above the allowance {allowance}")]
    Sparsification { deviation: f64, allowance: f64 },

    #[error("dual vector rejected: {0}")]
    InfeasibleDual(String),

    #[error("averaged dual still infeasible after {rounds} rounds (slack {slack}); raise the round cap or loosen δ")]
    RoundCap { rounds: usize, slack: f64 },

    #[error("solver contract violated: {0}")]
    ContractViolation(String),

    #[error("oracle aborted at round {round}: {reason}")]
    OracleAborted { round: usize, reason: String },

    #[error("linear program: {0}")]
    Lp(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
