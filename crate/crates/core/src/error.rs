use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown gauge family `{0}`")]
    UnknownFamily(String),

    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("invalid table gauge: {0}")]
    InvalidTable(String),

    #[error("argument must be positive, got {0}")]
    NonPositiveArgument(f64),

    #[error("gauge evaluation overflowed at t = {0}")]
    Overflow(f64),

    #[error("search bracket exhausted: {0}")]
    BracketExhausted(String),

    #[error("gauge is not an N-function: {0}")]
    NotNFunction(String),

    #[error("gauge class precondition failed: {0}")]
    ClassPrecondition(String),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("invalid measure space: {0}")]
    InvalidSpace(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("grid must have at least one step")]
    EmptyGrid,

    #[error("breakpoint {0} is not aligned with the time grid")]
    MisalignedBreakpoint(f64),

    #[error("adaptedness violation: read index {requested} while only history up to {available} is visible")]
    FutureAccess { requested: usize, available: usize },

    #[error("block length m = {m} is incompatible with {steps} grid steps on horizon {horizon}")]
    IncompatibleCoarsening { m: usize, steps: usize, horizon: f64 },

    #[error("infeasible moment constant: c_delta = {c_delta} must be below beta^-p = {limit}")]
    InfeasibleConstant { c_delta: f64, limit: f64 },

    #[error("empty lambda grid")]
    EmptyLambdaGrid,

    #[error("uncertified (xi, N) pairing: {0}")]
    Uncertified(String),

    #[error("empty report list")]
    EmptyReports,

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
