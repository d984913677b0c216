use std::path::PathBuf;

/// Errors produced anywhere in the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter {name}: {reason} (got {value})")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("non-finite value in {what} at cell ({i}, {j}): {value}")]
    NonFinite {
        what: String,
        i: usize,
        j: usize,
        value: f64,
    },

    #[error("negative value in {what} at cell ({i}, {j}): {value}")]
    Negative {
        what: String,
        i: usize,
        j: usize,
        value: f64,
    },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("linear solver did not converge within {iterations} iterations (relative residual {residual:.3e})")]
    SolverDiverged { iterations: usize, residual: f64 },

    #[error("time step {dt:.6e} violates the stability bound {bound:.6e}")]
    CflViolation { dt: f64, bound: f64 },

    #[error("positivity failure in {field} at cell ({i}, {j}): {value:.6e} at t = {t}")]
    PositivityFailure {
        field: &'static str,
        i: usize,
        j: usize,
        value: f64,
        t: f64,
    },

    #[error("invalid initial data: {0}")]
    InvalidInitialData(String),

    #[error("step {index} at t = {t}: {source}")]
    StepFailed {
        index: usize,
        t: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("need at least 4 ledger records spanning the run, got {0}")]
    TooFewRecords(usize),

    #[error("record times are not increasing: {prev} then {next}")]
    NonIncreasingRecords { prev: f64, next: f64 },

    #[error("mass bound violated at t = {t}: integral {mass} exceeds m* = {m_star}")]
    MassBoundViolated { t: f64, mass: f64, m_star: f64 },

    #[error("pointwise estimate violated at t = {t}: residual {residual:.6e} exceeds tolerance {tolerance:.6e}")]
    PointwiseBoundViolated {
        t: f64,
        residual: f64,
        tolerance: f64,
    },

    #[error("{path}:{line}: {message}")]
    Config {
        path: String,
        line: usize,
        message: String,
    },

    #[error("snapshot {path}, line {line}: {message}")]
    SnapshotFormat {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("output directory {0} already holds run outputs")]
    OutputCollision(PathBuf),

    #[error("sweep parameter {0:?} is not sweepable (expected chi, xi or mu)")]
    UnknownSweepParameter(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Error {
        let path = path.into();
        move |source| Error::Io { path, source }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
