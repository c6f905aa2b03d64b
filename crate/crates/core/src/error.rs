use thiserror::Error;

/// Failure modes shared by every solver and diagnostic in the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("degenerate coordinate map: min d(phi)/dy3 = {min_jacobian:.3e}")]
    DegenerateMap { min_jacobian: f64 },

    #[error("interface left the admissible band: max |f| = {max_abs:.4} > {limit:.4}")]
    CeilingViolated { max_abs: f64, limit: f64 },

    #[error("solver did not reach tol {tol:.1e}: residual {residual:.3e} after {iterations} iterations")]
    SolverDiverged {
        tol: f64,
        iterations: usize,
        residual: f64,
    },

    #[error("boundary data is not mean-zero (mean = {mean:.3e})")]
    NotMeanZero { mean: f64 },

    #[error("Neumann compatibility defect {defect:.3e} exceeds tolerance")]
    ProjectionIncompatible { defect: f64 },

    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    #[error("need at least {needed} saved states, got {got}")]
    InsufficientHistory { needed: usize, got: usize },

    #[error("stability lost at t = {t:.4}: taylor min {taylor_min:.4e}, lambda min {lambda_min:.4e}")]
    StabilityLost {
        t: f64,
        taylor_min: f64,
        lambda_min: f64,
    },

    #[error("time step {dt:.3e} exceeds the stability bound {bound:.3e}")]
    TimeStepTooLarge { dt: f64, bound: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    ConfigInvalid(Vec<String>),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
