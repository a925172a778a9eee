use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid exponents: {0}")]
    InvalidExponents(String),

    #[error("no convergence after {iterations} iterations (last change {last_change:.3e})")]
    NoConvergence { iterations: usize, last_change: f64 },

    #[error("mesh failure: {0}")]
    MeshFailure(String),

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("degenerate scaling: exponent n - r - rn/p vanishes (p = r*)")]
    DegenerateScaling,

    #[error("function vanishes identically")]
    ZeroFunction,

    #[error("profiles not comparable: {0}")]
    NotComparable(String),

    #[error("pole at distance {distance:.4} from the boundary, need more than {required:.4}")]
    PoleTooClose { distance: f64, required: f64 },

    #[error("singular Möbius chain: {0}")]
    Singularity(String),

    #[error("step too large: dt * max speed = {step:.4e} must stay below h/2 = {limit:.4e}")]
    CflViolation { step: f64, limit: f64 },

    #[error("linear solver failure: {0}")]
    LinearSolver(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, LabError>;
