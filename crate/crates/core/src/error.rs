use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("masses (m1={m1}, m2={m2}) are not admissible: ratio must lie in [{lo}, {hi}]")]
    NotAdmissible { m1: f64, m2: f64, lo: f64, hi: f64 },

    #[error("coordinate {x} outside [{lo}, {hi}]")]
    OutOfDomain { x: f64, lo: f64, hi: f64 },

    #[error("coordinate {x} is closer than two cells to the boundary")]
    TooCloseToBoundary { x: f64 },

    #[error("no sign change of f on [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },

    #[error("flux -f_x(p) = {slope} is not positive")]
    NonpositiveSlope { slope: f64 },

    #[error("free boundary p = {p} left the admissible interval ({lo}, {hi})")]
    BoundaryCollision { p: f64, lo: f64, hi: f64 },

    #[error("time step must be positive and finite, got {0}")]
    InvalidTimeStep(f64),

    #[error("basis index {index} out of range for eigenspace of dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("eigensolver did not converge")]
    ConvergenceFailure,

    #[error("Newton iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("singular Jacobian (det = {det:e})")]
    SingularJacobian { det: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("at t = {t}: {source}")]
    AtTime {
        t: f64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Strips any time annotation and returns the underlying cause.
    pub fn root_cause(&self) -> &Error {
        match self {
            Error::AtTime { source, .. } => source.root_cause(),
            other => other,
        }
    }
}
