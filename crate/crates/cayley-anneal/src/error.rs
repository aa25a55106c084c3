//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Requested a graph family outside the supported construction rules.
    #[error("unsupported construction: {0}")]
    Unsupported(String),

    /// A planar layout cannot satisfy the non-edge distance rule.
    #[error("planar layout infeasible: {0}")]
    PlanarInfeasible(String),

    /// Two atoms share the same position, so the pair coupling diverges.
    #[error("coincident atoms {0} and {1}")]
    CoincidentAtoms(usize, usize),

    /// A state or operator was given with the wrong Hilbert-space dimension.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// The request exceeds the enumeration or dense-solver budget.
    #[error("problem too large: {0}")]
    TooLarge(String),

    /// An iterative eigensolver failed to reach its residual target.
    #[error("eigensolver did not converge: residual {residual:.3e} after {iterations} iterations (target {target:.3e})")]
    ConvergenceFailure {
        iterations: usize,
        residual: f64,
        target: f64,
    },

    /// The adaptive stepper could not meet its accuracy contract.
    #[error("step control failed: fidelity change {achieved:.3e} above tolerance {tolerance:.3e} after {rounds} refinement rounds")]
    StepControlFailure {
        rounds: usize,
        achieved: f64,
        tolerance: f64,
    },

    /// A density matrix developed a negative eigenvalue beyond tolerance.
    #[error("positivity violation: min eigenvalue {min_eigenvalue:.3e} at t = {t}")]
    PositivityViolation { t: f64, min_eigenvalue: f64 },

    /// Input state is not normalized to within the sampling tolerance.
    #[error("state not normalized: |norm - 1| = {0:.3e}")]
    NotNormalized(f64),

    /// Readout corruption was applied to a record that already carries it.
    #[error("SPAM corruption already applied to this record")]
    DoubleApplication,

    /// Two hologram target sites coincide.
    #[error("degenerate targets {0} and {1}")]
    DegenerateTargets(usize, usize),

    /// A parameter violated a documented precondition.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Configuration file could not be parsed or failed validation.
    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Stable machine-readable tag for error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Unsupported(_) => "unsupported",
            Error::PlanarInfeasible(_) => "planar-infeasible",
            Error::CoincidentAtoms(..) => "coincident-atoms",
            Error::DimensionMismatch { .. } => "dimension-mismatch",
            Error::TooLarge(_) => "too-large",
            Error::ConvergenceFailure { .. } => "convergence-failure",
            Error::StepControlFailure { .. } => "step-control-failure",
            Error::PositivityViolation { .. } => "positivity-violation",
            Error::NotNormalized(_) => "not-normalized",
            Error::DoubleApplication => "double-application",
            Error::DegenerateTargets(..) => "degenerate-targets",
            Error::InvalidParameter(_) => "invalid-parameter",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
            Error::Parse(_) => "parse",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
