use thiserror::Error;

/// Errors raised across the simulator.
///
/// Variants split into two families that the CLI maps to different exit
/// codes: configuration/validation problems and numerical failures.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("quadrature did not converge: doubling to {points} points moved entry ({row}, {col}) by {change:.3e} relative")]
    QuadratureNotConverged {
        points: usize,
        row: usize,
        col: usize,
        change: f64,
    },

    #[error("matrix is not positive semidefinite: min eigenvalue {min_eig:.3e}, max eigenvalue {max_eig:.3e}")]
    NotPsd { min_eig: f64, max_eig: f64 },

    #[error("near-singular impedance matrix (condition number {0:.3e})")]
    NearSingularImpedance(f64),

    #[error("linear solve failed: {0}")]
    Solver(String),

    #[error("root finding failed: {0}")]
    RootFinding(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn invalid(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.into(),
            reason: reason.into(),
        }
    }

    /// Wraps the error with a scenario or stage description.
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// True for configuration/validation failures, false for numerical ones.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::Domain(_)
            | Error::InvalidParameter { .. }
            | Error::DimensionMismatch(_)
            | Error::Config(_) => true,
            Error::Context { source, .. } => source.is_validation(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
