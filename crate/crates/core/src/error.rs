use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("degenerate Poisson ratio {0}: 1 - nu or 1 + nu vanishes")]
    DegeneratePoisson(f64),
    #[error("unsupported BDF order {0} (expected 1 or 2)")]
    UnsupportedOrder(usize),
    #[error("tolerance {0} must lie in (0, 1)")]
    InvalidTolerance(f64),
    #[error("infeasible configuration: {0}")]
    Infeasible(String),
    #[error("matrix is not symmetric positive definite: {0}")]
    NotSpd(String),
    #[error("singular system: {0}")]
    Singular(String),
    #[error("Newton failed to converge at step {step}: relative residual {residual:.3e} after {iterations} iterations")]
    NewtonDiverged {
        step: usize,
        iterations: usize,
        residual: f64,
    },
    #[error("rank {requested} out of range (at most {available})")]
    RankOutOfRange { requested: usize, available: usize },
    #[error("empty warm-start store")]
    EmptyStore,
    #[error("format error in {context}: {message}")]
    Format { context: String, message: String },
    #[error("missing {0}")]
    Missing(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn format(context: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Format {
            context: context.into(),
            message: message.into(),
        }
    }

    /// True for failures of the numerics rather than of inputs or I/O.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NewtonDiverged { .. } | Error::Singular(_) | Error::NotSpd(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
