use thiserror::Error;

#[derive(Debug, Error)]
pub enum QlgError {
    /// An input violated an operation's precondition.
    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid mixture weights: {0}")]
    InvalidWeights(String),

    #[error("singular evaluation: {0}")]
    Singular(String),

    /// Integrator step budget exceeded; `scale` names the offending term.
    #[error("stability budget violated by {scale}: dt * {value:.3e} = {product:.3e} > {limit}")]
    Stability {
        scale: String,
        value: f64,
        product: f64,
        limit: f64,
    },

    #[error("numerical invariant violated: {0}")]
    Invariant(String),

    #[error("no convergence: {0}")]
    NonConvergence(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Serialize(String),
}

impl QlgError {
    pub(crate) fn pre(msg: impl Into<String>) -> Self {
        QlgError::Precondition(msg.into())
    }

    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            QlgError::Config(_) => 2,
            QlgError::NonConvergence(_) => 3,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, QlgError>;
