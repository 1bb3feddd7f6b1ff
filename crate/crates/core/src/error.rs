use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("alternative {0} is not in the menu")]
    NotInMenu(usize),

    #[error("time point {0} is not on the grid")]
    UnknownTime(String),

    #[error("degenerate odds at t={t} for ({a}, {b}): p={p}")]
    DegenerateOdds { t: f64, a: usize, b: usize, p: f64 },

    #[error("missing choice table at t={t} for menu {menu:?}")]
    MissingTable { t: f64, menu: Vec<usize> },

    #[error("unsupported universe size {0}: need at least 3 alternatives")]
    UnsupportedSize(usize),

    #[error("data is not generated by a softmax process: {0}")]
    NotSoftmax(String),

    #[error("DDM is intransitive: worst cycle residual {residual:e} on {triple:?}")]
    Intransitive { triple: [usize; 3], residual: f64 },

    #[error("diffusion exceeded the step budget of {0} steps")]
    Runaway(u64),

    #[error("power iteration did not converge within {0} iterations")]
    NonConvergence(usize),

    #[error("invalid neural bias: {0}")]
    InvalidNeuralBias(String),

    #[error("replication {index} failed: {source}")]
    Replication {
        index: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },

    #[error("invalid input: {0}")]
    Invalid(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub(crate) fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema {
            path: path.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
