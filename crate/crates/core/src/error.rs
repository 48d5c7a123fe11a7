//! Error type shared across the toolkit.

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Data that defeats a relative computation, e.g. a nonpositive running
    /// peak while segmenting drawdowns.
    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("need at least two drawdown events, found {found}")]
    NotEnoughEvents { found: usize },

    #[error("series never reaches {level} of the peak before the critical event")]
    NoWindow { level: String },

    #[error("window of {len} samples is shorter than the required {min}")]
    WindowTooShort { len: usize, min: usize },

    #[error("non-finite value in state or derivative")]
    NumericOverflow,

    #[error("state magnitude exceeded {bound:e} at step {step}")]
    BlowUp { step: usize, bound: f64 },

    #[error("rank-deficient design matrix in linear solve")]
    DegenerateDesign,

    #[error("fit failed: {0}")]
    FitFailed(String),

    #[error("no converged fits to aggregate")]
    NoEstimate,

    #[error("degenerate test: {0}")]
    DegenerateTest(String),

    #[error("paired test requires identical simulation-id sets")]
    InvalidPairing,

    #[error("experiment failed: {0}")]
    ExperimentFailed(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for the CLI: 0 ok, 2 config/usage, 3 experiment
    /// failure, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io(_) => 4,
            Error::ExperimentFailed(_) => 3,
            _ => 2,
        }
    }
}
