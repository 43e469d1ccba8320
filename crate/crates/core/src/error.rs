use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("t = {t} lies outside the drive domain [0, {end}]")]
    Domain { t: f64, end: f64 },

    #[error("cutoff overflow at t = {time}: tail population {tail:.3e} exceeds threshold {threshold:.1e}")]
    CutoffOverflow { time: f64, tail: f64, threshold: f64 },

    #[error("integrator failure at t = {time}: {reason}")]
    IntegratorFailure { time: f64, reason: String },

    #[error("oracle propagator refuses dimension {dim} (limit {limit})")]
    OracleScaleExceeded { dim: usize, limit: usize },

    #[error("p(1-,1-) never dips below 0.5; no critical time in this trajectory")]
    NoCrossing,

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("config parse error: {0}")]
    Parse(String),

    #[error("{what}: {source}")]
    Member { what: String, source: Box<Error> },
}

impl Error {
    /// Machine-readable category, used for CLI exit diagnostics.
    pub fn category(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) | Error::Validation(_) | Error::Parse(_) | Error::Domain { .. } => {
                "validation"
            }
            Error::CutoffOverflow { .. } => "cutoff-overflow",
            Error::IntegratorFailure { .. } => "integrator-failure",
            Error::OracleScaleExceeded { .. } => "oracle-scale-exceeded",
            Error::NoCrossing => "no-crossing",
            Error::Io(_) => "io",
            Error::Member { source, .. } => source.category(),
        }
    }

    /// Process exit code associated with [`Error::category`].
    pub fn exit_code(&self) -> i32 {
        match self.category() {
            "validation" => 2,
            "integrator-failure" => 3,
            "cutoff-overflow" => 4,
            "io" => 5,
            _ => 1,
        }
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
