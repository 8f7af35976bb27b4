use thiserror::Error;

/// Errors raised while building instances, evaluating expressions or running solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },

    #[error("unknown identifier `{name}` at position {pos}")]
    UnknownIdentifier { pos: usize, name: String },

    #[error("division by zero")]
    DivisionByZero,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("undefined belief: signal {signal} has zero probability at t = {t}")]
    UndefinedBelief { t: f64, signal: u8 },

    #[error("grid {nt}x{nq} exceeds the allocation-variable cap {cap}")]
    GridCap { nt: usize, nq: usize, cap: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("linear program: {0}")]
    Lp(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by user input (config files, expressions, arguments).
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Syntax { .. }
                | Error::UnknownIdentifier { .. }
                | Error::InvalidDistribution(_)
                | Error::InvalidInstance(_)
                | Error::InvalidArgument(_)
                | Error::GridCap { .. }
                | Error::Config(_)
                | Error::Json(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
