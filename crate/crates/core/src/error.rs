use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("graph file rejected: {0}")]
    GraphFormat(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(
        "gossip did not reach the stopping rule within the budget \
         ({transmissions} transmissions, {iterations} iterations, relative error {rel_error:.3e})"
    )]
    BudgetExhausted {
        transmissions: u64,
        iterations: u64,
        rel_error: f64,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
