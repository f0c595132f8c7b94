use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid or inconsistent parameters in a comb, plan or scenario.
    #[error("configuration error: {0}")]
    Config(String),

    /// The requested model is used outside the regime where it holds.
    #[error("model validity error: {0}")]
    ModelValidity(String),

    #[error("discretization error: step {step:e} s must be below {limit:e} s")]
    Discretization { step: f64, limit: f64 },

    #[error("estimation error: {0}")]
    Estimation(String),

    #[error("plan error: {0}")]
    Plan(String),

    #[error("normalization error: {0}")]
    Normalization(String),

    #[error("fit error: {0}")]
    Fit(String),

    #[error("oracle scope exceeded: {0}")]
    OracleScope(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("unknown scenario `{name}`; available: {available}")]
    UnknownScenario { name: String, available: String },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("config parse error: {0}")]
    ConfigParse(#[from] toml::de::Error),

    #[error("config serialize error: {0}")]
    ConfigSerialize(#[from] toml::ser::Error),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_)
            | Error::Plan(_)
            | Error::Discretization { .. }
            | Error::ModelValidity(_)
            | Error::UnknownScenario { .. }
            | Error::ConfigParse(_)
            | Error::ConfigSerialize(_) => 2,
            _ => 3,
        }
    }
}
