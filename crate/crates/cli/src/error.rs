use thiserror::Error;

/// Input errors. Every variant maps to exit code 1.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot parse config {path}: {message}")]
    ConfigParse { path: String, message: String },

    #[error("unknown model `{0}` (see `qopt list-models`)")]
    UnknownModel(String),

    #[error("unknown check `{0}` (see `qopt list-checks`)")]
    UnknownCheck(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("invalid parameters for model `{model}`: {message}")]
    InvalidParams { model: String, message: String },

    #[error("analysis failed at sweep point {point}: {source}")]
    Analysis {
        point: usize,
        #[source]
        source: qopt_core::Error,
    },

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot write CSV: {0}")]
    Csv(#[from] csv::Error),
}

pub type CliResult<T> = std::result::Result<T, CliError>;
