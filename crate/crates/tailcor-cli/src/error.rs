use thiserror::Error;

/// Failures the front end can hit, each mapped to a nonzero exit.
#[derive(Debug, Error)]
pub enum CliError {
    /// Structural CSV problem, e.g. a ragged row.
    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },
    /// A cell that exists but cannot be used. Rows count data rows, the
    /// header is row 0.
    #[error("data error at row {row}, column {column}: {message}")]
    Data {
        row: usize,
        column: String,
        message: String,
    },
    /// Header or panel-level invariant violation.
    #[error("schema error: {0}")]
    Schema(String),
    /// Flag combinations the command cannot work with.
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Tail(#[from] tailcor::Error),
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, CliError>;
