use thiserror::Error;

/// Crate-wide error type.
///
/// Degenerate inputs (too-short sequences, a single distinct symbol,
/// sub-threshold sample sizes) are reported explicitly instead of
/// returning silent zeros or sentinel values.
#[derive(Debug, Error)]
pub enum Error {
    /// Input is structurally valid but too degenerate for the metric.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// A parameter or input violates the operation's contract.
    #[error("invalid argument: {0}")]
    Invalid(String),

    /// A symbol was not found in the alphabet in use.
    #[error("symbol {0:?} not in alphabet")]
    UnknownSymbol(String),

    #[error("{path}: {message}")]
    InputFile { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
