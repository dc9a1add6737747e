use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the identification library.
#[derive(Debug, Error)]
pub enum VttnError {
    #[error("size mismatch: {0}")]
    Size(String),

    #[error("mode {mode} out of range for a {order}-way tensor")]
    ModeOutOfRange { mode: usize, order: usize },

    #[error("dense allocation of {requested} elements exceeds the element budget of {budget}")]
    BudgetExceeded { requested: u128, budget: usize },

    #[error("tensor is not cubical: dims {0:?}")]
    NotCubical(Vec<usize>),

    #[error("invalid rank chain: {0}")]
    InvalidRanks(String),

    #[error("index {index} out of range (length {len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("invalid dataset: {0}")]
    Dataset(String),

    #[error("invalid solver configuration: {0}")]
    Config(String),

    #[error(
        "core {core} is underdetermined: {rows} equations for {unknowns} unknowns \
         (increase the number of samples or reduce the ranks)"
    )]
    UnderdeterminedCore { core: usize, rows: usize, unknowns: usize },

    #[error(
        "super-core ({core}, {next}) is underdetermined: {rows} equations for {unknowns} unknowns \
         (increase the number of samples or lower max_rank)",
        next = core + 1
    )]
    UnderdeterminedPair { core: usize, rows: usize, unknowns: usize },

    #[error("zero signal cannot be given a finite SNR")]
    ZeroSignal,

    #[error("model does not match data: {0}")]
    Mismatch(String),

    #[error("csv error in {path}: {message}")]
    Csv { path: PathBuf, message: String },

    #[error("model file: {0}")]
    ModelFile(String),

    #[error("model file checksum mismatch (stored {stored:#010x}, computed {computed:#010x})")]
    Checksum { stored: u32, computed: u32 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, VttnError>;
