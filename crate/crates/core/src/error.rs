use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dataset needs at least two rows")]
    EmptyData,

    #[error("column {0} has zero sample variance")]
    ConstantColumn(usize),

    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot parse cell at row {row}, column {col}")]
    Parse { row: usize, col: usize },

    #[error("non-finite value at row {row}, column {col}")]
    NonFiniteValue { row: usize, col: usize },

    #[error("response column `{0}` not found")]
    MissingColumn(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("residual magnitude {0:e} would overflow the power loss")]
    ResidualOverflow(f64),

    #[error("penalty derivatives are undefined at a zero coefficient")]
    ZeroCoefficient,

    #[error("data must be standardized before fitting")]
    NotStandardized,

    #[error("lambda grid is empty")]
    EmptyLambdaGrid,

    #[error("backtracking step fell below 1e-20 without sufficient decrease")]
    StepUnderflow,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("cross-validation split leaves too few rows: {0}")]
    FoldTooSmall(String),

    #[error("subsample of {0} rows is too small")]
    SubsampleTooSmall(usize),

    #[error("regularization path is empty")]
    EmptyPath,

    #[error("series of length {len} is shorter than the adaptive window {window}")]
    SeriesTooShort { len: usize, window: usize },

    #[error("invalid scenario: {0}")]
    InvalidSpec(String),

    #[error("active-set system is singular (condition number {0:e})")]
    SingularSystem(f64),

    #[error("active set is empty")]
    EmptyActiveSet,
}
