//! Sparse extreme-value regression.

pub mod baselines;
pub mod cli;
pub mod data;
pub mod diagnostics;
pub mod error;
pub mod loss;
pub mod penalty;
pub mod selection;
pub mod simulation;
pub mod solver;

pub use data::{read_csv, standardize, standardize_with, Coefficients, Dataset, ResponseColumn, StandardizeOptions};
pub use error::{Error, Result};
pub use loss::GammaLoss;
pub use penalty::{PenaltyFamily, PenaltySpec};
pub use solver::{fit, fit_path, lambda_max, FitConfig, FitResult};
