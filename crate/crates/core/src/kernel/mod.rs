//! Momentum-resolved gap equations solved by iteration on a radial grid.

mod grid;
mod kernels;
mod solver;

pub use grid::MomentumGrid;
pub use kernels::{DiscreteKernel, TabulatedKernel};
pub use solver::{
    branch_scan, gap_rhs, quadratic_dispersion, self_consistent_solve, BranchScan, GapProblem,
    InitialGuess, IterationControls, KernelSolution, Scheme, SeedFailure,
};

use thiserror::Error;

use crate::params::ParamError;
use crate::scalar::ScalarError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KernelError {
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error(transparent)]
    Scalar(#[from] ScalarError),
    #[error("shell [{sqrt_mu} - {epsilon}, {sqrt_mu} + {epsilon}] extends below p = 0")]
    ShellBelowZero { sqrt_mu: f64, epsilon: f64 },
    #[error("invalid momentum grid: {0}")]
    InvalidGrid(String),
    #[error("expected {expected} grid values, found {found}")]
    ShapeMismatch { expected: usize, found: usize },
    #[error("pairing kernel is not symmetric (max defect {0:e})")]
    AsymmetricKernel(f64),
    #[error("kernel file line {line}: {message}")]
    Csv { line: usize, message: String },
    #[error("{0}")]
    Io(String),
    #[error("invalid iteration controls: {0}")]
    InvalidControls(String),
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NotConverged {
        iterations: usize,
        residual: f64,
        last: Box<KernelSolution>,
    },
}

#[cfg(test)]
mod tests;
