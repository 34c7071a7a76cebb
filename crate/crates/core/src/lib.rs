//! Gap equations for a fermion model with competing mean-field and pairing
//! interactions: exact Fermi-surface solutions, closed-form limits, a
//! momentum-resolved iterative solver and phase-diagram sweeps.

pub mod asymptotics;
pub mod cli;
pub mod kernel;
pub mod params;
pub mod phase;
pub mod scalar;
pub mod solution;
pub mod thermal;

pub use params::{ModelParams, ParamError, ReducedParams};
pub use solution::{BogoliubovCoefficients, GapSolution, PhaseLabel, SolveReport};
