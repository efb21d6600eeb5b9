//! Level-set fuzzy arithmetic, fuzzy stochastic integrals and a Picard
//! solver for symmetric fuzzy stochastic Volterra equations with constant
//! delay, with Monte Carlo studies of convergence and continuous dependence.

pub mod cli_io;
pub mod coeffs;
pub mod experiments;
pub mod fuzzy;
pub mod integrals;
pub mod paths;
pub mod properties;
pub mod solver;
pub mod stats;

pub use fuzzy::{AlphaGrid, FuzzyError, FuzzyNumber, Interval};
pub use integrals::{Diffusion, Drift, FuzzyPath, Kernel};
pub use paths::{make_grid, BrownianPair, SeedSpec, TimeGrid};
pub use solver::{solve_path, ProblemSpec, SolveError, SolveReport, StoppingRule};
