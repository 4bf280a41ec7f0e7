//! Perfect Bayesian Nash equilibria from the two game-tree programs: plans, behavioral
//! strategies, beliefs, and the solver entry point.

mod io;
mod programs;
mod solve;
mod strategy;

pub use io::{read_solution, solution_json, SolutionDoc};
pub use programs::*;
pub use solve::{solve_pbne, EquilibriumSolution, PbneError, PbneOptions};
pub use strategy::*;

#[cfg(test)]
mod tests;
