//! Equilibrium computation for deceptive resource allocation games: a defender who
//! protects one of several assets allocates resources while an attacker, who does not know
//! which asset is real, moves through a graph and learns from the allocations it observes.
//!
//! The crate builds the explicit game tree, solves the defender and attacker linear
//! programs with a bundled simplex, recovers behavioral strategies and beliefs, and
//! evaluates profiles against best responses, baselines and rollouts.

// Index loops mirror the math and often touch several arrays at once.
#![allow(clippy::needless_range_loop)]

pub mod cli;
pub mod evaluation;
pub mod lp;
pub mod model;
pub mod pbne;
pub mod tree;
