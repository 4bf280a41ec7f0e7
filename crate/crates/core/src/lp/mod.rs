//! Sparse linear programs, a bundled simplex solver, and standard-format exchange with
//! external solvers.
//!
//! ```
//! use drag::lp::{solve_lp, LpBuilder, Relation, Sense, SolverOptions};
//!
//! let mut b = LpBuilder::new(Sense::Minimize);
//! let x = b.add_var("x", f64::NEG_INFINITY, f64::INFINITY);
//! b.set_objective(x, 1.0);
//! b.add_constraint("c", vec![(x, 1.0)], Relation::Ge, 1.0);
//! let sol = solve_lp(&b.seal().unwrap(), &SolverOptions::default()).unwrap();
//! assert!((sol.objective - 1.0).abs() < 1e-12);
//! ```

mod export;
mod lu;
mod problem;
mod simplex;
mod solution;

pub use export::{export_lp, LpFormat};
pub use problem::{Constraint, LpBuilder, LpProblem, Relation, Sense, Variable};
pub use solution::{import_solution, write_solution};

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum LpError {
    #[error("variable {var} has invalid bounds [{lower}, {upper}]")]
    InvalidBounds { var: String, lower: f64, upper: f64 },
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("row {row} has duplicate entries for column {col}")]
    DuplicateEntry { row: String, col: usize },
    #[error("row {row} references column {col} out of range")]
    IndexOutOfRange { row: String, col: usize },
    #[error("invalid name {0:?}")]
    InvalidName(String),
    #[error("name collision on {0:?}")]
    NameCollision(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("solution parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("solution is missing variable {0:?}")]
    MissingVariable(String),
    #[error("imported point is infeasible (residual {residual:e})")]
    InfeasiblePoint { residual: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

/// Entering-variable rule.
///
/// `Bland` is Bland's smallest-index rule for both entering and leaving choices.
/// `DevexBland` prices by Devex reference weights and switches to Bland's rule after a
/// long run of degenerate pivots, returning to Devex after the next improving pivot, so
/// it keeps Bland's termination guarantee.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PivotRule {
    Bland,
    #[default]
    DevexBland,
}

#[derive(Debug, Clone)]
pub struct SolverOptions {
    pub feas_tol: f64,
    pub gap_tol: f64,
    pub iter_cap: usize,
    pub pivot_rule: PivotRule,
    pub refactor_interval: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            feas_tol: 1e-9,
            gap_tol: 1e-7,
            iter_cap: 10_000_000,
            pivot_rule: PivotRule::default(),
            refactor_interval: 100,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub iterations: usize,
    pub phase1_iterations: usize,
    pub refactorizations: usize,
    pub bland_switches: usize,
    #[serde(default)]
    pub basis_repairs: usize,
    pub pivot_rule: PivotRule,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub duality_gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub objective: f64,
    pub dual_objective: f64,
    pub primal: Vec<f64>,
    /// Shadow prices `d objective / d rhs`, one per constraint.
    pub dual: Option<Vec<f64>>,
    pub reduced_costs: Option<Vec<f64>>,
    pub stats: SolveStats,
    /// Unbounded: a primal improving direction. Infeasible: phase-one row multipliers.
    pub ray: Option<Vec<f64>>,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    pub fn duality_gap(&self) -> f64 {
        (self.objective - self.dual_objective).abs()
    }
}

/// Solves `problem` with the bundled simplex. An `Optimal` result is certified: primal and
/// dual residuals are within `feas_tol` (scaled by the data magnitude) and the duality gap
/// within `gap_tol` relative to `max(1, |objective|)`; otherwise a numerical error is
/// returned.
pub fn solve_lp(problem: &LpProblem, opts: &SolverOptions) -> Result<LpSolution, LpError> {
    let sol = simplex::solve(problem, opts)?;
    if sol.status == LpStatus::Optimal {
        let scale = data_scale(problem);
        let s = &sol.stats;
        if s.primal_residual > opts.feas_tol * scale
            || s.dual_residual > opts.feas_tol * scale
            || sol.duality_gap() > opts.gap_tol * sol.objective.abs().max(1.0)
        {
            return Err(LpError::Numerical(format!(
                "optimal basis failed certification: primal {:e}, dual {:e}, gap {:e}",
                s.primal_residual,
                s.dual_residual,
                sol.duality_gap()
            )));
        }
    }
    Ok(sol)
}

fn data_scale(p: &LpProblem) -> f64 {
    let mut s = 1.0f64;
    for c in p.objective() {
        s = s.max(c.abs());
    }
    for row in p.constraints() {
        s = s.max(row.rhs.abs());
        for &(_, a) in &row.coeffs {
            s = s.max(a.abs());
        }
    }
    s
}
