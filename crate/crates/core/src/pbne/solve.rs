use std::time::{Duration, Instant};

use crate::evaluation::{attacker_best_response, defender_best_response};
use crate::lp::{solve_lp, LpError, LpSolution, LpStatus, SolveStats, SolverOptions};
use crate::model::DragInstance;
use crate::tree::{GameTree, TreeError, DEFAULT_SIZE_CAP};

use super::programs::{build_attacker_lp, build_defender_lp};
use super::strategy::{
    recover_attacker_policy, recover_defender_policy, AttackerPlan, AttackerStrategy, BeliefMap, DefenderPlan,
    DefenderStrategy,
};

#[derive(Debug, thiserror::Error)]
pub enum PbneError {
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error("{program} program: {source}")]
    Lp { program: &'static str, source: LpError },
    #[error("{program} program ended with status {status:?}")]
    NotOptimal { program: &'static str, status: LpStatus },
    #[error("defender value {defender} and attacker value {attacker} differ by {gap:e}")]
    DualityGap { defender: f64, attacker: f64, gap: f64 },
    #[error("plan has negative mass {value:e} at history {history}")]
    InvalidPlan { history: usize, value: f64 },
    #[error("{0}")]
    Shape(String),
    #[error("{side} can gain {gain:e} by deviating at history {history}")]
    Validation { side: &'static str, history: String, gain: f64 },
}

#[derive(Debug, Clone)]
pub struct PbneOptions {
    pub solver: SolverOptions,
    pub size_cap: usize,
    /// Largest accepted gap between the two program values, relative to `max(1, |value|)`.
    pub gap_accept: f64,
    /// When set, both best responses are computed and any gain above `validation_tol`
    /// (relative) is an error.
    pub validate: bool,
    pub validation_tol: f64,
}

impl Default for PbneOptions {
    fn default() -> Self {
        PbneOptions {
            solver: SolverOptions::default(),
            size_cap: DEFAULT_SIZE_CAP,
            gap_accept: 1e-6,
            validate: false,
            validation_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EquilibriumSolution {
    pub tree: GameTree,
    /// Optimum of the defender program: the defender's ex-ante equilibrium payoff.
    pub game_value: f64,
    pub attacker_value: f64,
    pub duality_gap: f64,
    pub defender_plan: DefenderPlan,
    pub attacker_plan: AttackerPlan,
    pub defender: DefenderStrategy,
    pub attacker: AttackerStrategy,
    pub beliefs: BeliefMap,
    pub defender_stats: SolveStats,
    pub attacker_stats: SolveStats,
    pub build_time: Duration,
    pub solve_time: Duration,
}

fn optimal(program: &'static str, r: Result<LpSolution, LpError>) -> Result<LpSolution, PbneError> {
    let sol = r.map_err(|source| PbneError::Lp { program, source })?;
    if sol.status != LpStatus::Optimal {
        return Err(PbneError::NotOptimal { program, status: sol.status });
    }
    Ok(sol)
}

/// Builds the tree, solves both programs independently, and recovers strategies and
/// beliefs. The two optima must agree within `gap_accept`.
pub fn solve_pbne(inst: &DragInstance, opts: &PbneOptions) -> Result<EquilibriumSolution, PbneError> {
    let start = Instant::now();
    let tree = GameTree::build(inst, opts.size_cap)?;
    let (dlp, alp) = rayon::join(|| build_defender_lp(&tree, inst), || build_attacker_lp(&tree, inst));
    let build_time = start.elapsed();
    let start = Instant::now();
    let (dsol, asol) = rayon::join(|| solve_lp(&dlp, &opts.solver), || solve_lp(&alp, &opts.solver));
    let solve_time = start.elapsed();
    drop((dlp, alp));
    let dsol = optimal("defender", dsol)?;
    let asol = optimal("attacker", asol)?;
    let gap = (dsol.objective - asol.objective).abs();
    if gap > opts.gap_accept * dsol.objective.abs().max(1.0) {
        return Err(PbneError::DualityGap { defender: dsol.objective, attacker: asol.objective, gap });
    }
    let defender_plan = DefenderPlan::from_lp(&tree, inst.num_types(), &dsol.primal);
    let attacker_plan = AttackerPlan::from_lp(&tree, inst, &asol.primal);
    let defender = recover_defender_policy(&tree, &defender_plan)?;
    let attacker = recover_attacker_policy(&tree, inst, &attacker_plan)?;
    let beliefs = BeliefMap::compute(&tree, &defender, inst.prior());
    let sol = EquilibriumSolution {
        game_value: dsol.objective,
        attacker_value: asol.objective,
        duality_gap: gap,
        defender_plan,
        attacker_plan,
        defender,
        attacker,
        beliefs,
        defender_stats: dsol.stats,
        attacker_stats: asol.stats,
        build_time,
        solve_time,
        tree,
    };
    if opts.validate {
        validate(inst, &sol, opts.validation_tol)?;
    }
    Ok(sol)
}

/// Checks that neither side gains by a unilateral deviation, reporting the first history
/// on the deviating path where the best response departs from the solution.
fn validate(inst: &DragInstance, sol: &EquilibriumSolution, tol: f64) -> Result<(), PbneError> {
    let tree = &sol.tree;
    let scale = sol.game_value.abs().max(1.0);
    let abr = attacker_best_response(tree, inst, &sol.defender_plan);
    let gain = sol.game_value - abr.value;
    if gain > tol * scale {
        let h = first_departure(tree, |h| {
            !tree.is_leaf(h) && sol.attacker.policy(h).iter().zip(abr.strategy.policy(h)).any(|(a, b)| (a - b).abs() > 1e-9)
        });
        return Err(PbneError::Validation { side: "attacker", history: tree.encode(inst, h), gain });
    }
    let dbr = defender_best_response(tree, inst, &sol.attacker_plan, inst.prior());
    let gain = dbr.value - sol.game_value;
    if gain > tol * scale {
        let k = inst.num_types();
        let h = first_departure(tree, |h| {
            (0..k).any(|t| {
                sol.defender.policy(h, t).iter().zip(dbr.strategy.policy(h, t)).any(|(a, b)| (a - b).abs() > 1e-9)
            })
        });
        return Err(PbneError::Validation { side: "defender", history: tree.encode(inst, h), gain });
    }
    Ok(())
}

fn first_departure(tree: &GameTree, differs: impl Fn(usize) -> bool) -> usize {
    (0..tree.len()).find(|&h| differs(h)).unwrap_or(0)
}
