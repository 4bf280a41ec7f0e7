//! Exact evaluation of strategy profiles, best-response oracles, the full-information
//! benchmark, baselines, and Monte-Carlo rollouts.
//!
//! All values are the defender's payoff. The attacker minimizes it.

mod baselines;
mod report;
mod rollout;
mod svg;

pub use baselines::{attacker_baseline, defender_baseline, Baseline, ATTACKER_BASELINES, DEFENDER_BASELINES};
pub use report::{
    deviation_table, evaluate_profile, DeviationRow, EquilibriumRef, EvaluationReport, Exploitability, FullInformation,
    DEVIATION_SLACK,
};
pub use rollout::{rollout, write_log, EpisodeRecord, RolloutOptions, RolloutStats};
pub use svg::trajectory_svg;

use crate::model::{DragInstance, RewardMode};
use crate::pbne::{AttackerPlan, AttackerStrategy, DefenderPlan, DefenderStrategy};
use crate::tree::GameTree;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("the full-information benchmark needs the default reward rule")]
    UnsupportedRewards,
    #[error("unknown baseline {0:?}")]
    UnknownBaseline(String),
    #[error("value of deception is undefined when the full-information value is 0")]
    ZeroBenchmark,
}

/// Per-history values of type `θ` under the profile, by backward induction: the stage
/// term `σ_hᵀ R τ_h` plus transition-weighted child values, terminal payoff at leaves.
pub fn type_values(
    tree: &GameTree,
    inst: &DragInstance,
    attacker: &AttackerStrategy,
    defender: &DefenderStrategy,
    theta: usize,
) -> Vec<f64> {
    let k = inst.num_types();
    let acts_of = |h: usize| inst.action_space(tree.state(h));
    let mut val = vec![0.0; tree.len()];
    for h in (0..tree.len()).rev() {
        if tree.is_leaf(h) {
            val[h] = inst.terminal_payoff(tree.state(h), theta);
            continue;
        }
        let tau = defender.policy(h, theta);
        let mut total = 0.0;
        for (j, (&e, &s)) in acts_of(h).iter().zip(attacker.policy(h)).enumerate() {
            if s == 0.0 {
                continue;
            }
            let mut branch = 0.0;
            for v in 0..k {
                if tau[v] == 0.0 {
                    continue;
                }
                let cont: f64 = tree.outcome_children(inst, h, j, v).map(|c| tree.node(c).prob * val[c]).sum();
                branch += tau[v] * (inst.stage_reward(e, theta, v) + cont);
            }
            total += s * branch;
        }
        val[h] = total;
    }
    val
}

/// Expected defender payoff from `h` when the type is `θ`.
pub fn type_value(
    tree: &GameTree,
    inst: &DragInstance,
    h: usize,
    attacker: &AttackerStrategy,
    defender: &DefenderStrategy,
    theta: usize,
) -> f64 {
    type_values(tree, inst, attacker, defender, theta)[h]
}

/// `Σ_θ b(θ) V^θ(h)`.
pub fn ex_ante_value(
    tree: &GameTree,
    inst: &DragInstance,
    h: usize,
    belief: &[f64],
    attacker: &AttackerStrategy,
    defender: &DefenderStrategy,
) -> f64 {
    belief
        .iter()
        .enumerate()
        .filter(|(_, &b)| b != 0.0)
        .map(|(t, &b)| b * type_value(tree, inst, h, attacker, defender, t))
        .sum()
}

/// Ex-ante value at the root computed forward: each history's joint type probability is
/// propagated from the prior and every stage payoff is weighted by it. Shares no code
/// with [`type_values`].
pub fn forward_value(
    tree: &GameTree,
    inst: &DragInstance,
    attacker: &AttackerStrategy,
    defender: &DefenderStrategy,
    prior: &[f64],
) -> f64 {
    let k = inst.num_types();
    let mut reach = vec![0.0; tree.len() * k];
    reach[..k].copy_from_slice(prior);
    let mut total = 0.0;
    for h in 0..tree.len() {
        let node = tree.node(h);
        if let Some(p) = node.parent() {
            let acts = inst.action_space(tree.state(p));
            let j = acts.iter().position(|&e| e == node.edge as usize).expect("incoming edge is a move");
            for t in 0..k {
                reach[h * k + t] = reach[p * k + t]
                    * attacker.policy(p)[j]
                    * defender.policy(p, t)[node.alloc as usize]
                    * node.prob;
            }
        }
        for t in 0..k {
            let r = reach[h * k + t];
            if r == 0.0 {
                continue;
            }
            if tree.is_leaf(h) {
                total += r * inst.terminal_payoff(tree.state(h), t);
            } else {
                for (&e, &s) in inst.action_space(tree.state(h)).iter().zip(attacker.policy(h)) {
                    for (v, &d) in defender.policy(h, t).iter().enumerate() {
                        total += r * s * d * inst.stage_reward(e, t, v);
                    }
                }
            }
        }
    }
    total
}

/// Full-information benchmark: the attacker knows the type, so the defender allocates to
/// it every step and the attacker solves a shortest-path problem with horizon.
pub fn full_information_value(inst: &DragInstance) -> Result<FullInformation, EvalError> {
    if !matches!(inst.reward_mode(), RewardMode::Standard) {
        return Err(EvalError::UnsupportedRewards);
    }
    let g = inst.graph();
    let n = g.node_count();
    let horizon = inst.horizon();
    let mut per_type = Vec::with_capacity(inst.num_types());
    for theta in 0..inst.num_types() {
        // next[s] = J(θ, s, t+1)
        let mut next: Vec<f64> = (0..n).map(|s| inst.terminal_payoff(s, theta)).collect();
        for t in (0..horizon).rev() {
            let cur: Vec<f64> = (0..n)
                .map(|s| {
                    if inst.is_terminal_at(s, t) {
                        return inst.terminal_payoff(s, theta);
                    }
                    inst.action_space(s)
                        .iter()
                        .map(|&e| {
                            let edge = g.edge(e);
                            edge.transition.iter().map(|&(s2, p)| p * (edge.weight + next[s2])).sum::<f64>()
                        })
                        .fold(f64::INFINITY, f64::min)
                })
                .collect();
            next = cur;
        }
        per_type.push(next[inst.s0()]);
    }
    Ok(FullInformation { mixture: mixture(inst.prior(), &per_type), per_type })
}

pub fn mixture(prior: &[f64], per_type: &[f64]) -> f64 {
    prior.iter().zip(per_type).map(|(b, v)| b * v).sum()
}

/// `(V_LP - V_FI) / |V_FI|`.
pub fn value_of_deception(equilibrium_value: f64, full_information: f64) -> Result<f64, EvalError> {
    if full_information == 0.0 {
        return Err(EvalError::ZeroBenchmark);
    }
    Ok((equilibrium_value - full_information) / full_information.abs())
}

#[derive(Debug, Clone)]
pub struct AttackerBestResponse {
    pub strategy: AttackerStrategy,
    pub value: f64,
    /// Mass-weighted continuation value at every history.
    pub values: Vec<f64>,
}

/// Attacker best response against a defender realization plan. Ties go to the lowest
/// action index.
pub fn attacker_best_response(tree: &GameTree, inst: &DragInstance, plan: &DefenderPlan) -> AttackerBestResponse {
    let k = inst.num_types();
    let mut val = vec![0.0; tree.len()];
    let mut choice = vec![0usize; tree.len()];
    for h in (0..tree.len()).rev() {
        let s = tree.state(h);
        if tree.is_leaf(h) {
            val[h] = (0..k).map(|t| plan.mass(h, t) * inst.terminal_payoff(s, t)).sum();
            continue;
        }
        let mut best = (f64::INFINITY, 0);
        for (j, &e) in inst.action_space(s).iter().enumerate() {
            let mut x = 0.0;
            for t in 0..k {
                for (v, &z) in plan.z(h, t).iter().enumerate() {
                    x += z * inst.stage_reward(e, t, v);
                }
            }
            x += tree.action_children(inst, h, j).map(|c| val[c]).sum::<f64>();
            if x < best.0 {
                best = (x, j);
            }
        }
        val[h] = best.0;
        choice[h] = best.1;
    }
    let strategy = AttackerStrategy::from_fn(tree, inst, |h| {
        let mut p = vec![0.0; inst.action_space(tree.state(h)).len()];
        p[choice[h]] = 1.0;
        p
    });
    AttackerBestResponse { strategy, value: val[0], values: val }
}

#[derive(Debug, Clone)]
pub struct DefenderBestResponse {
    pub strategy: DefenderStrategy,
    pub value: f64,
    /// `G^θ(root)` for each type.
    pub per_type: Vec<f64>,
}

/// Defender best response against an attacker realization plan, type by type. Child
/// values are in attacker-reach units, so they are weighted by the transition
/// probability. Ties go to the lowest allocation.
pub fn defender_best_response(
    tree: &GameTree,
    inst: &DragInstance,
    plan: &AttackerPlan,
    prior: &[f64],
) -> DefenderBestResponse {
    let k = inst.num_types();
    let mut choice = vec![0usize; tree.len() * k];
    let mut per_type = Vec::with_capacity(k);
    let mut val = vec![0.0; tree.len()];
    for theta in 0..k {
        for h in (0..tree.len()).rev() {
            let s = tree.state(h);
            if tree.is_leaf(h) {
                val[h] = plan.eta(h)[0] * inst.terminal_payoff(s, theta);
                continue;
            }
            let eta = plan.eta(h);
            let mut best = (f64::NEG_INFINITY, 0);
            for v in 0..k {
                let mut x = 0.0;
                for (j, &e) in inst.action_space(s).iter().enumerate() {
                    x += eta[j] * inst.stage_reward(e, theta, v);
                    x += tree.outcome_children(inst, h, j, v).map(|c| tree.node(c).prob * val[c]).sum::<f64>();
                }
                if x > best.0 {
                    best = (x, v);
                }
            }
            val[h] = best.0;
            choice[h * k + theta] = best.1;
        }
        per_type.push(val[0]);
    }
    let strategy = DefenderStrategy::from_fn(tree, k, |h, t| {
        let mut p = vec![0.0; k];
        p[choice[h * k + t]] = 1.0;
        p
    });
    DefenderBestResponse { strategy, value: mixture(prior, &per_type), per_type }
}

/// `defender_BR(σ) - attacker_BR(τ)`: zero at an equilibrium, positive otherwise.
pub fn exploitability(
    tree: &GameTree,
    inst: &DragInstance,
    attacker_plan: &AttackerPlan,
    defender_plan: &DefenderPlan,
    prior: &[f64],
) -> Exploitability {
    let d = defender_best_response(tree, inst, attacker_plan, prior).value;
    let a = attacker_best_response(tree, inst, defender_plan).value;
    Exploitability::new(d, a)
}

#[cfg(test)]
mod tests;
