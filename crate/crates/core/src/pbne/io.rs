use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::lp::SolveStats;
use crate::model::DragInstance;
use crate::tree::GameTree;

use super::solve::{EquilibriumSolution, PbneError};
use super::strategy::{AttackerPlan, AttackerStrategy, DefenderPlan, DefenderStrategy};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeliefDoc {
    pub belief: Vec<f64>,
    pub off_path: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DefenderPlanEntry {
    pub ell: f64,
    /// `z[θ][v]`.
    pub z: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackerPlanEntry {
    pub q: Vec<f64>,
    pub eta: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverReport {
    pub defender: SolveStats,
    pub attacker: SolveStats,
}

/// On-disk form of an equilibrium. Strategies and beliefs are keyed by history encoding;
/// attacker distributions follow the out-edge order of the current node, defender
/// distributions are indexed `[θ][v]`. Leaves carry no strategy entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolutionDoc {
    pub game_value: f64,
    pub attacker_value: f64,
    pub duality_gap: f64,
    pub histories: usize,
    pub defender_strategy: BTreeMap<String, Vec<Vec<f64>>>,
    pub attacker_strategy: BTreeMap<String, Vec<f64>>,
    pub beliefs: BTreeMap<String, BeliefDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub defender_plan: Option<BTreeMap<String, DefenderPlanEntry>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attacker_plan: Option<BTreeMap<String, AttackerPlanEntry>>,
    pub solver: SolverReport,
}

impl SolutionDoc {
    pub fn from_solution(inst: &DragInstance, sol: &EquilibriumSolution, full_plan: bool) -> Self {
        let tree = &sol.tree;
        let k = inst.num_types();
        let mut defender_strategy = BTreeMap::new();
        let mut attacker_strategy = BTreeMap::new();
        let mut beliefs = BTreeMap::new();
        let mut dplan = BTreeMap::new();
        let mut aplan = BTreeMap::new();
        for h in 0..tree.len() {
            let key = tree.encode(inst, h);
            if !tree.is_leaf(h) {
                defender_strategy.insert(key.clone(), (0..k).map(|t| sol.defender.policy(h, t).to_vec()).collect());
                attacker_strategy.insert(key.clone(), sol.attacker.policy(h).to_vec());
            }
            beliefs.insert(
                key.clone(),
                BeliefDoc { belief: sol.beliefs.belief(h).to_vec(), off_path: sol.beliefs.is_off_path(h) },
            );
            if full_plan {
                let p = &sol.defender_plan;
                dplan.insert(
                    key.clone(),
                    DefenderPlanEntry { ell: p.ell[h], z: (0..k).map(|t| p.z(h, t).to_vec()).collect() },
                );
                let a = &sol.attacker_plan;
                aplan.insert(key, AttackerPlanEntry { q: a.q[h * k..(h + 1) * k].to_vec(), eta: a.eta(h).to_vec() });
            }
        }
        SolutionDoc {
            game_value: sol.game_value,
            attacker_value: sol.attacker_value,
            duality_gap: sol.duality_gap,
            histories: tree.len(),
            defender_strategy,
            attacker_strategy,
            beliefs,
            defender_plan: full_plan.then_some(dplan),
            attacker_plan: full_plan.then_some(aplan),
            solver: SolverReport { defender: sol.defender_stats.clone(), attacker: sol.attacker_stats.clone() },
        }
    }

    fn ids<'a, V>(
        tree: &GameTree,
        inst: &DragInstance,
        map: &'a BTreeMap<String, V>,
    ) -> Result<Vec<Option<&'a V>>, PbneError> {
        let mut out = vec![None; tree.len()];
        for (key, v) in map {
            let h = tree.decode(inst, key).map_err(|e| PbneError::Shape(format!("{key}: {e}")))?;
            out[h] = Some(v);
        }
        Ok(out)
    }

    pub fn defender_strategy(&self, tree: &GameTree, inst: &DragInstance) -> Result<DefenderStrategy, PbneError> {
        let k = inst.num_types();
        let by_id = Self::ids(tree, inst, &self.defender_strategy)?;
        for h in 0..tree.len() {
            match by_id[h] {
                None if !tree.is_leaf(h) => {
                    return Err(PbneError::Shape(format!("no defender policy at {}", tree.encode(inst, h))))
                }
                Some(p) if p.len() != k || p.iter().any(|r| r.len() != k) => {
                    return Err(PbneError::Shape(format!("defender policy at {} has the wrong shape", tree.encode(inst, h))))
                }
                _ => {}
            }
        }
        Ok(DefenderStrategy::from_fn(tree, k, |h, t| match by_id[h] {
            Some(p) => p[t].clone(),
            None => vec![1.0 / k as f64; k],
        }))
    }

    pub fn attacker_strategy(&self, tree: &GameTree, inst: &DragInstance) -> Result<AttackerStrategy, PbneError> {
        let by_id = Self::ids(tree, inst, &self.attacker_strategy)?;
        for h in 0..tree.len() {
            if tree.is_leaf(h) {
                continue;
            }
            match by_id[h] {
                Some(p) if p.len() == inst.action_space(tree.state(h)).len() => {}
                _ => return Err(PbneError::Shape(format!("missing or malformed attacker policy at {}", tree.encode(inst, h)))),
            }
        }
        Ok(AttackerStrategy::from_fn(tree, inst, |h| by_id[h].cloned().unwrap_or_default()))
    }

    pub fn defender_plan(&self, tree: &GameTree, inst: &DragInstance) -> Result<Option<DefenderPlan>, PbneError> {
        let Some(map) = &self.defender_plan else { return Ok(None) };
        let k = inst.num_types();
        let by_id = Self::ids(tree, inst, map)?;
        let mut z = Vec::with_capacity(tree.len() * k * k);
        let mut ell = Vec::with_capacity(tree.len());
        for (h, entry) in by_id.iter().enumerate() {
            let e = entry
                .filter(|e| e.z.len() == k && e.z.iter().all(|r| r.len() == k))
                .ok_or_else(|| PbneError::Shape(format!("missing or malformed defender plan at {}", tree.encode(inst, h))))?;
            ell.push(e.ell);
            for row in &e.z {
                z.extend_from_slice(row);
            }
        }
        Ok(Some(DefenderPlan { num_types: k, z, ell }))
    }

    pub fn attacker_plan(&self, tree: &GameTree, inst: &DragInstance) -> Result<Option<AttackerPlan>, PbneError> {
        let Some(map) = &self.attacker_plan else { return Ok(None) };
        let k = inst.num_types();
        let by_id = Self::ids(tree, inst, map)?;
        let mut eta = Vec::new();
        let mut q = Vec::with_capacity(tree.len() * k);
        for (h, entry) in by_id.iter().enumerate() {
            let e = entry
                .filter(|e| e.q.len() == k)
                .ok_or_else(|| PbneError::Shape(format!("missing or malformed attacker plan at {}", tree.encode(inst, h))))?;
            q.extend_from_slice(&e.q);
            eta.extend_from_slice(&e.eta);
        }
        AttackerPlan::from_parts(tree, inst, eta, q).map(Some)
    }
}

pub fn solution_json(doc: &SolutionDoc) -> String {
    serde_json::to_string_pretty(doc).expect("solution serializes") + "\n"
}

pub fn read_solution(text: &str) -> Result<SolutionDoc, PbneError> {
    serde_json::from_str(text).map_err(|e| PbneError::Shape(format!("solution file: {e}")))
}
