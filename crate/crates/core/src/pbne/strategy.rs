use crate::model::DragInstance;
use crate::tree::GameTree;

use super::programs::{parent_action, AttackerLayout, DefenderLayout};
use super::PbneError;

/// Below this total mass a history counts as unreached and gets the uniform policy.
pub const ZERO_MASS: f64 = 1e-12;
/// Entries more negative than this make a plan invalid; smaller violations are clipped.
pub const NEGATIVE_TOL: f64 = 1e-10;

/// Defender realization plan: `z[h][θ][v]` is the joint probability of type `θ`, history
/// `h` and allocation `v`; `ell[h]` is the continuation value carried by `h` in the same
/// mass units. `ell` is empty when the plan was expanded from a strategy.
#[derive(Debug, Clone, PartialEq)]
pub struct DefenderPlan {
    pub num_types: usize,
    pub z: Vec<f64>,
    pub ell: Vec<f64>,
}

impl DefenderPlan {
    pub fn from_lp(tree: &GameTree, num_types: usize, x: &[f64]) -> Self {
        let lay = DefenderLayout { num_types };
        let k = num_types;
        let mut z = Vec::with_capacity(tree.len() * k * k);
        let mut ell = Vec::with_capacity(tree.len());
        for h in 0..tree.len() {
            ell.push(x[lay.ell(h)]);
            for t in 0..k {
                for v in 0..k {
                    z.push(x[lay.z(h, t, v)]);
                }
            }
        }
        DefenderPlan { num_types, z, ell }
    }

    /// Realization plan induced by `strategy` from root masses `prior`.
    pub fn from_strategy(tree: &GameTree, strategy: &DefenderStrategy, prior: &[f64]) -> Self {
        let k = strategy.num_types;
        let mut z = vec![0.0; tree.len() * k * k];
        for h in 0..tree.len() {
            for t in 0..k {
                let mass = match tree.node(h).parent() {
                    None => prior[t],
                    Some(p) => tree.node(h).prob * z[(p * k + t) * k + tree.node(h).alloc as usize],
                };
                let pol = strategy.policy(h, t);
                for v in 0..k {
                    z[(h * k + t) * k + v] = mass * pol[v];
                }
            }
        }
        DefenderPlan { num_types: k, z, ell: Vec::new() }
    }

    pub fn z(&self, h: usize, theta: usize) -> &[f64] {
        let k = self.num_types;
        &self.z[(h * k + theta) * k..(h * k + theta + 1) * k]
    }

    /// `Σ_v z[h][θ][v]`: probability of type `θ` and history `h`.
    pub fn mass(&self, h: usize, theta: usize) -> f64 {
        self.z(h, theta).iter().sum()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        DefenderPlan {
            num_types: self.num_types,
            z: self.z.iter().map(|v| v * factor).collect(),
            ell: self.ell.iter().map(|v| v * factor).collect(),
        }
    }

    /// Largest violation of the flow equalities and nonnegativity, and the history where
    /// it occurs.
    pub fn flow_residual(&self, tree: &GameTree, prior: &[f64]) -> (f64, usize) {
        let k = self.num_types;
        let mut worst = (0.0f64, 0usize);
        for h in 0..tree.len() {
            let node = tree.node(h);
            for t in 0..k {
                let target = match node.parent() {
                    None => prior[t],
                    Some(p) => node.prob * self.z(p, t)[node.alloc as usize],
                };
                let mut r = (self.mass(h, t) - target).abs();
                for &v in self.z(h, t) {
                    r = r.max(-v);
                }
                if r > worst.0 {
                    worst = (r, h);
                }
            }
        }
        worst
    }
}

/// Attacker realization plan: `η[h][u]` is the probability of the attacker's own move
/// sequence along `h` extended by `u` (a single entry at leaves); `q[h][θ]` is the type-`θ`
/// continuation value. `q` is empty when expanded from a strategy.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackerPlan {
    pub num_types: usize,
    offset: Vec<usize>,
    pub eta: Vec<f64>,
    pub q: Vec<f64>,
}

fn eta_offsets(tree: &GameTree, inst: &DragInstance) -> Vec<usize> {
    let mut offset = Vec::with_capacity(tree.len() + 1);
    let mut next = 0;
    for h in 0..tree.len() {
        offset.push(next);
        next += if tree.is_leaf(h) { 1 } else { inst.action_space(tree.state(h)).len() };
    }
    offset.push(next);
    offset
}

impl AttackerPlan {
    pub fn from_lp(tree: &GameTree, inst: &DragInstance, x: &[f64]) -> Self {
        let lay = AttackerLayout::new(tree, inst);
        let k = inst.num_types();
        let offset = eta_offsets(tree, inst);
        let mut eta = Vec::with_capacity(*offset.last().unwrap_or(&0));
        let mut q = Vec::with_capacity(tree.len() * k);
        for h in 0..tree.len() {
            for t in 0..k {
                q.push(x[lay.q(h, t)]);
            }
            for j in 0..lay.eta_len(h) {
                eta.push(x[lay.eta(h, j)]);
            }
        }
        AttackerPlan { num_types: k, offset, eta, q }
    }

    pub fn from_parts(tree: &GameTree, inst: &DragInstance, eta: Vec<f64>, q: Vec<f64>) -> Result<Self, PbneError> {
        let offset = eta_offsets(tree, inst);
        if eta.len() != *offset.last().unwrap_or(&0) {
            return Err(PbneError::Shape(format!("attacker plan has {} entries, expected {}", eta.len(), offset.last().unwrap_or(&0))));
        }
        Ok(AttackerPlan { num_types: inst.num_types(), offset, eta, q })
    }

    /// Realization plan induced by `strategy`.
    pub fn from_strategy(tree: &GameTree, inst: &DragInstance, strategy: &AttackerStrategy) -> Self {
        let offset = eta_offsets(tree, inst);
        let mut eta = vec![0.0; *offset.last().unwrap_or(&0)];
        for h in 0..tree.len() {
            let reach = match tree.node(h).parent() {
                None => 1.0,
                Some(p) => eta[offset[p] + parent_action(tree, inst, p, tree.node(h).edge as usize)],
            };
            if tree.is_leaf(h) {
                eta[offset[h]] = reach;
            } else {
                for (j, &s) in strategy.policy(h).iter().enumerate() {
                    eta[offset[h] + j] = reach * s;
                }
            }
        }
        AttackerPlan { num_types: inst.num_types(), offset, eta, q: Vec::new() }
    }

    pub fn eta(&self, h: usize) -> &[f64] {
        &self.eta[self.offset[h]..self.offset[h + 1]]
    }

    /// Probability that the attacker's own moves are consistent with reaching `h`.
    pub fn reach(&self, h: usize) -> f64 {
        self.eta(h).iter().sum()
    }

    pub fn flow_residual(&self, tree: &GameTree, inst: &DragInstance) -> (f64, usize) {
        let mut worst = (0.0f64, 0usize);
        for h in 0..tree.len() {
            let target = match tree.node(h).parent() {
                None => 1.0,
                Some(p) => self.eta(p)[parent_action(tree, inst, p, tree.node(h).edge as usize)],
            };
            let mut r = (self.reach(h) - target).abs();
            for &v in self.eta(h) {
                r = r.max(-v);
            }
            if r > worst.0 {
                worst = (r, h);
            }
        }
        worst
    }
}

/// Behavioral defender strategy: a distribution over allocations for every history and
/// type. Leaves carry a distribution too; it affects nothing.
#[derive(Debug, Clone, PartialEq)]
pub struct DefenderStrategy {
    pub num_types: usize,
    probs: Vec<f64>,
}

impl DefenderStrategy {
    pub fn from_fn(tree: &GameTree, num_types: usize, mut f: impl FnMut(usize, usize) -> Vec<f64>) -> Self {
        let k = num_types;
        let mut probs = Vec::with_capacity(tree.len() * k * k);
        for h in 0..tree.len() {
            for t in 0..k {
                let p = f(h, t);
                assert_eq!(p.len(), k, "defender policy must cover every asset");
                probs.extend(p);
            }
        }
        DefenderStrategy { num_types, probs }
    }

    pub fn policy(&self, h: usize, theta: usize) -> &[f64] {
        let k = self.num_types;
        &self.probs[(h * k + theta) * k..(h * k + theta + 1) * k]
    }

    /// Likelihood of allocation `v` at `h` under each type: the column used by the belief
    /// update.
    pub fn column(&self, h: usize, v: usize) -> Vec<f64> {
        (0..self.num_types).map(|t| self.policy(h, t)[v]).collect()
    }
}

/// Behavioral attacker strategy: a distribution over out-edges (in action order) for every
/// non-leaf history; empty at leaves.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackerStrategy {
    offset: Vec<usize>,
    probs: Vec<f64>,
}

impl AttackerStrategy {
    pub fn from_fn(tree: &GameTree, inst: &DragInstance, mut f: impl FnMut(usize) -> Vec<f64>) -> Self {
        let mut offset = Vec::with_capacity(tree.len() + 1);
        let mut probs = Vec::new();
        for h in 0..tree.len() {
            offset.push(probs.len());
            if !tree.is_leaf(h) {
                let p = f(h);
                assert_eq!(p.len(), inst.action_space(tree.state(h)).len(), "attacker policy must cover every move");
                probs.extend(p);
            }
        }
        offset.push(probs.len());
        AttackerStrategy { offset, probs }
    }

    pub fn policy(&self, h: usize) -> &[f64] {
        &self.probs[self.offset[h]..self.offset[h + 1]]
    }
}

fn normalize(h: usize, raw: &[f64]) -> Result<Vec<f64>, PbneError> {
    if let Some(&bad) = raw.iter().find(|&&v| v < -NEGATIVE_TOL) {
        return Err(PbneError::InvalidPlan { history: h, value: bad });
    }
    let clipped: Vec<f64> = raw.iter().map(|v| v.max(0.0)).collect();
    let total: f64 = clipped.iter().sum();
    Ok(if total <= ZERO_MASS {
        vec![1.0 / raw.len() as f64; raw.len()]
    } else {
        clipped.iter().map(|v| v / total).collect()
    })
}

/// `τ^θ_h = z[h][θ] / Σ_v z[h][θ][v]`, uniform where the mass vanishes.
pub fn recover_defender_policy(tree: &GameTree, plan: &DefenderPlan) -> Result<DefenderStrategy, PbneError> {
    let k = plan.num_types;
    let mut probs = Vec::with_capacity(tree.len() * k * k);
    for h in 0..tree.len() {
        for t in 0..k {
            probs.extend(normalize(h, plan.z(h, t))?);
        }
    }
    Ok(DefenderStrategy { num_types: k, probs })
}

/// `σ_h = η[h] / Σ_u η[h][u]`, uniform where the mass vanishes.
pub fn recover_attacker_policy(
    tree: &GameTree,
    inst: &DragInstance,
    plan: &AttackerPlan,
) -> Result<AttackerStrategy, PbneError> {
    let mut err = None;
    let s = AttackerStrategy::from_fn(tree, inst, |h| match normalize(h, plan.eta(h)) {
        Ok(p) => p,
        Err(e) => {
            err.get_or_insert(e);
            vec![1.0 / plan.eta(h).len() as f64; plan.eta(h).len()]
        }
    });
    match err {
        Some(e) => Err(e),
        None => {
            for h in 0..tree.len() {
                if tree.is_leaf(h) && plan.eta(h).iter().any(|&v| v < -NEGATIVE_TOL) {
                    return Err(PbneError::InvalidPlan { history: h, value: plan.eta(h)[0] });
                }
            }
            Ok(s)
        }
    }
}

/// Result of one Bayesian update: the posterior and its normalizer `ξ`, the probability
/// of the observed allocation under the prior.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefStep {
    pub belief: Vec<f64>,
    pub xi: f64,
}

/// Posterior after observing an allocation whose likelihood under type `θ` is
/// `column[θ]`. Returns `Err(ξ)` when `ξ ≤ zero_tol`, i.e. the observation is off path.
pub fn belief_update(prior: &[f64], column: &[f64], zero_tol: f64) -> Result<BeliefStep, f64> {
    let joint: Vec<f64> = prior.iter().zip(column).map(|(b, l)| b * l).collect();
    let xi: f64 = joint.iter().sum();
    if xi <= zero_tol {
        return Err(xi);
    }
    Ok(BeliefStep { belief: joint.iter().map(|j| j / xi).collect(), xi })
}

/// Attacker beliefs at every history. Where an observation has zero probability the parent
/// belief is carried forward and the history is flagged off path.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefMap {
    pub num_types: usize,
    entries: Vec<f64>,
    off_path: Vec<bool>,
}

impl BeliefMap {
    pub fn compute(tree: &GameTree, strategy: &DefenderStrategy, prior: &[f64]) -> Self {
        let k = strategy.num_types;
        let mut entries = Vec::with_capacity(tree.len() * k);
        let mut off_path = Vec::with_capacity(tree.len());
        entries.extend_from_slice(prior);
        off_path.push(false);
        for h in 1..tree.len() {
            let node = tree.node(h);
            let p = node.parent as usize;
            let parent_belief = entries[p * k..(p + 1) * k].to_vec();
            let step = if off_path[p] {
                None
            } else {
                belief_update(&parent_belief, &strategy.column(p, node.alloc as usize), ZERO_MASS).ok()
            };
            match step {
                Some(s) => {
                    entries.extend(s.belief);
                    off_path.push(false);
                }
                None => {
                    entries.extend(parent_belief);
                    off_path.push(true);
                }
            }
        }
        BeliefMap { num_types: k, entries, off_path }
    }

    pub fn belief(&self, h: usize) -> &[f64] {
        &self.entries[h * self.num_types..(h + 1) * self.num_types]
    }

    pub fn is_off_path(&self, h: usize) -> bool {
        self.off_path[h]
    }

    /// Beliefs at each stage along the path from the root to `h`.
    pub fn trajectory(&self, tree: &GameTree, h: usize) -> Vec<(Vec<f64>, bool)> {
        tree.path(h).into_iter().map(|g| (self.belief(g).to_vec(), self.is_off_path(g))).collect()
    }
}

/// Beliefs along the path to `h`, propagated directly with [`belief_update`].
pub fn belief_trajectory(tree: &GameTree, h: usize, strategy: &DefenderStrategy, prior: &[f64]) -> Vec<(Vec<f64>, bool)> {
    let path = tree.path(h);
    let mut out = vec![(prior.to_vec(), false)];
    for w in path.windows(2) {
        let (b, off) = out.last().cloned().expect("nonempty");
        let v = tree.node(w[1]).alloc as usize;
        let next = if off {
            None
        } else {
            belief_update(&b, &strategy.column(w[0], v), ZERO_MASS).ok()
        };
        out.push(match next {
            Some(s) => (s.belief, false),
            None => (b, true),
        });
    }
    out
}
