//! The two game-tree linear programs.
//!
//! Defender program, maximize `l[root]` over
//! - `l[h]` free and `z[h][θ][v] ≥ 0` for every history, leaves included;
//! - `l[h] ≤ Σ_θ Σ_v R^θ(u,v) z[h][θ][v] + Σ_{children c via u} l[c]` for each move `u` at a
//!   non-leaf `h`, and `l[h] ≤ Σ_θ term(θ) Σ_v z[h][θ][v]` at a leaf;
//! - `Σ_v z[root][θ][v] = b0(θ)` and `Σ_v z[h][θ][v] = P(h) z[parent][θ][v_h]`.
//!
//! Attacker program, minimize `Σ_θ b0(θ) q[root][θ]` over
//! - `q[h][θ]` free and `η[h][u] ≥ 0` (a single `η` at a leaf);
//! - `q[h][θ] ≥ Σ_u R^θ(u,v) η[h][u] + Σ_{u,s'} P q[child(u,v,s')][θ]` for every `θ, v`, and
//!   `q[h][θ] ≥ term(θ) η[h]` at a leaf (one row per `v`, kept literal);
//! - `Σ_u η[root][u] = 1` and `Σ_u η[h][u] = η[parent][u_h]`.
//!
//! The attacker program is the linear-programming dual of the defender program.

use crate::lp::{LpBuilder, LpProblem, Relation, Sense};
use crate::model::DragInstance;
use crate::tree::GameTree;

/// Column positions of the defender program.
#[derive(Debug, Clone, Copy)]
pub struct DefenderLayout {
    pub num_types: usize,
}

impl DefenderLayout {
    pub fn block(&self) -> usize {
        1 + self.num_types * self.num_types
    }

    pub fn ell(&self, h: usize) -> usize {
        h * self.block()
    }

    pub fn z(&self, h: usize, theta: usize, v: usize) -> usize {
        h * self.block() + 1 + theta * self.num_types + v
    }
}

/// Column positions of the attacker program.
#[derive(Debug, Clone)]
pub struct AttackerLayout {
    pub num_types: usize,
    base: Vec<usize>,
}

impl AttackerLayout {
    pub fn new(tree: &GameTree, inst: &DragInstance) -> Self {
        let k = inst.num_types();
        let mut base = Vec::with_capacity(tree.len() + 1);
        let mut next = 0;
        for h in 0..tree.len() {
            base.push(next);
            next += k + num_eta(tree, inst, h);
        }
        base.push(next);
        AttackerLayout { num_types: k, base }
    }

    pub fn num_vars(&self) -> usize {
        *self.base.last().unwrap_or(&0)
    }

    pub fn q(&self, h: usize, theta: usize) -> usize {
        self.base[h] + theta
    }

    pub fn eta(&self, h: usize, j: usize) -> usize {
        self.base[h] + self.num_types + j
    }

    /// Number of `η` entries at `h`.
    pub fn eta_len(&self, h: usize) -> usize {
        self.base[h + 1] - self.base[h] - self.num_types
    }
}

/// Moves at `h`, or one placeholder at a leaf.
fn num_eta(tree: &GameTree, inst: &DragInstance, h: usize) -> usize {
    if tree.is_leaf(h) {
        1
    } else {
        inst.action_space(tree.state(h)).len()
    }
}

/// Defender program with the root flow set to `mass` (the prior, or any nonnegative
/// rescaling of it).
pub fn build_defender_lp_with_mass(tree: &GameTree, inst: &DragInstance, mass: &[f64]) -> LpProblem {
    let k = inst.num_types();
    let lay = DefenderLayout { num_types: k };
    let mut b = LpBuilder::with_capacity(Sense::Maximize, tree.len() * lay.block(), tree.len() * (k + 2));
    for h in 0..tree.len() {
        b.add_var(format!("l_h{h}"), f64::NEG_INFINITY, f64::INFINITY);
        for t in 0..k {
            for v in 0..k {
                b.add_var(format!("z_h{h}_t{t}_v{v}"), 0.0, f64::INFINITY);
            }
        }
    }
    b.set_objective(lay.ell(0), 1.0);
    let mut first_opt_row = Vec::with_capacity(tree.len());
    let mut first_flow_row = Vec::with_capacity(tree.len());
    for h in 0..tree.len() {
        let s = tree.state(h);
        first_opt_row.push(b.num_constraints());
        if tree.is_leaf(h) {
            let mut row = vec![(lay.ell(h), 1.0)];
            for t in 0..k {
                let r = inst.terminal_payoff(s, t);
                for v in 0..k {
                    row.push((lay.z(h, t, v), -r));
                }
            }
            b.add_constraint(format!("leaf_h{h}"), row, Relation::Le, 0.0);
        } else {
            for (j, &e) in inst.action_space(s).iter().enumerate() {
                let mut row = vec![(lay.ell(h), 1.0)];
                for t in 0..k {
                    for v in 0..k {
                        row.push((lay.z(h, t, v), -inst.stage_reward(e, t, v)));
                    }
                }
                for c in tree.action_children(inst, h, j) {
                    row.push((lay.ell(c), -1.0));
                }
                b.add_constraint(format!("opt_h{h}_u{j}"), row, Relation::Le, 0.0);
            }
        }
        let node = tree.node(h);
        first_flow_row.push(b.num_constraints());
        for t in 0..k {
            let mut row: Vec<(usize, f64)> = (0..k).map(|v| (lay.z(h, t, v), 1.0)).collect();
            let rhs = match node.parent() {
                None => mass[t],
                Some(p) => {
                    row.push((lay.z(p, t, node.alloc as usize), -node.prob));
                    0.0
                }
            };
            b.add_constraint(format!("flow_h{h}_t{t}"), row, Relation::Eq, rhs);
        }
    }
    let hint = defender_start(tree, inst, mass, &lay, &first_opt_row, &first_flow_row);
    b.seal()
        .expect("defender program is well formed by construction")
        .with_basis_hint(hint)
}

/// Feasible starting basis from the truthful defender (allocate to the true asset) and the
/// attacker's best reply to it: `z[h][θ][θ]` carries the flow row of `(h, θ)` and `l[h]`
/// is tight in the row of its minimizing move.
fn defender_start(
    tree: &GameTree,
    inst: &DragInstance,
    mass: &[f64],
    lay: &DefenderLayout,
    first_opt_row: &[usize],
    first_flow_row: &[usize],
) -> Vec<(usize, usize)> {
    let k = inst.num_types();
    let n = tree.len();
    let mut m = vec![0.0; n * k];
    m[..k].copy_from_slice(mass);
    for h in 1..n {
        let node = tree.node(h);
        let p = node.parent as usize;
        let v = node.alloc as usize;
        m[h * k + v] = node.prob * m[p * k + v];
    }
    let mut ell = vec![0.0; n];
    let mut tight = vec![0usize; n];
    for h in (0..n).rev() {
        let s = tree.state(h);
        if tree.is_leaf(h) {
            ell[h] = (0..k).map(|t| inst.terminal_payoff(s, t) * m[h * k + t]).sum();
            continue;
        }
        let mut best = f64::INFINITY;
        for (j, &e) in inst.action_space(s).iter().enumerate() {
            let mut val: f64 = (0..k).map(|t| inst.stage_reward(e, t, t) * m[h * k + t]).sum();
            val += tree.action_children(inst, h, j).map(|c| ell[c]).sum::<f64>();
            if val < best {
                best = val;
                tight[h] = j;
            }
        }
        ell[h] = best;
    }
    let mut hint = Vec::with_capacity(n * (k + 1));
    for h in 0..n {
        hint.push((lay.ell(h), first_opt_row[h] + tight[h]));
        for t in 0..k {
            hint.push((lay.z(h, t, t), first_flow_row[h] + t));
        }
    }
    hint
}

pub fn build_defender_lp(tree: &GameTree, inst: &DragInstance) -> LpProblem {
    build_defender_lp_with_mass(tree, inst, inst.prior())
}

pub fn build_attacker_lp(tree: &GameTree, inst: &DragInstance) -> LpProblem {
    let k = inst.num_types();
    let lay = AttackerLayout::new(tree, inst);
    let mut b = LpBuilder::with_capacity(Sense::Minimize, lay.num_vars(), tree.len() * (k * k + 1));
    for h in 0..tree.len() {
        for t in 0..k {
            b.add_var(format!("q_h{h}_t{t}"), f64::NEG_INFINITY, f64::INFINITY);
        }
        for j in 0..lay.eta_len(h) {
            b.add_var(format!("eta_h{h}_u{j}"), 0.0, f64::INFINITY);
        }
    }
    for t in 0..k {
        b.set_objective(lay.q(0, t), inst.prior()[t]);
    }
    let mut first_br_row = Vec::with_capacity(tree.len());
    for h in 0..tree.len() {
        let s = tree.state(h);
        first_br_row.push(b.num_constraints());
        for t in 0..k {
            for v in 0..k {
                let mut row = vec![(lay.q(h, t), 1.0)];
                if tree.is_leaf(h) {
                    row.push((lay.eta(h, 0), -inst.terminal_payoff(s, t)));
                } else {
                    for (j, &e) in inst.action_space(s).iter().enumerate() {
                        row.push((lay.eta(h, j), -inst.stage_reward(e, t, v)));
                        for c in tree.outcome_children(inst, h, j, v) {
                            row.push((lay.q(c, t), -tree.node(c).prob));
                        }
                    }
                }
                b.add_constraint(format!("br_h{h}_t{t}_v{v}"), row, Relation::Ge, 0.0);
            }
        }
        let mut row: Vec<(usize, f64)> = (0..lay.eta_len(h)).map(|j| (lay.eta(h, j), 1.0)).collect();
        let node = tree.node(h);
        let rhs = match node.parent() {
            None => 1.0,
            Some(p) => {
                let j = parent_action(tree, inst, p, node.edge as usize);
                row.push((lay.eta(p, j), -1.0));
                0.0
            }
        };
        b.add_constraint(format!("aflow_h{h}"), row, Relation::Eq, rhs);
    }
    let hint = attacker_start(tree, inst, &lay, &first_br_row);
    b.seal()
        .expect("attacker program is well formed by construction")
        .with_basis_hint(hint)
}

/// Feasible starting basis from the attacker that always takes its first move: that move's
/// `η` carries each flow row and `q[h][θ]` is tight in the row of its maximizing allocation.
fn attacker_start(tree: &GameTree, inst: &DragInstance, lay: &AttackerLayout, first_br_row: &[usize]) -> Vec<(usize, usize)> {
    let k = inst.num_types();
    let n = tree.len();
    let mut reach = vec![0.0; n];
    reach[0] = 1.0;
    for h in 1..n {
        let node = tree.node(h);
        let p = node.parent as usize;
        if parent_action(tree, inst, p, node.edge as usize) == 0 {
            reach[h] = reach[p];
        }
    }
    let mut q = vec![0.0; n * k];
    let mut tight = vec![0usize; n * k];
    for h in (0..n).rev() {
        let s = tree.state(h);
        for t in 0..k {
            let mut best = f64::NEG_INFINITY;
            for v in 0..k {
                let val = if tree.is_leaf(h) {
                    inst.terminal_payoff(s, t) * reach[h]
                } else {
                    let e = inst.action_space(s)[0];
                    let mut val = inst.stage_reward(e, t, v) * reach[h];
                    for j in 0..inst.action_space(s).len() {
                        for c in tree.outcome_children(inst, h, j, v) {
                            val += tree.node(c).prob * q[c * k + t];
                        }
                    }
                    val
                };
                if val > best {
                    best = val;
                    tight[h * k + t] = v;
                }
            }
            q[h * k + t] = best;
        }
    }
    let mut hint = Vec::with_capacity(n * (k + 1));
    for h in 0..n {
        for t in 0..k {
            hint.push((lay.q(h, t), first_br_row[h] + t * k + tight[h * k + t]));
        }
        hint.push((lay.eta(h, 0), first_br_row[h] + k * k));
    }
    hint
}

/// Position of `edge` in the action list at `h`.
pub(crate) fn parent_action(tree: &GameTree, inst: &DragInstance, h: usize, edge: usize) -> usize {
    inst.action_space(tree.state(h))
        .iter()
        .position(|&e| e == edge)
        .expect("child edge leaves the parent state")
}
