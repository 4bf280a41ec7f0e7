//! Game instances: the graph the attacker moves on, the candidate assets, the prior over
//! which asset is real, and the reward and termination rules.

mod grid;
mod io;

pub use grid::{canonical_instance, make_grid_instance, GridLayout, CANONICAL_HORIZON};
pub use io::{load_instance, parse_instance, write_instance};

use std::collections::HashMap;

/// Validation failures. Each variant has a stable machine-readable [`ModelError::code`].
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("prior must be a probability vector over the assets: {0}")]
    InvalidPrior(String),
    #[error("edge {edge} has non-positive weight {weight}")]
    NonPositiveWeight { edge: usize, weight: f64 },
    #[error("transition of edge {edge} is not a probability distribution: {reason}")]
    BadTransition { edge: usize, reason: String },
    #[error("node {node} is out of range (node count {count})")]
    InvalidNode { node: usize, count: usize },
    #[error("duplicate edge {from}->{to}")]
    DuplicateEdge { from: usize, to: usize },
    #[error("asset list is invalid: {0}")]
    InvalidAssets(String),
    #[error("node {node} is reachable at stage {stage} before the horizon but has no outgoing edges")]
    DeadEnd { node: usize, stage: usize },
    #[error("threat level must be finite and nonnegative, got {0}")]
    InvalidThreat(f64),
    #[error("grid error: {0}")]
    Grid(String),
    #[error("asset at node {0} is not reachable from the initial state")]
    Disconnected(usize),
    #[error("custom reward table: {0}")]
    RewardTable(String),
    #[error("instance file: {0}")]
    Parse(String),
    #[error("operation requires the default reward rule")]
    UnsupportedRewards,
}

impl ModelError {
    pub fn code(&self) -> &'static str {
        match self {
            ModelError::InvalidPrior(_) => "invalid_prior",
            ModelError::NonPositiveWeight { .. } => "nonpositive_weight",
            ModelError::BadTransition { .. } => "unnormalized_transition",
            ModelError::InvalidNode { .. } => "invalid_node",
            ModelError::DuplicateEdge { .. } => "duplicate_edge",
            ModelError::InvalidAssets(_) => "invalid_assets",
            ModelError::DeadEnd { .. } => "dead_end",
            ModelError::InvalidThreat(_) => "invalid_threat",
            ModelError::Grid(_) => "invalid_grid",
            ModelError::Disconnected(_) => "disconnected",
            ModelError::RewardTable(_) => "invalid_reward_table",
            ModelError::Parse(_) => "parse_error",
            ModelError::UnsupportedRewards => "unsupported_rewards",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub weight: f64,
    /// Successor distribution; nonempty, positive entries, sums to one.
    pub transition: Vec<(usize, f64)>,
}

/// Directed graph with per-edge weights and successor distributions.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    node_count: usize,
    edges: Vec<Edge>,
    out: Vec<Vec<usize>>,
}

impl Graph {
    /// Edges with no explicit transition move deterministically to their head.
    pub fn new(node_count: usize, edges: Vec<Edge>) -> Result<Self, ModelError> {
        let mut out = vec![Vec::new(); node_count];
        let mut seen = HashMap::new();
        let node_ok = |node: usize| {
            if node < node_count {
                Ok(())
            } else {
                Err(ModelError::InvalidNode { node, count: node_count })
            }
        };
        for (k, e) in edges.iter().enumerate() {
            node_ok(e.from)?;
            node_ok(e.to)?;
            if !(e.weight.is_finite() && e.weight > 0.0) {
                return Err(ModelError::NonPositiveWeight { edge: k, weight: e.weight });
            }
            if seen.insert((e.from, e.to), k).is_some() {
                return Err(ModelError::DuplicateEdge { from: e.from, to: e.to });
            }
            let bad = |reason: String| ModelError::BadTransition { edge: k, reason };
            if e.transition.is_empty() {
                return Err(bad("empty support".into()));
            }
            let mut total = 0.0;
            let mut support = Vec::with_capacity(e.transition.len());
            for &(s, p) in &e.transition {
                node_ok(s)?;
                if !(p.is_finite() && p > 0.0) {
                    return Err(bad(format!("probability {p} for node {s} must be positive")));
                }
                if support.contains(&s) {
                    return Err(bad(format!("node {s} listed twice")));
                }
                support.push(s);
                total += p;
            }
            if (total - 1.0).abs() > 1e-12 {
                return Err(bad(format!("probabilities sum to {total}")));
            }
            out[e.from].push(k);
        }
        Ok(Graph { node_count, edges, out })
    }

    pub fn deterministic(node_count: usize, arcs: &[(usize, usize)]) -> Result<Self, ModelError> {
        Graph::new(
            node_count,
            arcs.iter()
                .map(|&(from, to)| Edge { from, to, weight: 1.0, transition: vec![(to, 1.0)] })
                .collect(),
        )
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, k: usize) -> &Edge {
        &self.edges[k]
    }

    /// Out-edge indices of `s` in declaration order.
    pub fn out_edges(&self, s: usize) -> &[usize] {
        &self.out[s]
    }

    pub fn find_edge(&self, from: usize, to: usize) -> Option<usize> {
        self.out.get(from)?.iter().copied().find(|&k| self.edges[k].to == to)
    }
}

/// Running-reward rule.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum RewardMode {
    /// `w(u)` when the allocation hits the true asset and no asset has been reached yet.
    #[default]
    Standard,
    /// Explicit rewards keyed by `(edge, true asset index, allocation index)`. The current
    /// node is implied by the edge. Missing keys are zero.
    CustomTable(HashMap<(usize, usize, usize), f64>),
}

/// A validated game instance.
#[derive(Debug, Clone, PartialEq)]
pub struct DragInstance {
    graph: Graph,
    assets: Vec<usize>,
    prior: Vec<f64>,
    s0: usize,
    horizon: usize,
    threat_level: f64,
    reward_mode: RewardMode,
    asset_of: Vec<Option<usize>>,
    layout: Option<GridLayout>,
}

impl DragInstance {
    pub fn new(
        graph: Graph,
        assets: Vec<usize>,
        prior: Vec<f64>,
        s0: usize,
        horizon: usize,
        threat_level: f64,
        reward_mode: RewardMode,
    ) -> Result<Self, ModelError> {
        let n = graph.node_count();
        if assets.is_empty() {
            return Err(ModelError::InvalidAssets("at least one asset is required".into()));
        }
        let mut asset_of = vec![None; n];
        for (i, &a) in assets.iter().enumerate() {
            if a >= n {
                return Err(ModelError::InvalidNode { node: a, count: n });
            }
            if asset_of[a].replace(i).is_some() {
                return Err(ModelError::InvalidAssets(format!("node {a} listed twice")));
            }
        }
        if prior.len() != assets.len() {
            return Err(ModelError::InvalidPrior(format!(
                "{} entries for {} assets",
                prior.len(),
                assets.len()
            )));
        }
        if prior.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(ModelError::InvalidPrior("entries must be finite and nonnegative".into()));
        }
        let total: f64 = prior.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(ModelError::InvalidPrior(format!("entries sum to {total}")));
        }
        if s0 >= n {
            return Err(ModelError::InvalidNode { node: s0, count: n });
        }
        if !(threat_level.is_finite() && threat_level >= 0.0) {
            return Err(ModelError::InvalidThreat(threat_level));
        }
        if let RewardMode::CustomTable(table) = &reward_mode {
            for (&(e, t, v), r) in table {
                if e >= graph.edges().len() || t >= assets.len() || v >= assets.len() {
                    return Err(ModelError::RewardTable(format!("key ({e}, {t}, {v}) out of range")));
                }
                if !r.is_finite() {
                    return Err(ModelError::RewardTable(format!("non-finite reward at ({e}, {t}, {v})")));
                }
            }
        }
        let inst = DragInstance {
            graph,
            assets,
            prior,
            s0,
            horizon,
            threat_level,
            reward_mode,
            asset_of,
            layout: None,
        };
        inst.check_dead_ends()?;
        Ok(inst)
    }

    /// Every non-asset node reachable at a stage before the horizon must have a move.
    fn check_dead_ends(&self) -> Result<(), ModelError> {
        let n = self.graph.node_count();
        let mut first_stage = vec![usize::MAX; n];
        first_stage[self.s0] = 0;
        let mut frontier = vec![self.s0];
        for t in 0..self.horizon {
            let mut next = Vec::new();
            for &s in &frontier {
                if self.asset_of[s].is_some() {
                    continue;
                }
                if self.graph.out_edges(s).is_empty() {
                    return Err(ModelError::DeadEnd { node: s, stage: t });
                }
                for &k in self.graph.out_edges(s) {
                    for &(s2, _) in &self.graph.edge(k).transition {
                        if first_stage[s2] == usize::MAX {
                            first_stage[s2] = t + 1;
                            next.push(s2);
                        }
                    }
                }
            }
            frontier = next;
        }
        Ok(())
    }

    pub(crate) fn with_layout(mut self, layout: GridLayout) -> Self {
        self.layout = Some(layout);
        self
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn assets(&self) -> &[usize] {
        &self.assets
    }

    pub fn num_types(&self) -> usize {
        self.assets.len()
    }

    pub fn prior(&self) -> &[f64] {
        &self.prior
    }

    pub fn s0(&self) -> usize {
        self.s0
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn threat_level(&self) -> f64 {
        self.threat_level
    }

    pub fn reward_mode(&self) -> &RewardMode {
        &self.reward_mode
    }

    pub fn layout(&self) -> Option<&GridLayout> {
        self.layout.as_ref()
    }

    /// Index of `s` in the asset list, if it is an asset.
    pub fn asset_index(&self, s: usize) -> Option<usize> {
        self.asset_of[s]
    }

    /// Copy with a different prior, horizon or threat level; revalidated.
    pub fn with_prior(&self, prior: Vec<f64>) -> Result<Self, ModelError> {
        let mut out = DragInstance::new(
            self.graph.clone(),
            self.assets.clone(),
            prior,
            self.s0,
            self.horizon,
            self.threat_level,
            self.reward_mode.clone(),
        )?;
        out.layout = self.layout.clone();
        Ok(out)
    }

    pub fn with_horizon(&self, horizon: usize) -> Result<Self, ModelError> {
        let mut out = DragInstance::new(
            self.graph.clone(),
            self.assets.clone(),
            self.prior.clone(),
            self.s0,
            horizon,
            self.threat_level,
            self.reward_mode.clone(),
        )?;
        out.layout = self.layout.clone();
        Ok(out)
    }

    /// Attacker moves at `s`: all out-edges.
    pub fn action_space(&self, s: usize) -> &[usize] {
        self.graph.out_edges(s)
    }

    /// Running reward for traversing `edge` while allocating to asset `v` under type
    /// `theta`, given that no asset has been reached yet.
    pub fn stage_reward(&self, edge: usize, theta: usize, v: usize) -> f64 {
        match &self.reward_mode {
            RewardMode::Standard => {
                if v == theta {
                    self.graph.edge(edge).weight
                } else {
                    0.0
                }
            }
            RewardMode::CustomTable(t) => t.get(&(edge, theta, v)).copied().unwrap_or(0.0),
        }
    }

    /// Running reward at a history: zero once any asset appears in it.
    pub fn running_reward(&self, h: &History, theta: usize, edge: usize, v: usize) -> f64 {
        if h.states.iter().any(|&s| self.asset_of[s].is_some()) {
            0.0
        } else {
            self.stage_reward(edge, theta, v)
        }
    }

    /// Payoff when play stops at node `s`: `-m` at the true asset, zero elsewhere.
    pub fn terminal_payoff(&self, s: usize, theta: usize) -> f64 {
        if self.asset_of[s] == Some(theta) {
            -self.threat_level
        } else {
            0.0
        }
    }

    /// Terminal reward of a terminal history; `None` if `h` is not terminal.
    pub fn terminal_reward(&self, h: &History, theta: usize) -> Option<f64> {
        self.is_terminal(h).then(|| self.terminal_payoff(h.last_state(), theta))
    }

    pub fn is_terminal(&self, h: &History) -> bool {
        self.is_terminal_at(h.last_state(), h.stage())
    }

    pub fn is_terminal_at(&self, s: usize, stage: usize) -> bool {
        stage >= self.horizon || self.asset_of[s].is_some()
    }

    /// Stage payoff matrix, rows are out-edges of the current node and columns allocations.
    pub fn reward_matrix(&self, h: &History, theta: usize) -> Vec<Vec<f64>> {
        let k = self.num_types();
        self.action_space(h.last_state())
            .iter()
            .map(|&e| (0..k).map(|v| self.running_reward(h, theta, e, v)).collect())
            .collect()
    }
}

/// An interleaved sequence `s0, u0, v0, s1, ..., st`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct History {
    /// Visited nodes, `stage + 1` entries.
    pub states: Vec<usize>,
    /// Edge taken at each stage.
    pub edges: Vec<usize>,
    /// Allocation (asset index) at each stage.
    pub allocs: Vec<usize>,
}

impl History {
    pub fn root(s0: usize) -> Self {
        History { states: vec![s0], edges: Vec::new(), allocs: Vec::new() }
    }

    pub fn stage(&self) -> usize {
        self.edges.len()
    }

    pub fn last_state(&self) -> usize {
        *self.states.last().expect("history has at least one state")
    }

    pub fn extend(&self, edge: usize, alloc: usize, next: usize) -> Self {
        let mut h = self.clone();
        h.edges.push(edge);
        h.allocs.push(alloc);
        h.states.push(next);
        h
    }

    /// Canonical text form `s0|from-to>v|s1|...|st`.
    pub fn encode(&self, graph: &Graph) -> String {
        use std::fmt::Write;
        let mut out = self.states[0].to_string();
        for k in 0..self.stage() {
            let e = graph.edge(self.edges[k]);
            let _ = write!(out, "|{}-{}>{}|{}", e.from, e.to, self.allocs[k], self.states[k + 1]);
        }
        out
    }

    /// Parses the canonical form and checks it against `instance` (edges exist, the
    /// successor is in the edge's support, allocations index assets, no asset is passed
    /// through before the end, and the horizon is respected).
    pub fn decode(text: &str, instance: &DragInstance) -> Result<Self, HistoryParseError> {
        let err = |pos: usize, msg: &str| HistoryParseError { position: pos, message: msg.to_string() };
        let num = |s: &str, pos: usize| -> Result<usize, HistoryParseError> {
            if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) || (s.len() > 1 && s.starts_with('0')) {
                return Err(err(pos, "expected a decimal index"));
            }
            s.parse().map_err(|_| err(pos, "index out of range"))
        };
        let mut fields = Vec::new();
        let mut start = 0;
        for (i, c) in text.char_indices() {
            if c == '|' {
                fields.push((start, &text[start..i]));
                start = i + 1;
            }
        }
        fields.push((start, &text[start..]));
        if fields.len() % 2 == 0 {
            return Err(err(text.len(), "history must end with a state"));
        }
        let g = instance.graph();
        let (p0, f0) = fields[0];
        let s0 = num(f0, p0)?;
        if s0 >= g.node_count() {
            return Err(err(p0, "unknown node"));
        }
        let mut h = History::root(s0);
        for pair in fields[1..].chunks(2) {
            let (pm, mv) = pair[0];
            let (ps, st) = pair[1];
            if instance.is_terminal(&h) {
                return Err(err(pm, "move after a terminal state"));
            }
            let (edge_txt, alloc_txt) = mv.split_once('>').ok_or_else(|| err(pm, "expected from-to>v"))?;
            let (from_txt, to_txt) = edge_txt.split_once('-').ok_or_else(|| err(pm, "expected from-to"))?;
            let from = num(from_txt, pm)?;
            let to = num(to_txt, pm + from_txt.len() + 1)?;
            let alloc_pos = pm + edge_txt.len() + 1;
            let alloc = num(alloc_txt, alloc_pos)?;
            let next = num(st, ps)?;
            if from != h.last_state() {
                return Err(err(pm, "edge does not leave the current state"));
            }
            let e = g.find_edge(from, to).ok_or_else(|| err(pm, "no such edge"))?;
            if alloc >= instance.num_types() {
                return Err(err(alloc_pos, "allocation is not an asset index"));
            }
            if !g.edge(e).transition.iter().any(|&(s, _)| s == next) {
                return Err(err(ps, "state is not a successor of the edge"));
            }
            h = h.extend(e, alloc, next);
        }
        Ok(h)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("malformed history at byte {position}: {message}")]
pub struct HistoryParseError {
    pub position: usize,
    pub message: String,
}

#[cfg(test)]
mod tests;
