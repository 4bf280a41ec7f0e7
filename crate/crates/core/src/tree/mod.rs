//! The explicit game tree of admissible histories.
//!
//! Ids are assigned breadth first, so each stage occupies a contiguous id range and the
//! children of a history are contiguous, ordered by attacker action (out-edge order), then
//! allocation, then successor (transition order).

use std::io::Write;
use std::ops::Range;

use crate::model::{DragInstance, History, HistoryParseError};

pub const DEFAULT_SIZE_CAP: usize = 5_000_000;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TreeError {
    #[error("game tree exceeds the size cap of {cap} histories: {count} histories through stage {stage}")]
    SizeCap { cap: usize, stage: usize, count: usize },
    #[error("edge {edge} is not available at history {history}")]
    InvalidAction { history: usize, edge: usize },
    #[error("allocation {alloc} is not an asset index")]
    InvalidAlloc { alloc: usize },
    #[error("history {0} is terminal and has no successors")]
    Terminal(usize),
    #[error(transparent)]
    Parse(#[from] HistoryParseError),
    #[error("history {0:?} is not in the tree")]
    NotInTree(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    pub state: u32,
    pub stage: u32,
    /// `u32::MAX` at the root.
    pub parent: u32,
    /// Incoming edge; `u32::MAX` at the root.
    pub edge: u32,
    /// Incoming allocation.
    pub alloc: u32,
    /// Transition probability of the incoming step; 1 at the root.
    pub prob: f64,
    pub first_child: u32,
    pub num_children: u32,
    pub leaf: bool,
}

impl Node {
    pub fn parent(&self) -> Option<usize> {
        (self.parent != u32::MAX).then_some(self.parent as usize)
    }

    pub fn children(&self) -> Range<usize> {
        let f = self.first_child as usize;
        f..f + self.num_children as usize
    }
}

#[derive(Debug, Clone)]
pub struct GameTree {
    nodes: Vec<Node>,
    stage_start: Vec<usize>,
    num_types: usize,
    /// Support size of each edge's transition.
    support: Vec<usize>,
}

impl GameTree {
    /// Enumerates all admissible histories, stopping at arrival on an asset or the horizon.
    pub fn build(inst: &DragInstance, size_cap: usize) -> Result<Self, TreeError> {
        let g = inst.graph();
        let k = inst.num_types();
        let support: Vec<usize> = g.edges().iter().map(|e| e.transition.len()).collect();
        let fanout = |s: usize| -> usize { inst.action_space(s).iter().map(|&e| support[e]).sum::<usize>() * k };
        let root_leaf = inst.is_terminal_at(inst.s0(), 0);
        let mut nodes = vec![Node {
            state: inst.s0() as u32,
            stage: 0,
            parent: u32::MAX,
            edge: u32::MAX,
            alloc: 0,
            prob: 1.0,
            first_child: 0,
            num_children: 0,
            leaf: root_leaf,
        }];
        if size_cap < 1 {
            return Err(TreeError::SizeCap { cap: size_cap, stage: 0, count: 1 });
        }
        let mut stage_start = vec![0, 1];
        let mut t = 0;
        loop {
            let range = stage_start[t]..stage_start[t + 1];
            let mut next_count = 0usize;
            for h in range.clone() {
                if !nodes[h].leaf {
                    next_count += fanout(nodes[h].state as usize);
                }
            }
            if next_count == 0 {
                break;
            }
            let total = nodes.len() + next_count;
            if total > size_cap || total > u32::MAX as usize {
                return Err(TreeError::SizeCap { cap: size_cap, stage: t + 1, count: total });
            }
            nodes.reserve(next_count);
            for h in range {
                if nodes[h].leaf {
                    continue;
                }
                let s = nodes[h].state as usize;
                nodes[h].first_child = nodes.len() as u32;
                nodes[h].num_children = fanout(s) as u32;
                for &e in inst.action_space(s) {
                    for v in 0..k {
                        for &(s2, p) in &g.edge(e).transition {
                            nodes.push(Node {
                                state: s2 as u32,
                                stage: (t + 1) as u32,
                                parent: h as u32,
                                edge: e as u32,
                                alloc: v as u32,
                                prob: p,
                                first_child: 0,
                                num_children: 0,
                                leaf: inst.is_terminal_at(s2, t + 1),
                            });
                        }
                    }
                }
            }
            stage_start.push(nodes.len());
            t += 1;
        }
        Ok(GameTree { nodes, stage_start, num_types: k, support })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn num_types(&self) -> usize {
        self.num_types
    }

    pub fn node(&self, h: usize) -> &Node {
        &self.nodes[h]
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    /// Number of stages present (deepest stage + 1).
    pub fn depth(&self) -> usize {
        self.stage_start.len() - 1
    }

    pub fn stage(&self, t: usize) -> Range<usize> {
        self.stage_start[t]..self.stage_start[t + 1]
    }

    pub fn stage_sizes(&self) -> Vec<usize> {
        self.stage_start.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn is_leaf(&self, h: usize) -> bool {
        self.nodes[h].leaf
    }

    pub fn state(&self, h: usize) -> usize {
        self.nodes[h].state as usize
    }

    /// Children reached through the `k`-th action at `h`, covering all allocations and
    /// successors, laid out allocation-major.
    pub fn action_children(&self, inst: &DragInstance, h: usize, k: usize) -> Range<usize> {
        let node = &self.nodes[h];
        let acts = inst.action_space(node.state as usize);
        let mut start = node.first_child as usize;
        for &e in &acts[..k] {
            start += self.support[e] * self.num_types;
        }
        start..start + self.support[acts[k]] * self.num_types
    }

    /// Children of `h` under action index `k` and allocation `v`.
    pub fn outcome_children(&self, inst: &DragInstance, h: usize, k: usize, v: usize) -> Range<usize> {
        let block = self.action_children(inst, h, k);
        let w = block.len() / self.num_types;
        block.start + v * w..block.start + (v + 1) * w
    }

    /// Successor histories of `h` under edge `edge` and allocation `v`, with probabilities.
    pub fn successors(
        &self,
        inst: &DragInstance,
        h: usize,
        edge: usize,
        v: usize,
    ) -> Result<Vec<(usize, f64)>, TreeError> {
        if self.nodes[h].leaf {
            return Err(TreeError::Terminal(h));
        }
        let k = inst
            .action_space(self.state(h))
            .iter()
            .position(|&e| e == edge)
            .ok_or(TreeError::InvalidAction { history: h, edge })?;
        if v >= self.num_types {
            return Err(TreeError::InvalidAlloc { alloc: v });
        }
        Ok(self.outcome_children(inst, h, k, v).map(|c| (c, self.nodes[c].prob)).collect())
    }

    /// Path of ids from the root to `h`, inclusive.
    pub fn path(&self, h: usize) -> Vec<usize> {
        let mut path = vec![h];
        let mut cur = h;
        while let Some(p) = self.nodes[cur].parent() {
            path.push(p);
            cur = p;
        }
        path.reverse();
        path
    }

    pub fn history(&self, h: usize) -> History {
        let path = self.path(h);
        let mut hist = History::root(self.state(path[0]));
        for &c in &path[1..] {
            let n = &self.nodes[c];
            hist = hist.extend(n.edge as usize, n.alloc as usize, n.state as usize);
        }
        hist
    }

    pub fn encode(&self, inst: &DragInstance, h: usize) -> String {
        self.history(h).encode(inst.graph())
    }

    /// Id of a history, if it is in the tree.
    pub fn find(&self, inst: &DragInstance, hist: &History) -> Option<usize> {
        if self.state(0) != hist.states[0] {
            return None;
        }
        let mut h = 0;
        for t in 0..hist.stage() {
            if self.nodes[h].leaf {
                return None;
            }
            let k = inst.action_space(self.state(h)).iter().position(|&e| e == hist.edges[t])?;
            let v = hist.allocs[t];
            if v >= self.num_types {
                return None;
            }
            h = self
                .outcome_children(inst, h, k, v)
                .find(|&c| self.state(c) == hist.states[t + 1])?;
        }
        Some(h)
    }

    pub fn decode(&self, inst: &DragInstance, text: &str) -> Result<usize, TreeError> {
        let hist = History::decode(text, inst)?;
        self.find(inst, &hist).ok_or_else(|| TreeError::NotInTree(text.to_string()))
    }

    /// One JSON object per history: id, parent, stage, state, incoming label, leaf flag.
    pub fn dump_jsonl(&self, inst: &DragInstance, out: &mut impl Write) -> std::io::Result<()> {
        let g = inst.graph();
        for (id, n) in self.nodes.iter().enumerate() {
            let label = n.parent().map(|_| {
                let e = g.edge(n.edge as usize);
                serde_json::json!({ "from": e.from, "to": e.to, "alloc": n.alloc, "prob": n.prob })
            });
            let line = serde_json::json!({
                "id": id,
                "parent": n.parent(),
                "stage": n.stage,
                "state": n.state,
                "label": label,
                "leaf": n.leaf,
                "history": self.encode(inst, id),
            });
            writeln!(out, "{line}")?;
        }
        Ok(())
    }
}
