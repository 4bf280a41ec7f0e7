use std::str::FromStr;

use crate::model::DragInstance;
use crate::pbne::{AttackerStrategy, DefenderStrategy};
use crate::tree::GameTree;

use super::EvalError;

/// Fixed reference strategies for deviation tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Baseline {
    /// Attacker moves uniformly at random.
    RandomAttacker,
    /// Attacker follows a shortest path to the asset with the highest prior.
    HighPriorPath,
    /// Attacker follows a shortest path to the asset with the lowest prior.
    LowPriorPath,
    /// Defender allocates uniformly at random.
    RandomDefender,
    /// Defender always allocates to the true asset.
    TruthfulDefender,
    /// Defender always allocates to a decoy: the other asset, or uniformly over the others
    /// when there are more than two.
    DecoyDefender,
    /// Defender always allocates to the given asset index.
    ConstantDefender(usize),
}

pub const ATTACKER_BASELINES: [&str; 3] = ["RS-A", "HPSP-A", "LPSP-A"];
pub const DEFENDER_BASELINES: [&str; 3] = ["RS-D", "TC-D", "TO-D"];

impl FromStr for Baseline {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, EvalError> {
        Ok(match s {
            "RS-A" => Baseline::RandomAttacker,
            "HPSP-A" => Baseline::HighPriorPath,
            "LPSP-A" => Baseline::LowPriorPath,
            "RS-D" => Baseline::RandomDefender,
            "TC-D" => Baseline::TruthfulDefender,
            "TO-D" => Baseline::DecoyDefender,
            _ => {
                let k = s
                    .strip_prefix('C')
                    .and_then(|r| r.strip_suffix("-D"))
                    .and_then(|d| d.parse().ok())
                    .ok_or_else(|| EvalError::UnknownBaseline(s.to_string()))?;
                Baseline::ConstantDefender(k)
            }
        })
    }
}

impl Baseline {
    pub fn name(&self) -> String {
        match self {
            Baseline::RandomAttacker => "RS-A".into(),
            Baseline::HighPriorPath => "HPSP-A".into(),
            Baseline::LowPriorPath => "LPSP-A".into(),
            Baseline::RandomDefender => "RS-D".into(),
            Baseline::TruthfulDefender => "TC-D".into(),
            Baseline::DecoyDefender => "TO-D".into(),
            Baseline::ConstantDefender(k) => format!("C{k}-D"),
        }
    }

    pub fn is_attacker(&self) -> bool {
        matches!(self, Baseline::RandomAttacker | Baseline::HighPriorPath | Baseline::LowPriorPath)
    }
}

/// Weighted distance from every node to `target`, never passing through another asset.
/// Slip outcomes are ignored: each edge is taken to lead to its nominal head.
fn distances_to(inst: &DragInstance, target: usize) -> Vec<f64> {
    let g = inst.graph();
    let n = g.node_count();
    let mut incoming: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (k, e) in g.edges().iter().enumerate() {
        incoming[e.to].push(k);
    }
    let mut dist = vec![f64::INFINITY; n];
    let mut done = vec![false; n];
    dist[target] = 0.0;
    // Dense Dijkstra: graphs here are small.
    loop {
        let next = (0..n).filter(|&s| !done[s] && dist[s].is_finite()).min_by(|&a, &b| dist[a].total_cmp(&dist[b]));
        let Some(u) = next else { break };
        done[u] = true;
        if u != target && inst.asset_index(u).is_some() {
            continue;
        }
        for &k in &incoming[u] {
            let e = g.edge(k);
            let d = dist[u] + e.weight;
            if d < dist[e.from] {
                dist[e.from] = d;
            }
        }
    }
    dist
}

/// Asset index with the highest (or lowest) prior; ties go to the lowest index.
fn target_asset(inst: &DragInstance, highest: bool) -> usize {
    let prior = inst.prior();
    let mut best = 0;
    for t in 1..prior.len() {
        if (highest && prior[t] > prior[best]) || (!highest && prior[t] < prior[best]) {
            best = t;
        }
    }
    best
}

pub fn attacker_baseline(b: Baseline, inst: &DragInstance, tree: &GameTree) -> Result<AttackerStrategy, EvalError> {
    let g = inst.graph();
    match b {
        Baseline::RandomAttacker => Ok(AttackerStrategy::from_fn(tree, inst, |h| {
            let n = inst.action_space(tree.state(h)).len();
            vec![1.0 / n as f64; n]
        })),
        Baseline::HighPriorPath | Baseline::LowPriorPath => {
            let target = inst.assets()[target_asset(inst, b == Baseline::HighPriorPath)];
            let dist = distances_to(inst, target);
            Ok(AttackerStrategy::from_fn(tree, inst, |h| {
                let acts = inst.action_space(tree.state(h));
                let mut best = (f64::INFINITY, 0);
                for (j, &e) in acts.iter().enumerate() {
                    let edge = g.edge(e);
                    let d = edge.weight + dist[edge.to];
                    if d < best.0 {
                        best = (d, j);
                    }
                }
                let mut p = vec![0.0; acts.len()];
                p[best.1] = 1.0;
                p
            }))
        }
        other => Err(EvalError::UnknownBaseline(format!("{} is not an attacker baseline", other.name()))),
    }
}

pub fn defender_baseline(b: Baseline, inst: &DragInstance, tree: &GameTree) -> Result<DefenderStrategy, EvalError> {
    let k = inst.num_types();
    let point = |v: usize| {
        let mut p = vec![0.0; k];
        p[v] = 1.0;
        p
    };
    match b {
        Baseline::RandomDefender => Ok(DefenderStrategy::from_fn(tree, k, |_, _| vec![1.0 / k as f64; k])),
        Baseline::TruthfulDefender => Ok(DefenderStrategy::from_fn(tree, k, |_, t| point(t))),
        Baseline::DecoyDefender => Ok(DefenderStrategy::from_fn(tree, k, |_, t| {
            if k == 1 {
                return point(0);
            }
            (0..k).map(|v| if v == t { 0.0 } else { 1.0 / (k - 1) as f64 }).collect()
        })),
        Baseline::ConstantDefender(v) if v < k => Ok(DefenderStrategy::from_fn(tree, k, |_, _| point(v))),
        Baseline::ConstantDefender(v) => Err(EvalError::UnknownBaseline(format!("C{v}-D: no asset {v}"))),
        other => Err(EvalError::UnknownBaseline(format!("{} is not a defender baseline", other.name()))),
    }
}
