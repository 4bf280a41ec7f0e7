use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DragInstance, Edge, Graph, GridLayout, ModelError, RewardMode};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeDoc {
    from: usize,
    to: usize,
    #[serde(default = "unit")]
    weight: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    transition: Option<Vec<OutcomeDoc>>,
}

fn unit() -> f64 {
    1.0
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OutcomeDoc {
    to: usize,
    prob: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TableEntry {
    edge: usize,
    #[serde(rename = "type")]
    theta: usize,
    alloc: usize,
    reward: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum RewardDoc {
    Standard,
    CustomTable(Vec<TableEntry>),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayoutDoc {
    rows: usize,
    cols: usize,
    obstacles: Vec<[usize; 2]>,
    cells: Vec<[usize; 2]>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExplicitDoc {
    nodes: usize,
    edges: Vec<EdgeDoc>,
    assets: Vec<usize>,
    prior: Vec<f64>,
    s0: usize,
    horizon: usize,
    threat_level: f64,
    #[serde(default = "default_rewards")]
    reward_mode: RewardDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    layout: Option<LayoutDoc>,
}

fn default_rewards() -> RewardDoc {
    RewardDoc::Standard
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GridDoc {
    rows: usize,
    cols: usize,
    #[serde(default)]
    obstacles: Vec<[usize; 2]>,
    assets: Vec<[usize; 2]>,
    s0: [usize; 2],
    prior: Vec<f64>,
    horizon: usize,
    threat_level: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GridWrapper {
    grid: GridDoc,
}

fn pair(p: [usize; 2]) -> (usize, usize) {
    (p[0], p[1])
}

/// Parses an instance document, either explicit or in grid shorthand.
pub fn parse_instance(text: &str) -> Result<DragInstance, ModelError> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| ModelError::Parse(e.to_string()))?;
    if value.get("grid").is_some() {
        let doc: GridWrapper = serde_json::from_value(value).map_err(|e| ModelError::Parse(e.to_string()))?;
        let g = doc.grid;
        let obstacles: Vec<_> = g.obstacles.into_iter().map(pair).collect();
        let assets: Vec<_> = g.assets.into_iter().map(pair).collect();
        return super::make_grid_instance(
            g.rows,
            g.cols,
            &obstacles,
            &assets,
            pair(g.s0),
            g.prior,
            g.horizon,
            g.threat_level,
        );
    }
    let doc: ExplicitDoc = serde_json::from_value(value).map_err(|e| ModelError::Parse(e.to_string()))?;
    let edges = doc
        .edges
        .into_iter()
        .map(|e| Edge {
            from: e.from,
            to: e.to,
            weight: e.weight,
            transition: match e.transition {
                Some(t) => t.into_iter().map(|o| (o.to, o.prob)).collect(),
                None => vec![(e.to, 1.0)],
            },
        })
        .collect();
    let graph = Graph::new(doc.nodes, edges)?;
    let rewards = match doc.reward_mode {
        RewardDoc::Standard => RewardMode::Standard,
        RewardDoc::CustomTable(entries) => {
            let mut table = HashMap::new();
            for e in entries {
                if table.insert((e.edge, e.theta, e.alloc), e.reward).is_some() {
                    return Err(ModelError::RewardTable(format!(
                        "duplicate entry ({}, {}, {})",
                        e.edge, e.theta, e.alloc
                    )));
                }
            }
            RewardMode::CustomTable(table)
        }
    };
    let inst = DragInstance::new(graph, doc.assets, doc.prior, doc.s0, doc.horizon, doc.threat_level, rewards)?;
    Ok(match doc.layout {
        Some(l) => inst.with_layout(GridLayout {
            rows: l.rows,
            cols: l.cols,
            obstacles: l.obstacles.into_iter().map(pair).collect(),
            cells: l.cells.into_iter().map(pair).collect(),
        }),
        None => inst,
    })
}

pub fn load_instance(path: &Path) -> Result<DragInstance, ModelError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ModelError::Parse(format!("{}: {e}", path.display())))?;
    parse_instance(&text)
}

/// Explicit JSON form; grid instances keep their layout so plots can be drawn.
pub fn write_instance(inst: &DragInstance) -> String {
    let g = inst.graph();
    let edges = g
        .edges()
        .iter()
        .map(|e| EdgeDoc {
            from: e.from,
            to: e.to,
            weight: e.weight,
            transition: (e.transition != [(e.to, 1.0)])
                .then(|| e.transition.iter().map(|&(to, prob)| OutcomeDoc { to, prob }).collect()),
        })
        .collect();
    let reward_mode = match inst.reward_mode() {
        RewardMode::Standard => RewardDoc::Standard,
        RewardMode::CustomTable(t) => {
            let mut entries: Vec<TableEntry> = t
                .iter()
                .map(|(&(edge, theta, alloc), &reward)| TableEntry { edge, theta, alloc, reward })
                .collect();
            entries.sort_by_key(|e| (e.edge, e.theta, e.alloc));
            RewardDoc::CustomTable(entries)
        }
    };
    let doc = ExplicitDoc {
        nodes: g.node_count(),
        edges,
        assets: inst.assets().to_vec(),
        prior: inst.prior().to_vec(),
        s0: inst.s0(),
        horizon: inst.horizon(),
        threat_level: inst.threat_level(),
        reward_mode,
        layout: inst.layout().map(|l| LayoutDoc {
            rows: l.rows,
            cols: l.cols,
            obstacles: l.obstacles.iter().map(|&(r, c)| [r, c]).collect(),
            cells: l.cells.iter().map(|&(r, c)| [r, c]).collect(),
        }),
    };
    serde_json::to_string_pretty(&doc).expect("instance serializes") + "\n"
}
