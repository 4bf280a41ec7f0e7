use std::collections::VecDeque;

use super::{DragInstance, Graph, ModelError, RewardMode};

/// Cell coordinates of each node of a grid instance. Nodes are the free cells in
/// row-major order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridLayout {
    pub rows: usize,
    pub cols: usize,
    pub obstacles: Vec<(usize, usize)>,
    pub cells: Vec<(usize, usize)>,
}

impl GridLayout {
    pub fn node_at(&self, row: usize, col: usize) -> Option<usize> {
        self.cells.iter().position(|&c| c == (row, col))
    }
}

/// 4-connected grid over the non-obstacle cells with unit weights and deterministic moves.
/// Out-edges are ordered up, down, left, right.
#[allow(clippy::too_many_arguments)]
pub fn make_grid_instance(
    rows: usize,
    cols: usize,
    obstacles: &[(usize, usize)],
    assets: &[(usize, usize)],
    s0: (usize, usize),
    prior: Vec<f64>,
    horizon: usize,
    threat_level: f64,
) -> Result<DragInstance, ModelError> {
    if rows == 0 || cols == 0 {
        return Err(ModelError::Grid("grid must have at least one cell".into()));
    }
    let inside = |(r, c): (usize, usize)| r < rows && c < cols;
    let mut blocked = vec![false; rows * cols];
    for &o in obstacles {
        if !inside(o) {
            return Err(ModelError::Grid(format!("obstacle {o:?} outside the grid")));
        }
        blocked[o.0 * cols + o.1] = true;
    }
    let mut id = vec![usize::MAX; rows * cols];
    let mut cells = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            if !blocked[r * cols + c] {
                id[r * cols + c] = cells.len();
                cells.push((r, c));
            }
        }
    }
    let node = |cell: (usize, usize), what: &str| -> Result<usize, ModelError> {
        if !inside(cell) {
            return Err(ModelError::Grid(format!("{what} {cell:?} outside the grid")));
        }
        match id[cell.0 * cols + cell.1] {
            usize::MAX => Err(ModelError::Grid(format!("{what} {cell:?} is an obstacle"))),
            k => Ok(k),
        }
    };
    let start = node(s0, "initial state")?;
    let asset_nodes = assets
        .iter()
        .map(|&a| node(a, "asset"))
        .collect::<Result<Vec<_>, _>>()?;

    let mut arcs = Vec::new();
    for &(r, c) in &cells {
        let from = id[r * cols + c];
        let steps: [(isize, isize); 4] = [(-1, 0), (1, 0), (0, -1), (0, 1)];
        for (dr, dc) in steps {
            let (nr, nc) = (r as isize + dr, c as isize + dc);
            if nr < 0 || nc < 0 || nr as usize >= rows || nc as usize >= cols {
                continue;
            }
            let to = id[nr as usize * cols + nc as usize];
            if to != usize::MAX {
                arcs.push((from, to));
            }
        }
    }
    let graph = Graph::deterministic(cells.len(), &arcs)?;

    let mut seen = vec![false; cells.len()];
    seen[start] = true;
    let mut queue = VecDeque::from([start]);
    while let Some(s) = queue.pop_front() {
        for &k in graph.out_edges(s) {
            let t = graph.edge(k).to;
            if !seen[t] {
                seen[t] = true;
                queue.push_back(t);
            }
        }
    }
    if let Some(&a) = asset_nodes.iter().find(|&&a| !seen[a]) {
        return Err(ModelError::Disconnected(a));
    }

    let layout = GridLayout { rows, cols, obstacles: obstacles.to_vec(), cells };
    Ok(DragInstance::new(graph, asset_nodes, prior, start, horizon, threat_level, RewardMode::Standard)?
        .with_layout(layout))
}

/// Horizon of the bundled instance. The full horizon of ten stages gives about 1.7
/// million histories, more than the two programs can be solved for in memory and time on
/// a small machine, so the horizon is frozen at the largest value that solves in minutes.
pub const CANONICAL_HORIZON: usize = 8;

/// The bundled 4×4 instance. The start cell opens only upward, so both shortest attacks
/// share their first steps; the decoy is 6 moves away and the real-asset favourite 4, so
/// the full-information values are −19 and −21 with threat level 25.
pub fn canonical_instance() -> DragInstance {
    make_grid_instance(4, 4, &[(2, 1), (3, 1)], &[(0, 3), (0, 1)], (3, 0), vec![0.2, 0.8], CANONICAL_HORIZON, 25.0)
        .expect("canonical layout is valid")
}
