//! Random instance families shared by the acceptance suite and the property tests.

#![allow(dead_code, clippy::needless_range_loop)]

use drag::model::{make_grid_instance, DragInstance, Edge, Graph, RewardMode};
use drag::tree::GameTree;
use rand::seq::SliceRandom;
use rand::Rng;

/// Largest tree the random suites solve; larger draws shorten their horizon.
pub const SUITE_TREE_CAP: usize = 20_000;

/// Same graph with every move slipping back to its tail with probability 0.1.
pub fn with_slip(inst: &DragInstance) -> DragInstance {
    let edges = inst
        .graph()
        .edges()
        .iter()
        .map(|e| Edge { from: e.from, to: e.to, weight: e.weight, transition: vec![(e.to, 0.9), (e.from, 0.1)] })
        .collect();
    let graph = Graph::new(inst.graph().node_count(), edges).unwrap();
    DragInstance::new(
        graph,
        inst.assets().to_vec(),
        inst.prior().to_vec(),
        inst.s0(),
        inst.horizon(),
        inst.threat_level(),
        RewardMode::Standard,
    )
    .unwrap()
}

pub fn random_prior(rng: &mut impl Rng, k: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..k).map(|_| rng.gen_range(0.05..1.0)).collect();
    let s: f64 = w.iter().sum();
    w.iter().map(|x| x / s).collect()
}

/// A grid of at most 3×3 with up to two obstacles, one to three assets, a horizon of at
/// most five, and deterministic or slipping moves. The horizon is shortened until the
/// tree has at most [`SUITE_TREE_CAP`] histories.
pub fn random_grid(rng: &mut impl Rng) -> DragInstance {
    loop {
        let (rows, cols) = (rng.gen_range(2..=3), rng.gen_range(2..=3));
        let mut cells: Vec<(usize, usize)> = (0..rows).flat_map(|r| (0..cols).map(move |c| (r, c))).collect();
        cells.shuffle(rng);
        let k = rng.gen_range(1..=3);
        let n_obs = rng.gen_range(0..=2usize).min(cells.len() - k - 1);
        let s0 = cells[0];
        let assets = &cells[1..=k];
        let obstacles = &cells[k + 1..k + 1 + n_obs];
        let horizon = rng.gen_range(1..=5);
        let m = rng.gen_range(1.0..30.0);
        let Ok(mut inst) = make_grid_instance(rows, cols, obstacles, assets, s0, random_prior(rng, k), horizon, m) else {
            continue;
        };
        if rng.gen_bool(0.5) {
            inst = with_slip(&inst);
        }
        let mut t = horizon;
        while GameTree::build(&inst, SUITE_TREE_CAP).is_err() {
            t -= 1;
            inst = inst.with_horizon(t).unwrap();
        }
        return inst;
    }
}

/// A one-shot instance: the start node has one to four moves, each landing on an asset or
/// a plain node (possibly slipping elsewhere), with random weights and horizon 0 or 1.
pub fn random_one_shot(rng: &mut impl Rng) -> DragInstance {
    let k = rng.gen_range(1..=3);
    let u = rng.gen_range(1..=4);
    // Node 0 is the start, 1..=k the assets, then two plain nodes.
    let n = k + 3;
    let mut edges = Vec::new();
    let mut heads: Vec<usize> = (1..n).collect();
    heads.shuffle(rng);
    for &to in heads.iter().take(u) {
        let transition = if rng.gen_bool(0.3) {
            let other = *heads.iter().find(|&&x| x != to).unwrap_or(&0);
            vec![(to, 0.9), (other, 0.1)]
        } else {
            vec![(to, 1.0)]
        };
        edges.push(Edge { from: 0, to, weight: rng.gen_range(0.5..3.0), transition });
    }
    for s in k + 1..n {
        edges.push(Edge { from: s, to: 0, weight: 1.0, transition: vec![(0, 1.0)] });
    }
    let graph = Graph::new(n, edges).unwrap();
    let horizon = if rng.gen_bool(0.9) { 1 } else { 0 };
    DragInstance::new(graph, (1..=k).collect(), random_prior(rng, k), 0, horizon, rng.gen_range(1.0..30.0), RewardMode::Standard)
        .unwrap()
}

/// Value of the one-shot game by brute force over the attacker's mixed strategies.
///
/// With horizon 1 the defender picks, per asset θ, a distribution over allocations and the
/// attacker a distribution `y` over its moves, so the value is
/// `min_y Σ_θ b_θ max_v y·g_θv`, where `g_θv(u)` is the running plus expected terminal
/// payoff. That function is convex and piecewise linear on the simplex, so its minimum sits
/// at a vertex of the arrangement of the facets `y_u = 0` and the ties `y·g_θv = y·g_θv'`.
/// Every vertex is enumerated.
pub fn one_shot_oracle(inst: &DragInstance) -> f64 {
    let k = inst.num_types();
    let prior = inst.prior();
    if inst.horizon() == 0 || inst.asset_index(inst.s0()).is_some() {
        let s = inst.s0();
        return (0..k).map(|t| prior[t] * inst.terminal_payoff(s, t)).sum();
    }
    let acts = inst.action_space(inst.s0()).to_vec();
    let nu = acts.len();
    // g[θ][v][u]
    let g: Vec<Vec<Vec<f64>>> = (0..k)
        .map(|t| {
            (0..k)
                .map(|v| {
                    acts.iter()
                        .map(|&e| {
                            let edge = inst.graph().edge(e);
                            let terminal: f64 = edge.transition.iter().map(|&(s, p)| p * inst.terminal_payoff(s, t)).sum();
                            inst.stage_reward(e, t, v) + terminal
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    let f = |y: &[f64]| -> f64 {
        (0..k)
            .map(|t| {
                let best = (0..k)
                    .map(|v| (0..nu).map(|u| y[u] * g[t][v][u]).sum::<f64>())
                    .fold(f64::NEG_INFINITY, f64::max);
                prior[t] * best
            })
            .sum()
    };
    let mut planes: Vec<Vec<f64>> = (0..nu)
        .map(|u| {
            let mut r = vec![0.0; nu];
            r[u] = 1.0;
            r
        })
        .collect();
    for t in 0..k {
        for v in 0..k {
            for w in v + 1..k {
                planes.push((0..nu).map(|u| g[t][v][u] - g[t][w][u]).collect());
            }
        }
    }
    let mut best = f64::INFINITY;
    for subset in subsets(planes.len(), nu - 1) {
        let mut a: Vec<Vec<f64>> = subset.iter().map(|&i| planes[i].clone()).collect();
        let mut rhs = vec![0.0; nu - 1];
        a.push(vec![1.0; nu]);
        rhs.push(1.0);
        if let Some(y) = solve_dense(a, rhs) {
            if y.iter().all(|&x| x >= -1e-12) {
                let y: Vec<f64> = y.iter().map(|x| x.max(0.0)).collect();
                best = best.min(f(&y));
            }
        }
    }
    best
}

fn subsets(n: usize, r: usize) -> Vec<Vec<usize>> {
    if r == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for first in 0..n {
        for mut rest in subsets(n, r - 1).into_iter().filter(|s| s.first().is_none_or(|&x| x > first)) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Gaussian elimination with partial pivoting; `None` when the system is singular.
fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[p][c].abs() < 1e-10 {
            return None;
        }
        a.swap(c, p);
        b.swap(c, p);
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            for j in c..n {
                a[r][j] -= f * a[c][j];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|j| a[r][j] * x[j]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}
