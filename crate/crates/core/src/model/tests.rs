use super::*;
use rand::{Rng, SeedableRng};

fn path_instance() -> DragInstance {
    let g = Graph::deterministic(2, &[(0, 1)]).unwrap();
    DragInstance::new(g, vec![1], vec![1.0], 0, 1, 25.0, RewardMode::Standard).unwrap()
}

/// Free-cell adjacency counted straight from coordinates, independent of the generator.
fn adjacent_free_pairs(rows: usize, cols: usize, obstacles: &[(usize, usize)]) -> usize {
    let free = |r: usize, c: usize| !obstacles.contains(&(r, c));
    let mut n = 0;
    for r in 0..rows {
        for c in 0..cols {
            if !free(r, c) {
                continue;
            }
            if r + 1 < rows && free(r + 1, c) {
                n += 1;
            }
            if c + 1 < cols && free(r, c + 1) {
                n += 1;
            }
        }
    }
    n
}

#[test]
fn grid_node_and_edge_counts() {
    let obstacles = [(1, 1), (2, 2)];
    let g = make_grid_instance(4, 4, &obstacles, &[(0, 3), (0, 1)], (3, 0), vec![0.2, 0.8], 6, 25.0).unwrap();
    assert_eq!(g.graph().node_count(), 14);
    assert_eq!(g.graph().edges().len(), 2 * adjacent_free_pairs(4, 4, &obstacles));

    let g = make_grid_instance(3, 3, &[], &[(0, 0)], (2, 2), vec![1.0], 2, 1.0).unwrap();
    assert_eq!(g.graph().node_count(), 9);
    assert_eq!(g.graph().edges().len(), 24);

    let g = make_grid_instance(1, 2, &[], &[(0, 1)], (0, 0), vec![1.0], 1, 1.0).unwrap();
    assert_eq!(g.graph().edges().len(), 2);
    assert_eq!(g.action_space(g.s0()).len(), 1);
}

#[test]
fn action_space_next_to_obstacle() {
    // Center of a 3×3 grid with the cell above it blocked.
    let g = make_grid_instance(3, 3, &[(0, 1)], &[(0, 0)], (1, 1), vec![1.0], 2, 1.0).unwrap();
    let center = g.layout().unwrap().node_at(1, 1).unwrap();
    let heads: Vec<(usize, usize)> = g
        .action_space(center)
        .iter()
        .map(|&k| g.layout().unwrap().cells[g.graph().edge(k).to])
        .collect();
    assert_eq!(heads, vec![(2, 1), (1, 0), (1, 2)]);
}

#[test]
fn grid_rejects_bad_layouts() {
    assert!(matches!(
        make_grid_instance(2, 2, &[(0, 1), (1, 0)], &[(1, 1)], (0, 0), vec![1.0], 3, 1.0),
        Err(ModelError::Disconnected(_))
    ));
    assert!(matches!(
        make_grid_instance(2, 2, &[(1, 1)], &[(1, 1)], (0, 0), vec![1.0], 3, 1.0),
        Err(ModelError::Grid(_))
    ));
}

#[test]
fn rewards_follow_the_default_rule() {
    let inst = path_instance();
    let root = History::root(0);
    assert_eq!(inst.running_reward(&root, 0, 0, 0), 1.0);
    assert_eq!(inst.reward_matrix(&root, 0), vec![vec![1.0]]);
    assert_eq!(inst.terminal_reward(&root, 0), None);
    let leaf = root.extend(0, 0, 1);
    assert!(inst.is_terminal(&leaf));
    assert_eq!(inst.terminal_reward(&leaf, 0), Some(-25.0));
    assert_eq!(inst.running_reward(&leaf, 0, 0, 0), 0.0);
}

#[test]
fn decoy_and_timeout_payoffs_are_zero() {
    let g = Graph::deterministic(3, &[(0, 1), (0, 2)]).unwrap();
    let inst = DragInstance::new(g, vec![1, 2], vec![0.5, 0.5], 0, 1, 25.0, RewardMode::Standard).unwrap();
    assert_eq!(inst.terminal_payoff(2, 0), 0.0);
    assert_eq!(inst.terminal_payoff(1, 0), -25.0);
    let row = &inst.reward_matrix(&History::root(0), 1);
    assert_eq!(row, &vec![vec![0.0, 1.0], vec![0.0, 1.0]]);
}

#[test]
fn validation_errors_have_distinct_codes() {
    let g = || Graph::deterministic(2, &[(0, 1)]).unwrap();
    let prior = DragInstance::new(g(), vec![1], vec![0.9], 0, 1, 1.0, RewardMode::Standard).unwrap_err();
    let weight = Graph::new(2, vec![Edge { from: 0, to: 1, weight: 0.0, transition: vec![(1, 1.0)] }]).unwrap_err();
    let trans = Graph::new(2, vec![Edge { from: 0, to: 1, weight: 1.0, transition: vec![(1, 0.7)] }]).unwrap_err();
    let dead = DragInstance::new(
        Graph::deterministic(3, &[(0, 1)]).unwrap(),
        vec![2],
        vec![1.0],
        0,
        3,
        1.0,
        RewardMode::Standard,
    )
    .unwrap_err();
    let codes = [prior.code(), weight.code(), trans.code(), dead.code()];
    assert_eq!(codes, ["invalid_prior", "nonpositive_weight", "unnormalized_transition", "dead_end"]);
}

#[test]
fn initial_state_at_asset_is_allowed() {
    let g = Graph::deterministic(2, &[(0, 1)]).unwrap();
    let inst = DragInstance::new(g, vec![0, 1], vec![0.3, 0.7], 0, 4, 10.0, RewardMode::Standard).unwrap();
    assert!(inst.is_terminal(&History::root(0)));
}

fn chain_instance() -> DragInstance {
    let mut arcs = vec![(2, 3), (3, 5), (5, 9), (3, 4)];
    let ring: Vec<(usize, usize)> = (0..9).map(|s| (s, s + 1)).filter(|a| !arcs.contains(a)).collect();
    arcs.extend(ring);
    let g = Graph::deterministic(10, &arcs).unwrap();
    DragInstance::new(g, vec![9, 7], vec![0.5, 0.5], 2, 5, 25.0, RewardMode::Standard).unwrap()
}

#[test]
fn history_encoding_matches_rule() {
    let inst = chain_instance();
    let g = inst.graph();
    let h = History::root(2)
        .extend(g.find_edge(2, 3).unwrap(), 0, 3)
        .extend(g.find_edge(3, 5).unwrap(), 0, 5)
        .extend(g.find_edge(5, 9).unwrap(), 0, 9);
    assert_eq!(History::root(2).encode(g), "2");
    assert_eq!(h.encode(g), "2|2-3>0|3|3-5>0|5|5-9>0|9");
    assert_eq!(History::decode("2|2-3>0|3|3-5>0|5|5-9>0|9", &inst).unwrap(), h);
}

#[test]
fn malformed_histories_report_positions() {
    let inst = chain_instance();
    assert_eq!(History::decode("2|2-3>0", &inst).unwrap_err().position, 7);
    assert_eq!(History::decode("2|2-3>x|3", &inst).unwrap_err().position, 6);
    assert_eq!(History::decode("2|2-4>0|4", &inst).unwrap_err().position, 2);
    assert_eq!(History::decode("2|2-3>0|4", &inst).unwrap_err().position, 8);
    assert!(History::decode("02", &inst).is_err());
}

#[test]
fn random_histories_round_trip() {
    let inst = chain_instance();
    let g = inst.graph();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    for _ in 0..1000 {
        let mut h = History::root(inst.s0());
        while !inst.is_terminal(&h) {
            let acts = inst.action_space(h.last_state());
            let e = acts[rng.gen_range(0..acts.len())];
            h = h.extend(e, rng.gen_range(0..2), g.edge(e).to);
        }
        let text = h.encode(g);
        assert_eq!(History::decode(&text, &inst).unwrap(), h);
    }
}

#[test]
fn instance_json_round_trips() {
    let grid = r#"{"grid": {"rows": 3, "cols": 3, "obstacles": [[1, 1]], "assets": [[0, 2], [2, 2]],
        "s0": [0, 0], "prior": [0.4, 0.6], "horizon": 4, "threat_level": 10}}"#;
    let inst = parse_instance(grid).unwrap();
    assert_eq!(inst.graph().node_count(), 8);
    let text = write_instance(&inst);
    assert_eq!(parse_instance(&text).unwrap(), inst);

    let mut table = std::collections::HashMap::new();
    table.insert((0, 0, 1), 2.5);
    let slip = Graph::new(
        3,
        vec![
            Edge { from: 0, to: 1, weight: 2.0, transition: vec![(1, 0.9), (0, 0.1)] },
            Edge { from: 0, to: 2, weight: 1.0, transition: vec![(2, 1.0)] },
        ],
    )
    .unwrap();
    let inst = DragInstance::new(slip, vec![1, 2], vec![0.5, 0.5], 0, 3, 7.0, RewardMode::CustomTable(table)).unwrap();
    let text = write_instance(&inst);
    assert_eq!(parse_instance(&text).unwrap(), inst);
    assert_eq!(inst.stage_reward(0, 0, 1), 2.5);
    assert_eq!(inst.stage_reward(0, 0, 0), 0.0);
}

#[test]
fn instance_parse_errors() {
    assert_eq!(parse_instance("{").unwrap_err().code(), "parse_error");
    let bad = r#"{"nodes": 2, "edges": [{"from": 0, "to": 1}], "assets": [1], "prior": [1.0],
        "s0": 0, "horizon": 1, "threat_level": 1, "typo": 3}"#;
    assert_eq!(parse_instance(bad).unwrap_err().code(), "parse_error");
}
