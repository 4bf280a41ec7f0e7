use super::*;
use crate::lp::{solve_lp, SolverOptions};
use crate::model::{make_grid_instance, DragInstance, Edge, Graph, RewardMode};
use crate::tree::{GameTree, DEFAULT_SIZE_CAP};
use rand::{Rng, SeedableRng};

fn path(nodes: usize, horizon: usize) -> DragInstance {
    let arcs: Vec<(usize, usize)> = (0..nodes - 1).map(|s| (s, s + 1)).collect();
    DragInstance::new(
        Graph::deterministic(nodes, &arcs).unwrap(),
        vec![nodes - 1],
        vec![1.0],
        0,
        horizon,
        25.0,
        RewardMode::Standard,
    )
    .unwrap()
}

fn two_asset_grid() -> DragInstance {
    make_grid_instance(3, 3, &[(1, 1)], &[(0, 2), (2, 2)], (0, 0), vec![0.3, 0.7], 4, 10.0).unwrap()
}

fn slip_grid() -> DragInstance {
    let base = make_grid_instance(2, 3, &[], &[(0, 2), (1, 2)], (1, 0), vec![0.5, 0.5], 3, 6.0).unwrap();
    let g = base.graph();
    let edges = g
        .edges()
        .iter()
        .map(|e| Edge { from: e.from, to: e.to, weight: e.weight, transition: vec![(e.to, 0.9), (e.from, 0.1)] })
        .collect();
    DragInstance::new(
        Graph::new(g.node_count(), edges).unwrap(),
        base.assets().to_vec(),
        vec![0.4, 0.6],
        base.s0(),
        3,
        6.0,
        RewardMode::Standard,
    )
    .unwrap()
}

fn solve(inst: &DragInstance) -> EquilibriumSolution {
    solve_pbne(inst, &PbneOptions { validate: true, ..Default::default() }).unwrap()
}

#[test]
fn single_edge_path_value() {
    let sol = solve(&path(2, 1));
    assert!((sol.game_value + 24.0).abs() < 1e-9);
    assert!((sol.attacker_value + 24.0).abs() < 1e-9);
}

#[test]
fn four_step_path_value() {
    let sol = solve(&path(5, 4));
    assert!((sol.game_value + 21.0).abs() < 1e-9);
}

#[test]
fn horizon_shorter_than_path_pays_running_rewards_only() {
    let sol = solve(&path(5, 2));
    assert!((sol.game_value - 2.0).abs() < 1e-9);
}

#[test]
fn plans_satisfy_flow_conservation() {
    for inst in [two_asset_grid(), slip_grid()] {
        let sol = solve(&inst);
        assert!(sol.defender_plan.flow_residual(&sol.tree, inst.prior()).0 <= 1e-8);
        assert!(sol.attacker_plan.flow_residual(&sol.tree, &inst).0 <= 1e-8);
        assert!(sol.duality_gap <= 1e-7);
    }
}

#[test]
fn beliefs_match_plan_ratios_on_reachable_histories() {
    for inst in [two_asset_grid(), slip_grid()] {
        let sol = solve(&inst);
        let k = inst.num_types();
        let mut checked = 0;
        for h in 0..sol.tree.len() {
            let masses: Vec<f64> = (0..k).map(|t| sol.defender_plan.mass(h, t)).collect();
            let total: f64 = masses.iter().sum();
            if total <= 1e-9 {
                continue;
            }
            checked += 1;
            assert!(!sol.beliefs.is_off_path(h));
            for t in 0..k {
                assert!((sol.beliefs.belief(h)[t] - masses[t] / total).abs() <= 1e-8, "history {h}");
            }
        }
        assert!(checked > 1);
    }
}

#[test]
fn belief_update_reproduces_the_worked_example() {
    let step = belief_update(&[0.2, 0.8], &[0.71, 0.16], ZERO_MASS).unwrap();
    assert!((step.belief[0] - 0.142 / 0.27).abs() < 1e-12);
    assert!((step.belief[0] - 0.53).abs() < 5e-3 && (step.belief[1] - 0.47).abs() < 5e-3);
    assert!((step.xi - 0.27).abs() < 1e-12);
    assert_eq!(belief_update(&[0.2, 0.8], &[0.4, 0.4], ZERO_MASS).unwrap().belief, vec![0.2, 0.8]);
    assert_eq!(belief_update(&[0.0, 1.0], &[0.9, 0.3], ZERO_MASS).unwrap().belief, vec![0.0, 1.0]);
    assert!(belief_update(&[1.0, 0.0], &[0.0, 1.0], ZERO_MASS).is_err());
}

#[test]
fn defender_policy_recovery_normalizes_and_falls_back() {
    let inst = make_grid_instance(1, 3, &[], &[(0, 0), (0, 2)], (0, 1), vec![0.2, 0.8], 1, 5.0).unwrap();
    let tree = GameTree::build(&inst, DEFAULT_SIZE_CAP).unwrap();
    let mut plan = DefenderPlan { num_types: 2, z: vec![0.0; tree.len() * 4], ell: vec![0.0; tree.len()] };
    plan.z[..4].copy_from_slice(&[0.142, 0.058, 0.0, 0.0]);
    let s = recover_defender_policy(&tree, &plan).unwrap();
    assert!((s.policy(0, 0)[0] - 0.71).abs() < 1e-12);
    assert_eq!(s.policy(0, 1), &[0.5, 0.5]);
    let scaled = recover_defender_policy(&tree, &plan.scaled(3.5)).unwrap();
    for h in 0..tree.len() {
        for t in 0..2 {
            for (a, b) in s.policy(h, t).iter().zip(scaled.policy(h, t)) {
                assert!((a - b).abs() < 1e-15);
            }
        }
    }
    plan.z[1] = -1e-6;
    assert!(matches!(recover_defender_policy(&tree, &plan), Err(PbneError::InvalidPlan { history: 0, .. })));
    plan.z[1] = -1e-12;
    assert_eq!(recover_defender_policy(&tree, &plan).unwrap().policy(0, 0), &[1.0, 0.0]);
}

#[test]
fn attacker_plans_round_trip_through_strategies() {
    let inst = slip_grid();
    let tree = GameTree::build(&inst, DEFAULT_SIZE_CAP).unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    let sigma = AttackerStrategy::from_fn(&tree, &inst, |h| {
        let raw: Vec<f64> = inst.action_space(tree.state(h)).iter().map(|_| rng.gen_range(0.05..1.0)).collect();
        let s: f64 = raw.iter().sum();
        raw.iter().map(|r| r / s).collect()
    });
    let plan = AttackerPlan::from_strategy(&tree, &inst, &sigma);
    assert!(plan.flow_residual(&tree, &inst).0 <= 1e-12);
    let back = recover_attacker_policy(&tree, &inst, &plan).unwrap();
    let again = AttackerPlan::from_strategy(&tree, &inst, &back);
    for (a, b) in plan.eta.iter().zip(&again.eta) {
        assert!((a - b).abs() <= 1e-9);
    }
    assert_eq!(plan.eta(0), sigma.policy(0));
}

#[test]
fn unreached_attacker_histories_get_uniform_moves() {
    let inst = two_asset_grid();
    let sol = solve(&inst);
    for h in 0..sol.tree.len() {
        if !sol.tree.is_leaf(h) && sol.attacker_plan.reach(h) == 0.0 {
            let p = sol.attacker.policy(h);
            assert!(p.iter().all(|&x| x == 1.0 / p.len() as f64));
        }
    }
}

#[test]
fn mirrored_equilibrium_is_an_equilibrium() {
    // Mirror-symmetric 3x3 grid: assets in the top corners, start bottom middle. The
    // solver picks one equilibrium; its reflection must be one as well, with the same value.
    use crate::evaluation::{ex_ante_value, exploitability};
    let inst = make_grid_instance(3, 3, &[], &[(0, 0), (0, 2)], (2, 1), vec![0.5, 0.5], 4, 10.0).unwrap();
    let sol = solve(&inst);
    let (tree, g, layout) = (&sol.tree, inst.graph(), inst.layout().unwrap());
    let flip = |s: usize| {
        let (r, c) = layout.cells[s];
        layout.node_at(r, 2 - c).unwrap()
    };
    let mirror = |h: usize| {
        let hist = tree.history(h);
        let mut m = crate::model::History::root(flip(hist.states[0]));
        for t in 0..hist.stage() {
            let e = g.edge(hist.edges[t]);
            let me = g.find_edge(flip(e.from), flip(e.to)).unwrap();
            m = m.extend(me, 1 - hist.allocs[t], flip(hist.states[t + 1]));
        }
        tree.find(&inst, &m).unwrap()
    };
    let attacker = AttackerStrategy::from_fn(tree, &inst, |h| {
        let m = mirror(h);
        let acts = inst.action_space(tree.state(m));
        inst.action_space(tree.state(h))
            .iter()
            .map(|&e| {
                let me = g.find_edge(flip(g.edge(e).from), flip(g.edge(e).to)).unwrap();
                sol.attacker.policy(m)[acts.iter().position(|&a| a == me).unwrap()]
            })
            .collect()
    });
    let defender = DefenderStrategy::from_fn(tree, 2, |h, t| {
        let p = sol.defender.policy(mirror(h), 1 - t);
        vec![p[1], p[0]]
    });
    let value = ex_ante_value(tree, &inst, 0, inst.prior(), &attacker, &defender);
    assert!((value - sol.game_value).abs() < 1e-9);
    let ex = exploitability(
        tree,
        &inst,
        &AttackerPlan::from_strategy(tree, &inst, &attacker),
        &DefenderPlan::from_strategy(tree, &defender, inst.prior()),
        inst.prior(),
    );
    assert!(ex.relative.abs() <= 1e-9, "{ex:?}");
}

#[test]
fn three_assets_solve_with_small_gap() {
    let inst =
        make_grid_instance(3, 3, &[], &[(0, 0), (0, 2), (2, 2)], (2, 0), vec![0.2, 0.3, 0.5], 3, 8.0).unwrap();
    let sol = solve(&inst);
    assert!(sol.duality_gap <= 1e-7 * sol.game_value.abs().max(1.0));
    assert_eq!(sol.beliefs.belief(0), inst.prior());
}

#[test]
fn defender_program_is_positively_homogeneous_in_the_prior() {
    let inst = two_asset_grid();
    let tree = GameTree::build(&inst, DEFAULT_SIZE_CAP).unwrap();
    let opts = SolverOptions::default();
    let base = solve_lp(&build_defender_lp(&tree, &inst), &opts).unwrap().objective;
    for alpha in [0.5, 2.0] {
        let mass: Vec<f64> = inst.prior().iter().map(|b| alpha * b).collect();
        let v = solve_lp(&build_defender_lp_with_mass(&tree, &inst, &mass), &opts).unwrap().objective;
        assert!((v - alpha * base).abs() <= 1e-9 * base.abs().max(1.0), "alpha {alpha}: {v} vs {base}");
    }
}

#[test]
fn belief_trajectory_agrees_with_the_map() {
    let inst = two_asset_grid();
    let sol = solve(&inst);
    for h in sol.tree.stage(sol.tree.depth() - 1) {
        let direct = belief_trajectory(&sol.tree, h, &sol.defender, inst.prior());
        let mapped = sol.beliefs.trajectory(&sol.tree, h);
        assert_eq!(direct.len(), mapped.len());
        for ((a, fa), (b, fb)) in direct.iter().zip(&mapped) {
            assert_eq!(fa, fb);
            for (x, y) in a.iter().zip(b) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn solution_documents_round_trip() {
    let inst = slip_grid();
    let sol = solve(&inst);
    let doc = SolutionDoc::from_solution(&inst, &sol, true);
    let back = read_solution(&solution_json(&doc)).unwrap();
    assert_eq!(back, doc);
    // Leaves carry no strategy entries on disk.
    let d = back.defender_strategy(&sol.tree, &inst).unwrap();
    for h in (0..sol.tree.len()).filter(|&h| !sol.tree.is_leaf(h)) {
        assert_eq!(d.policy(h, 0), sol.defender.policy(h, 0));
        assert_eq!(d.policy(h, 1), sol.defender.policy(h, 1));
    }
    assert_eq!(back.attacker_strategy(&sol.tree, &inst).unwrap(), sol.attacker);
    assert_eq!(back.defender_plan(&sol.tree, &inst).unwrap().unwrap(), sol.defender_plan);
    assert_eq!(back.attacker_plan(&sol.tree, &inst).unwrap().unwrap(), sol.attacker_plan);
    let slim = SolutionDoc::from_solution(&inst, &sol, false);
    assert!(slim.defender_plan.is_none());
    assert!(read_solution("{}").is_err());
}
