use super::*;
use crate::model::{make_grid_instance, DragInstance, Edge, Graph, RewardMode};
use crate::pbne::{solve_pbne, AttackerPlan, DefenderPlan, PbneOptions};
use crate::tree::{GameTree, DEFAULT_SIZE_CAP};
use rand::{Rng, SeedableRng};
use std::collections::HashMap;

fn tree(inst: &DragInstance) -> GameTree {
    GameTree::build(inst, DEFAULT_SIZE_CAP).unwrap()
}

/// Both routes leave the start through the same edge, so one observation is enough for
/// the attacker to learn the type before it has to commit.
fn fork() -> DragInstance {
    let g = Graph::deterministic(4, &[(0, 1), (1, 2), (1, 3), (2, 1), (3, 1)]).unwrap();
    DragInstance::new(g, vec![2, 3], vec![0.35, 0.65], 0, 3, 10.0, RewardMode::Standard).unwrap()
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

fn random_profile(t: &GameTree, inst: &DragInstance, seed: u64) -> (AttackerStrategy, DefenderStrategy) {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut dist = |n: usize| {
        let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
        let s: f64 = raw.iter().sum();
        raw.iter().map(|r| r / s).collect::<Vec<f64>>()
    };
    let a = AttackerStrategy::from_fn(t, inst, |h| dist(inst.action_space(t.state(h)).len()));
    let d = DefenderStrategy::from_fn(t, inst.num_types(), |_, _| dist(inst.num_types()));
    (a, d)
}

#[test]
fn zero_rewards_give_zero_value() {
    let g = Graph::deterministic(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
    let inst = DragInstance::new(g, vec![3], vec![1.0], 0, 2, 5.0, RewardMode::CustomTable(HashMap::new())).unwrap();
    let t = tree(&inst);
    let (a, d) = random_profile(&t, &inst, 1);
    assert_eq!(type_value(&t, &inst, 0, &a, &d, 0), 0.0);
}

#[test]
fn truthful_profile_on_a_single_edge() {
    let g = Graph::deterministic(2, &[(0, 1)]).unwrap();
    let inst = DragInstance::new(g, vec![1], vec![1.0], 0, 1, 25.0, RewardMode::Standard).unwrap();
    let t = tree(&inst);
    let a = AttackerStrategy::from_fn(&t, &inst, |_| vec![1.0]);
    let d = defender_baseline(Baseline::TruthfulDefender, &inst, &t).unwrap();
    assert_eq!(type_value(&t, &inst, 0, &a, &d, 0), -24.0);
}

#[test]
fn forward_and_backward_routes_agree() {
    for (i, inst) in [fork(), slip_grid()].into_iter().enumerate() {
        let t = tree(&inst);
        for seed in 0..5 {
            let (a, d) = random_profile(&t, &inst, seed + 10 * i as u64);
            let back = ex_ante_value(&t, &inst, 0, inst.prior(), &a, &d);
            let fwd = forward_value(&t, &inst, &a, &d, inst.prior());
            assert!((back - fwd).abs() <= 1e-9 * back.abs().max(1.0), "{back} vs {fwd}");
        }
    }
}

#[test]
fn ex_ante_value_is_linear_in_the_belief() {
    let inst = slip_grid();
    let t = tree(&inst);
    let (a, d) = random_profile(&t, &inst, 3);
    let v0 = type_value(&t, &inst, 0, &a, &d, 0);
    let v1 = type_value(&t, &inst, 0, &a, &d, 1);
    assert_eq!(ex_ante_value(&t, &inst, 0, &[1.0, 0.0], &a, &d), v0);
    let mid = ex_ante_value(&t, &inst, 0, &[0.25, 0.75], &a, &d);
    assert!((mid - (0.25 * v0 + 0.75 * v1)).abs() < 1e-12);
}

/// Cheapest outcome over every attacker walk, enumerated explicitly.
fn enumerate_walks(inst: &DragInstance, theta: usize, s: usize, t: usize) -> f64 {
    if inst.is_terminal_at(s, t) {
        return inst.terminal_payoff(s, theta);
    }
    inst.action_space(s)
        .iter()
        .map(|&e| inst.graph().edge(e).weight + enumerate_walks(inst, theta, inst.graph().edge(e).to, t + 1))
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn full_information_matches_walk_enumeration() {
    let cases = [
        make_grid_instance(3, 3, &[(1, 1)], &[(0, 2), (2, 2)], (0, 0), vec![0.3, 0.7], 5, 10.0).unwrap(),
        // Threat below the path length: the attacker prefers to run out the clock or
        // stop at the decoy.
        make_grid_instance(2, 2, &[], &[(0, 1), (1, 1)], (0, 0), vec![0.5, 0.5], 3, 0.5).unwrap(),
        make_grid_instance(2, 3, &[], &[(0, 2), (1, 0)], (0, 0), vec![0.5, 0.5], 4, 1.5).unwrap(),
        fork(),
    ];
    for inst in cases {
        let fi = full_information_value(&inst).unwrap();
        for theta in 0..inst.num_types() {
            assert_eq!(fi.per_type[theta], enumerate_walks(&inst, theta, inst.s0(), 0));
        }
    }
}

#[test]
fn full_information_rejects_custom_rewards() {
    let g = Graph::deterministic(2, &[(0, 1)]).unwrap();
    let inst = DragInstance::new(g, vec![1], vec![1.0], 0, 1, 5.0, RewardMode::CustomTable(HashMap::new())).unwrap();
    assert_eq!(full_information_value(&inst), Err(EvalError::UnsupportedRewards));
}

#[test]
fn value_of_deception_formula() {
    assert!((value_of_deception(-16.68, -20.6).unwrap() - 0.190291).abs() < 1e-6);
    assert_eq!(value_of_deception(-20.6, -20.6).unwrap(), 0.0);
    assert!(value_of_deception(-22.0, -20.6).unwrap() < 0.0);
    assert!(value_of_deception(1.0, 0.0).is_err());
    assert_eq!(mixture(&[0.2, 0.8], &[-19.0, -21.0]), 0.2 * -19.0 + 0.8 * -21.0);
}

#[test]
fn best_responses_sandwich_the_equilibrium() {
    for inst in [fork(), slip_grid()] {
        let sol = solve_pbne(&inst, &PbneOptions::default()).unwrap();
        let t = &sol.tree;
        let a = attacker_best_response(t, &inst, &sol.defender_plan);
        let d = defender_best_response(t, &inst, &sol.attacker_plan, inst.prior());
        let tol = 1e-6 * sol.game_value.abs().max(1.0);
        assert!(a.value <= sol.game_value + 1e-9 && sol.game_value - a.value <= tol);
        assert!(d.value >= sol.game_value - 1e-9 && d.value - sol.game_value <= tol);
        let ex = exploitability(t, &inst, &sol.attacker_plan, &sol.defender_plan, inst.prior());
        assert!(ex.absolute >= -1e-9 && ex.relative <= 1e-6);
        // The greedy responses are themselves worth what the oracles claim.
        let v = ex_ante_value(t, &inst, 0, inst.prior(), &a.strategy, &sol.defender);
        assert!((v - a.value).abs() <= 1e-9);
        let v = ex_ante_value(t, &inst, 0, inst.prior(), &sol.attacker, &d.strategy);
        assert!((v - d.value).abs() <= 1e-9);
    }
}

#[test]
fn truthful_defender_concedes_the_full_information_value() {
    let inst = fork();
    let t = tree(&inst);
    let tc = defender_baseline(Baseline::TruthfulDefender, &inst, &t).unwrap();
    let br = attacker_best_response(&t, &inst, &DefenderPlan::from_strategy(&t, &tc, inst.prior()));
    let fi = full_information_value(&inst).unwrap();
    assert!((br.value - fi.mixture).abs() < 1e-12);
    let sol = solve_pbne(&inst, &PbneOptions::default()).unwrap();
    assert!(br.value < sol.game_value - 1e-6);
}

#[test]
fn best_response_dominates_fixed_strategies() {
    let inst = slip_grid();
    let t = tree(&inst);
    let c0 = defender_baseline(Baseline::ConstantDefender(0), &inst, &t).unwrap();
    let br = attacker_best_response(&t, &inst, &DefenderPlan::from_strategy(&t, &c0, inst.prior()));
    for name in ATTACKER_BASELINES {
        let a = attacker_baseline(name.parse().unwrap(), &inst, &t).unwrap();
        assert!(br.value <= ex_ante_value(&t, &inst, 0, inst.prior(), &a, &c0) + 1e-12);
    }
    let rs = attacker_baseline(Baseline::RandomAttacker, &inst, &t).unwrap();
    let dbr = defender_best_response(&t, &inst, &AttackerPlan::from_strategy(&t, &inst, &rs), inst.prior());
    for seed in 0..5 {
        let (_, d) = random_profile(&t, &inst, seed);
        assert!(dbr.value >= ex_ante_value(&t, &inst, 0, inst.prior(), &rs, &d) - 1e-12);
    }
}

#[test]
fn single_type_equilibrium_is_unexploitable() {
    let inst = make_grid_instance(3, 3, &[(1, 1)], &[(2, 2)], (0, 0), vec![1.0], 5, 10.0).unwrap();
    let sol = solve_pbne(&inst, &PbneOptions::default()).unwrap();
    let ex = exploitability(&sol.tree, &inst, &sol.attacker_plan, &sol.defender_plan, inst.prior());
    assert!(ex.absolute.abs() <= 1e-9);
    let fi = full_information_value(&inst).unwrap();
    assert!((fi.mixture - sol.game_value).abs() <= 1e-9);
}

#[test]
fn baseline_definitions() {
    let inst = make_grid_instance(3, 3, &[], &[(0, 0), (0, 2)], (1, 1), vec![0.2, 0.8], 3, 10.0).unwrap();
    let t = tree(&inst);
    let rs = attacker_baseline(Baseline::RandomAttacker, &inst, &t).unwrap();
    assert_eq!(rs.policy(0), &[0.25; 4]);
    let h = t.decode(&inst, "4|4-1>0|1").unwrap();
    assert_eq!(rs.policy(h), &[1.0 / 3.0; 3]);
    let tc = defender_baseline(Baseline::TruthfulDefender, &inst, &t).unwrap();
    assert_eq!(tc.policy(h, 1), &[0.0, 1.0]);
    // Highest prior is asset index 1 at (0, 2): the first step goes up, then right.
    let hp = attacker_baseline(Baseline::HighPriorPath, &inst, &t).unwrap();
    let layout = inst.layout().unwrap();
    let step = |h: usize, s: &AttackerStrategy| {
        let j = s.policy(h).iter().position(|&p| p == 1.0).unwrap();
        layout.cells[inst.graph().edge(inst.action_space(t.state(h))[j]).to]
    };
    assert_eq!(step(0, &hp), (0, 1));
    assert_eq!(step(h, &hp), (0, 2));
    let lp = attacker_baseline(Baseline::LowPriorPath, &inst, &t).unwrap();
    assert_eq!(step(h, &lp), (0, 0));
    assert_eq!("C1-D".parse::<Baseline>().unwrap(), Baseline::ConstantDefender(1));
    assert!("XX-A".parse::<Baseline>().is_err());
    assert!(defender_baseline(Baseline::ConstantDefender(2), &inst, &t).is_err());
    assert!(attacker_baseline(Baseline::TruthfulDefender, &inst, &t).is_err());
    let to = defender_baseline(Baseline::DecoyDefender, &inst, &t).unwrap();
    assert_eq!(to.policy(0, 0), &[0.0, 1.0]);
}

#[test]
fn equal_priors_target_the_lowest_index() {
    let inst = make_grid_instance(1, 3, &[], &[(0, 0), (0, 2)], (0, 1), vec![0.5, 0.5], 2, 4.0).unwrap();
    let t = tree(&inst);
    let hp = attacker_baseline(Baseline::HighPriorPath, &inst, &t).unwrap();
    let lp = attacker_baseline(Baseline::LowPriorPath, &inst, &t).unwrap();
    assert_eq!(hp.policy(0), lp.policy(0));
    let to0 = inst.graph().edge(inst.action_space(inst.s0())[hp.policy(0).iter().position(|&p| p == 1.0).unwrap()]).to;
    assert_eq!(to0, inst.assets()[0]);
}

#[test]
fn pure_profiles_roll_out_exactly() {
    let g = Graph::deterministic(3, &[(0, 1), (1, 2)]).unwrap();
    let inst = DragInstance::new(g, vec![2], vec![1.0], 0, 2, 25.0, RewardMode::Standard).unwrap();
    let t = tree(&inst);
    let a = AttackerStrategy::from_fn(&t, &inst, |_| vec![1.0]);
    let d = defender_baseline(Baseline::TruthfulDefender, &inst, &t).unwrap();
    let (stats, _) = rollout(&t, &inst, &a, &d, &RolloutOptions { episodes: 1, seed: 3, keep_log: false });
    assert_eq!((stats.mean, stats.stderr), (-23.0, 0.0));
    let (stats, _) = rollout(&t, &inst, &a, &d, &RolloutOptions { episodes: 50, seed: 3, keep_log: false });
    assert_eq!((stats.mean, stats.stderr), (-23.0, 0.0));
}

#[test]
fn rollouts_are_reproducible_and_consistent() {
    let inst = slip_grid();
    let sol = solve_pbne(&inst, &PbneOptions::default()).unwrap();
    let opts = RolloutOptions { episodes: 20_000, seed: 42, keep_log: true };
    let (s1, l1) = rollout(&sol.tree, &inst, &sol.attacker, &sol.defender, &opts);
    let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let (s2, l2) = single.install(|| rollout(&sol.tree, &inst, &sol.attacker, &sol.defender, &opts));
    assert_eq!(s1, s2);
    assert_eq!(l1, l2);
    let exact = ex_ante_value(&sol.tree, &inst, 0, inst.prior(), &sol.attacker, &sol.defender);
    assert!((s1.mean - exact).abs() <= 3.0 * s1.stderr, "{} vs {exact} (se {})", s1.mean, s1.stderr);
    let log = l1.unwrap();
    assert_eq!(log.len(), 20_000);
    let mut buf = Vec::new();
    write_log(&log[..3], &mut buf).unwrap();
    let first: EpisodeRecord = serde_json::from_str(String::from_utf8(buf).unwrap().lines().next().unwrap()).unwrap();
    assert_eq!(first, log[0]);
}

#[test]
fn trajectories_render_on_grids_only() {
    let inst = slip_grid();
    let rec = EpisodeRecord { episode: 0, theta: 1, history: "3".into(), reward: 0.0 };
    assert!(trajectory_svg(&inst, &rec).is_none());
    let grid = make_grid_instance(2, 2, &[], &[(0, 1)], (1, 0), vec![1.0], 2, 5.0).unwrap();
    let t = tree(&grid);
    let h = t.stage(1).next().unwrap();
    let rec = EpisodeRecord { episode: 4, theta: 0, history: t.encode(&grid, h), reward: 1.0 };
    let svg = trajectory_svg(&grid, &rec).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("polyline") && svg.trim_end().ends_with("</svg>"));
}

#[test]
fn deviation_table_directions_hold() {
    let inst = fork();
    let sol = solve_pbne(&inst, &PbneOptions::default()).unwrap();
    let rows = deviation_table(&sol.tree, &inst, (&sol).into());
    assert!(rows.iter().all(|r| r.holds), "{rows:#?}");
    assert_eq!(rows[0].relation, "=");
    assert_eq!(rows.len(), 1 + 2 * 3 + 2 * 5);
}
