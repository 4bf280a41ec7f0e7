use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::model::DragInstance;
use crate::pbne::{AttackerStrategy, DefenderStrategy};
use crate::tree::GameTree;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RolloutOptions {
    pub episodes: usize,
    pub seed: u64,
    pub keep_log: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RolloutStats {
    pub episodes: usize,
    pub seed: u64,
    pub mean: f64,
    pub stderr: f64,
}

/// One simulated play: the sampled type, the history reached, and the defender's total.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub episode: usize,
    #[serde(rename = "type")]
    pub theta: usize,
    pub history: String,
    pub reward: f64,
}

fn sample(rng: &mut ChaCha8Rng, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.gen::<f64>() * total;
    let mut last = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        last = i;
        if u < w {
            return i;
        }
        u -= w;
    }
    last
}

/// Plays one episode. Each policy is consulted with the history id only: the attacker's
/// table has no type argument, and neither side sees the accumulated reward.
fn play(
    tree: &GameTree,
    inst: &DragInstance,
    attacker: &AttackerStrategy,
    defender: &DefenderStrategy,
    rng: &mut ChaCha8Rng,
) -> (usize, usize, f64) {
    let theta = sample(rng, inst.prior());
    let mut h = 0;
    let mut reward = 0.0;
    while !tree.is_leaf(h) {
        let j = sample(rng, attacker.policy(h));
        let v = sample(rng, defender.policy(h, theta));
        let e = inst.action_space(tree.state(h))[j];
        reward += inst.stage_reward(e, theta, v);
        let outs = tree.outcome_children(inst, h, j, v);
        let probs: Vec<f64> = outs.clone().map(|c| tree.node(c).prob).collect();
        h = outs.start + sample(rng, &probs);
    }
    reward += inst.terminal_payoff(tree.state(h), theta);
    (theta, h, reward)
}

/// Seeded Monte-Carlo estimate of the ex-ante value. Episode `i` draws from its own
/// ChaCha stream `i` under `seed`, so results do not depend on the thread count.
pub fn rollout(
    tree: &GameTree,
    inst: &DragInstance,
    attacker: &AttackerStrategy,
    defender: &DefenderStrategy,
    opts: &RolloutOptions,
) -> (RolloutStats, Option<Vec<EpisodeRecord>>) {
    let n = opts.episodes.max(1);
    let runs: Vec<(usize, usize, f64)> = (0..n)
        .into_par_iter()
        .map(|ep| {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            rng.set_stream(ep as u64);
            play(tree, inst, attacker, defender, &mut rng)
        })
        .collect();
    let mean = runs.iter().map(|r| r.2).sum::<f64>() / n as f64;
    let stderr = if n > 1 {
        let var = runs.iter().map(|r| (r.2 - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    } else {
        0.0
    };
    let log = opts.keep_log.then(|| {
        runs.iter()
            .enumerate()
            .map(|(episode, &(theta, h, reward))| EpisodeRecord {
                episode,
                theta,
                history: tree.encode(inst, h),
                reward,
            })
            .collect()
    });
    (RolloutStats { episodes: n, seed: opts.seed, mean, stderr }, log)
}

pub fn write_log(records: &[EpisodeRecord], out: &mut impl Write) -> std::io::Result<()> {
    for r in records {
        writeln!(out, "{}", serde_json::to_string(r).expect("record serializes"))?;
    }
    Ok(())
}
