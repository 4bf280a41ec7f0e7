use serde::{Deserialize, Serialize};

use crate::model::DragInstance;
use crate::pbne::{AttackerPlan, AttackerStrategy, DefenderPlan, DefenderStrategy, EquilibriumSolution};

use crate::tree::GameTree;

use super::baselines::{attacker_baseline, defender_baseline, Baseline, ATTACKER_BASELINES, DEFENDER_BASELINES};
use super::rollout::{rollout, RolloutOptions, RolloutStats};
use super::{
    attacker_best_response, defender_best_response, ex_ante_value, full_information_value, type_value,
    value_of_deception,
};

/// Slack allowed when classifying a deviation against the game value.
pub const DEVIATION_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FullInformation {
    pub per_type: Vec<f64>,
    pub mixture: f64,
}

/// Gains available to each side against a fixed profile. `relative` divides by
/// `max(1, |defender_br|, |attacker_br|)`, which at an equilibrium is `max(1, |value|)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exploitability {
    pub defender_br: f64,
    pub attacker_br: f64,
    pub absolute: f64,
    pub relative: f64,
}

impl Exploitability {
    pub fn new(defender_br: f64, attacker_br: f64) -> Self {
        let absolute = defender_br - attacker_br;
        let scale = 1f64.max(defender_br.abs()).max(attacker_br.abs());
        Exploitability { defender_br, attacker_br, absolute, relative: absolute / scale }
    }
}

/// One row of a deviation table: a profile, its value, and how it compares with the game
/// value. `expected` is the inequality equilibrium play requires, if any.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationRow {
    pub defender: String,
    pub attacker: String,
    pub value: f64,
    pub relation: String,
    pub expected: Option<String>,
    pub holds: bool,
}

fn relation(value: f64, game_value: f64) -> &'static str {
    let slack = DEVIATION_SLACK * game_value.abs().max(1.0);
    if (value - game_value).abs() <= slack {
        "="
    } else if value > game_value {
        ">"
    } else {
        "<"
    }
}

fn row(defender: &str, attacker: &str, value: f64, game_value: f64, expected: Option<&str>) -> DeviationRow {
    let slack = DEVIATION_SLACK * game_value.abs().max(1.0);
    let holds = match expected {
        Some(">=") => value >= game_value - slack,
        Some("<=") => value <= game_value + slack,
        _ => true,
    };
    DeviationRow {
        defender: defender.into(),
        attacker: attacker.into(),
        value,
        relation: relation(value, game_value).into(),
        expected: expected.map(Into::into),
        holds,
    }
}

/// An equilibrium profile and its value, however obtained.
#[derive(Debug, Clone, Copy)]
pub struct EquilibriumRef<'a> {
    pub game_value: f64,
    pub attacker: &'a AttackerStrategy,
    pub defender: &'a DefenderStrategy,
}

impl<'a> From<&'a EquilibriumSolution> for EquilibriumRef<'a> {
    fn from(s: &'a EquilibriumSolution) -> Self {
        EquilibriumRef { game_value: s.game_value, attacker: &s.attacker, defender: &s.defender }
    }
}

/// Unilateral deviations from the equilibrium by every baseline, plus the best response
/// to each baseline. Attacker deviations must not lower the value; defender deviations
/// must not raise it.
pub fn deviation_table(tree: &GameTree, inst: &DragInstance, sol: EquilibriumRef) -> Vec<DeviationRow> {
    let v = sol.game_value;
    let prior = inst.prior();
    let mut rows = vec![row("LP-D", "LP-A", ex_ante_value(tree, inst, 0, prior, sol.attacker, sol.defender), v, None)];
    for name in ATTACKER_BASELINES {
        let b: Baseline = name.parse().expect("known baseline");
        let s = attacker_baseline(b, inst, tree).expect("attacker baseline");
        rows.push(row("LP-D", name, ex_ante_value(tree, inst, 0, prior, &s, sol.defender), v, Some(">=")));
        let plan = AttackerPlan::from_strategy(tree, inst, &s);
        rows.push(row("BR-D", name, defender_best_response(tree, inst, &plan, prior).value, v, Some(">=")));
    }
    let constants = (0..inst.num_types()).map(|k| format!("C{k}-D"));
    for name in DEFENDER_BASELINES.iter().map(|s| s.to_string()).chain(constants) {
        let b: Baseline = name.parse().expect("known baseline");
        let s = defender_baseline(b, inst, tree).expect("defender baseline");
        rows.push(row(&name, "LP-A", ex_ante_value(tree, inst, 0, prior, sol.attacker, &s), v, Some("<=")));
        let plan = DefenderPlan::from_strategy(tree, &s, prior);
        rows.push(row(&name, "BR-A", attacker_best_response(tree, inst, &plan).value, v, Some("<=")));
    }
    rows
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub defender: String,
    pub attacker: String,
    pub ex_ante_value: f64,
    pub type_values: Vec<f64>,
    pub game_value: Option<f64>,
    /// Relation of the profile value to the game value.
    pub relation: Option<String>,
    pub full_information: Option<FullInformation>,
    pub value_of_deception: Option<f64>,
    pub exploitability: Exploitability,
    pub deviation_table: Vec<DeviationRow>,
    pub rollout: Option<RolloutStats>,
}

/// Everything known about one profile. With an equilibrium at hand the report also
/// carries the game value, the value of deception, and the deviation table.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_profile(
    tree: &GameTree,
    inst: &DragInstance,
    names: (&str, &str),
    attacker: &AttackerStrategy,
    defender: &DefenderStrategy,
    equilibrium: Option<EquilibriumRef>,
    rollout_opts: Option<&RolloutOptions>,
) -> EvaluationReport {
    let prior = inst.prior();
    let type_values: Vec<f64> =
        (0..inst.num_types()).map(|t| type_value(tree, inst, 0, attacker, defender, t)).collect();
    let ex_ante = ex_ante_value(tree, inst, 0, prior, attacker, defender);
    let aplan = AttackerPlan::from_strategy(tree, inst, attacker);
    let dplan = DefenderPlan::from_strategy(tree, defender, prior);
    let exploitability = Exploitability::new(
        defender_best_response(tree, inst, &aplan, prior).value,
        attacker_best_response(tree, inst, &dplan).value,
    );
    let full_information = full_information_value(inst).ok();
    let game_value = equilibrium.map(|s| s.game_value);
    let value_of_deception = match (&full_information, game_value) {
        (Some(fi), Some(v)) => value_of_deception(v, fi.mixture).ok(),
        _ => None,
    };
    EvaluationReport {
        defender: names.0.into(),
        attacker: names.1.into(),
        ex_ante_value: ex_ante,
        type_values,
        game_value,
        relation: game_value.map(|v| relation(ex_ante, v).into()),
        full_information,
        value_of_deception,
        exploitability,
        deviation_table: equilibrium.map(|s| deviation_table(tree, inst, s)).unwrap_or_default(),
        rollout: rollout_opts.map(|o| rollout(tree, inst, attacker, defender, &RolloutOptions { keep_log: false, ..*o }).0),
    }
}
