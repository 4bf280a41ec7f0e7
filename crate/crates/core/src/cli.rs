//! Command-line front end: `solve`, `validate`, `evaluate` and `rollout`.
//!
//! Numbers on stdout carry six decimals; files keep full precision. Failures print one
//! JSON object on stderr and map to exit codes 1 (bad input or failed validation),
//! 2 (solver failure) and 3 (size cap).

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::evaluation::{
    attacker_baseline, defender_baseline, evaluate_profile, ex_ante_value, exploitability, rollout, trajectory_svg,
    write_log, Baseline, EquilibriumRef, EvaluationReport, RolloutOptions,
};
use crate::lp::{export_lp, LpFormat, SolverOptions};
use crate::model::{load_instance, DragInstance, ModelError};
use crate::pbne::{
    build_attacker_lp, build_defender_lp, read_solution, solution_json, solve_pbne, AttackerPlan, AttackerStrategy,
    BeliefMap, DefenderPlan, DefenderStrategy, PbneError, PbneOptions, SolutionDoc,
};
use crate::tree::{GameTree, TreeError, DEFAULT_SIZE_CAP};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_SOLVER: i32 = 2;
pub const EXIT_SIZE_CAP: i32 = 3;

/// Most trajectory plots written by one `rollout --svg` run.
const MAX_PLOTS: usize = 20;

#[derive(Debug, Parser)]
#[command(name = "drag", version, about = "Equilibria of deceptive resource allocation games")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve both programs and write the equilibrium.
    Solve(SolveArgs),
    /// Check a stored solution against its instance.
    Validate(ValidateArgs),
    /// Evaluate a strategy profile: values, best responses, deviations, benchmark.
    Evaluate(EvaluateArgs),
    /// Monte-Carlo play of a strategy profile.
    Rollout(RolloutArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long, default_value_t = 1e-9, value_parser = positive)]
    pub feas_tol: f64,
    /// Accepted gap between the two program values, relative to max(1, |value|).
    #[arg(long, default_value_t = 1e-6, value_parser = positive)]
    pub gap_tol: f64,
    #[arg(long, default_value_t = DEFAULT_SIZE_CAP)]
    pub size_cap: usize,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Include both realization plans in the solution file.
    #[arg(long)]
    pub full_plan: bool,
    /// Also check that neither side can gain by deviating.
    #[arg(long)]
    pub validate: bool,
    /// Write both programs in this format (mps or lp).
    #[arg(long, requires = "lp_dir")]
    pub export_lp: Option<LpFormat>,
    #[arg(long)]
    pub lp_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub solution: PathBuf,
    /// Largest accepted exploitability, relative to max(1, |value|).
    #[arg(long, default_value_t = 1e-6, value_parser = positive)]
    pub tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ProfileArgs {
    /// `LP` for the equilibrium, a baseline name, or a solution file.
    #[arg(long, default_value = "LP")]
    pub defender: String,
    /// `LP` for the equilibrium, a baseline name, or a solution file.
    #[arg(long, default_value = "LP")]
    pub attacker: String,
    /// Equilibrium to use for `LP` instead of solving.
    #[arg(long)]
    pub solution: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub profile: ProfileArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also estimate the value by this many rollouts.
    #[arg(long)]
    pub episodes: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct RolloutArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub profile: ProfileArgs,
    #[arg(long, default_value_t = 10_000, value_parser = at_least_one)]
    pub episodes: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Statistics as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// One JSON line per episode.
    #[arg(long)]
    pub log: Option<PathBuf>,
    /// Directory for per-episode trajectory plots (grid instances only).
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

fn positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("{s:?} is not a positive number")),
    }
}

fn at_least_one(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(v) if v >= 1 => Ok(v),
        _ => Err(format!("{s:?} is not a positive integer")),
    }
}

/// A failure with its exit code and a stable machine-readable code.
#[derive(Debug)]
pub struct CliError {
    pub exit: i32,
    pub code: String,
    pub message: String,
}

impl CliError {
    fn input(code: &str, message: impl Into<String>) -> Self {
        CliError { exit: EXIT_INPUT, code: code.into(), message: message.into() }
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({ "error": { "code": self.code, "message": self.message, "exit_code": self.exit } }).to_string()
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::input(e.code(), e.to_string())
    }
}

impl From<TreeError> for CliError {
    fn from(e: TreeError) -> Self {
        match e {
            TreeError::SizeCap { .. } => CliError { exit: EXIT_SIZE_CAP, code: "size_cap".into(), message: e.to_string() },
            other => CliError::input("invalid_history", other.to_string()),
        }
    }
}

impl From<PbneError> for CliError {
    fn from(e: PbneError) -> Self {
        match e {
            PbneError::Tree(t) => t.into(),
            PbneError::Shape(m) => CliError::input("invalid_solution", m),
            PbneError::Validation { .. } => CliError { exit: EXIT_SOLVER, code: "validation".into(), message: e.to_string() },
            other => CliError { exit: EXIT_SOLVER, code: "solver".into(), message: other.to_string() },
        }
    }
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::input("io", format!("{}: {e}", path.display()))
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| io_error(path, e))
}

fn pbne_options(c: &Common) -> PbneOptions {
    PbneOptions {
        solver: SolverOptions { feas_tol: c.feas_tol, ..Default::default() },
        size_cap: c.size_cap,
        gap_accept: c.gap_tol,
        ..Default::default()
    }
}

/// Parses arguments, runs the command, and returns the exit code. Output goes to the
/// given writers so the whole front end can be driven in-process.
pub fn run(args: &[String], out: &mut dyn std::io::Write, err: &mut dyn std::io::Write) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = if code == EXIT_OK { write!(out, "{e}") } else { write!(err, "{e}") };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Solve(a) => cmd_solve(a, out),
        Command::Validate(a) => cmd_validate(a, out),
        Command::Evaluate(a) => cmd_evaluate(a, out),
        Command::Rollout(a) => cmd_rollout(a, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "{}", e.to_json());
            e.exit
        }
    }
}

macro_rules! say {
    ($out:expr, $($arg:tt)*) => {
        let _ = writeln!($out, $($arg)*);
    };
}

pub fn cmd_solve(a: &SolveArgs, out: &mut dyn std::io::Write) -> Result<i32, CliError> {
    let start = Instant::now();
    let inst = load_instance(&a.common.instance)?;
    let opts = PbneOptions { validate: a.validate, ..pbne_options(&a.common) };
    let sol = solve_pbne(&inst, &opts)?;
    if let Some(path) = &a.out {
        write_file(path, &solution_json(&SolutionDoc::from_solution(&inst, &sol, a.full_plan)))?;
    }
    if let Some(format) = a.export_lp {
        let dir = a.lp_dir.as_ref().expect("clap enforces --lp-dir");
        for (name, lp) in [("defender", build_defender_lp(&sol.tree, &inst)), ("attacker", build_attacker_lp(&sol.tree, &inst))] {
            let text = export_lp(&lp, format).map_err(|e| CliError::input("export", e.to_string()))?;
            write_file(&dir.join(format!("{name}.{}", format.extension())), &text)?;
        }
    }
    say!(out, "game_value {:.6}", sol.game_value);
    say!(out, "attacker_value {:.6}", sol.attacker_value);
    say!(out, "duality_gap {:.6}", sol.duality_gap);
    say!(out, "histories {}", sol.tree.len());
    say!(out, "iterations {} {}", sol.defender_stats.iterations, sol.attacker_stats.iterations);
    say!(out, "wall_time_s {:.6}", start.elapsed().as_secs_f64());
    Ok(EXIT_OK)
}

#[derive(Debug, Serialize)]
struct Check {
    name: &'static str,
    pass: bool,
    value: f64,
    limit: f64,
    detail: String,
}

#[derive(Debug, Serialize)]
struct ValidationReport {
    pass: bool,
    checks: Vec<Check>,
}

/// Largest deviation between stored beliefs and beliefs recomputed from the stored
/// defender strategy, and between those and plan ratios, over reachable histories.
fn belief_error(
    tree: &GameTree,
    inst: &DragInstance,
    doc: &SolutionDoc,
    defender: &DefenderStrategy,
    plan: &DefenderPlan,
) -> (f64, String) {
    let map = BeliefMap::compute(tree, defender, inst.prior());
    let k = inst.num_types();
    let mut worst = (0.0f64, String::new());
    for h in 0..tree.len() {
        let masses: Vec<f64> = (0..k).map(|t| plan.mass(h, t)).collect();
        let total: f64 = masses.iter().sum();
        if total <= 1e-9 {
            continue;
        }
        let key = tree.encode(inst, h);
        let stored = doc.beliefs.get(&key).map(|b| b.belief.as_slice());
        for t in 0..k {
            let mut e = (map.belief(h)[t] - masses[t] / total).abs();
            match stored {
                Some(s) if s.len() == k => e = e.max((s[t] - map.belief(h)[t]).abs()),
                _ => e = f64::INFINITY,
            }
            if e > worst.0 {
                worst = (e, key.clone());
            }
        }
    }
    worst
}

pub fn cmd_validate(a: &ValidateArgs, out: &mut dyn std::io::Write) -> Result<i32, CliError> {
    let inst = load_instance(&a.common.instance)?;
    let text = fs::read_to_string(&a.solution).map_err(|e| io_error(&a.solution, e))?;
    let doc = read_solution(&text)?;
    let tree = GameTree::build(&inst, a.common.size_cap)?;
    let defender = doc.defender_strategy(&tree, &inst)?;
    let attacker = doc.attacker_strategy(&tree, &inst)?;
    let played_d = DefenderPlan::from_strategy(&tree, &defender, inst.prior());
    let played_a = AttackerPlan::from_strategy(&tree, &inst, &attacker);
    let scale = doc.game_value.abs().max(1.0);
    let mut checks = Vec::new();

    let (dplan, aplan) = (doc.defender_plan(&tree, &inst)?, doc.attacker_plan(&tree, &inst)?);
    let (res, h, detail) = match (&dplan, &aplan) {
        (Some(d), Some(p)) => {
            let (rd, hd) = d.flow_residual(&tree, inst.prior());
            let (ra, ha) = p.flow_residual(&tree, &inst);
            if rd >= ra { (rd, hd, "defender plan") } else { (ra, ha, "attacker plan") }
        }
        _ => (0.0, 0, "no plans stored; strategies define consistent plans"),
    };
    checks.push(Check {
        name: "flow_conservation",
        pass: res <= 1e-8,
        value: res,
        limit: 1e-8,
        detail: if res > 1e-8 { format!("{detail} at {}", tree.encode(&inst, h)) } else { detail.into() },
    });

    let (be, at) = belief_error(&tree, &inst, &doc, &defender, dplan.as_ref().unwrap_or(&played_d));
    checks.push(Check { name: "belief_consistency", pass: be <= 1e-8, value: be, limit: 1e-8, detail: at });

    let gap = (doc.game_value - doc.attacker_value).abs();
    checks.push(Check {
        name: "duality_gap",
        pass: gap <= a.common.gap_tol * scale,
        value: gap,
        limit: a.common.gap_tol * scale,
        detail: String::new(),
    });

    let v = ex_ante_value(&tree, &inst, 0, inst.prior(), &attacker, &defender);
    let dv = (v - doc.game_value).abs();
    checks.push(Check {
        name: "profile_value",
        pass: dv <= a.common.gap_tol * scale,
        value: dv,
        limit: a.common.gap_tol * scale,
        detail: format!("profile value {v:.6}"),
    });

    let ex = exploitability(&tree, &inst, &played_a, &played_d, inst.prior());
    checks.push(Check {
        name: "exploitability",
        pass: ex.relative <= a.tol,
        value: ex.relative,
        limit: a.tol,
        detail: format!("defender best response {:.6}, attacker best response {:.6}", ex.defender_br, ex.attacker_br),
    });

    let pass = checks.iter().all(|c| c.pass);
    for c in &checks {
        say!(out, "{} {} value {:.6e} limit {:.6e} {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.value, c.limit, c.detail);
    }
    say!(out, "{}", if pass { "valid" } else { "invalid" });
    if let Some(path) = &a.out {
        write_file(path, &(serde_json::to_string_pretty(&ValidationReport { pass, checks }).expect("report") + "\n"))?;
    }
    Ok(if pass { EXIT_OK } else { EXIT_INPUT })
}

struct Profile {
    tree: GameTree,
    attacker: AttackerStrategy,
    defender: DefenderStrategy,
    /// Equilibrium value and strategies, when one was solved or loaded.
    equilibrium: Option<(f64, AttackerStrategy, DefenderStrategy)>,
}

fn load_doc(path: &Path) -> Result<SolutionDoc, CliError> {
    let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    Ok(read_solution(&text)?)
}

/// Resolves the two strategy sources. The equilibrium is loaded from `--solution` or
/// solved; it is always available so deviations can be classified.
fn resolve_profile(inst: &DragInstance, c: &Common, p: &ProfileArgs) -> Result<Profile, CliError> {
    let known = |name: &str| name == "LP" || name.parse::<Baseline>().is_ok() || Path::new(name).is_file();
    for name in [&p.defender, &p.attacker] {
        if !known(name) {
            return Err(CliError::input("unknown_strategy", format!("{name:?} is neither a baseline nor a file")));
        }
    }
    let (tree, eq) = match &p.solution {
        Some(path) => {
            let tree = GameTree::build(inst, c.size_cap)?;
            let doc = load_doc(path)?;
            let eq = (doc.game_value, doc.attacker_strategy(&tree, inst)?, doc.defender_strategy(&tree, inst)?);
            (tree, eq)
        }
        None => {
            let sol = solve_pbne(inst, &pbne_options(c))?;
            (sol.tree, (sol.game_value, sol.attacker, sol.defender))
        }
    };
    let attacker = match p.attacker.as_str() {
        "LP" => eq.1.clone(),
        name => match name.parse::<Baseline>() {
            Ok(b) => attacker_baseline(b, inst, &tree).map_err(|e| CliError::input("unknown_strategy", e.to_string()))?,
            Err(_) => load_doc(Path::new(name))?.attacker_strategy(&tree, inst)?,
        },
    };
    let defender = match p.defender.as_str() {
        "LP" => eq.2.clone(),
        name => match name.parse::<Baseline>() {
            Ok(b) => defender_baseline(b, inst, &tree).map_err(|e| CliError::input("unknown_strategy", e.to_string()))?,
            Err(_) => load_doc(Path::new(name))?.defender_strategy(&tree, inst)?,
        },
    };
    Ok(Profile { tree, attacker, defender, equilibrium: Some(eq) })
}

/// Rounding noise below the printed precision shows as `0.000000`, never `-0.000000`.
fn clean(x: f64) -> f64 {
    if x.abs() < 5e-7 { 0.0 } else { x }
}

fn print_report(out: &mut dyn std::io::Write, r: &EvaluationReport) {
    say!(out, "profile {} vs {}", r.defender, r.attacker);
    match (r.game_value, &r.relation) {
        (Some(v), Some(rel)) => {
            say!(out, "value {:.6} {} game value {:.6}", r.ex_ante_value, rel, v);
        }
        _ => {
            say!(out, "value {:.6}", r.ex_ante_value);
        }
    }
    for (t, v) in r.type_values.iter().enumerate() {
        say!(out, "type_value {t} {v:.6}");
    }
    say!(
        out,
        "exploitability {:.6} (defender best response {:.6}, attacker best response {:.6})",
        clean(r.exploitability.absolute),
        r.exploitability.defender_br,
        r.exploitability.attacker_br
    );
    if let Some(fi) = &r.full_information {
        let per: Vec<String> = fi.per_type.iter().map(|v| format!("{v:.6}")).collect();
        say!(out, "full_information {} mixture {:.6}", per.join(" "), fi.mixture);
    }
    if let Some(v) = r.value_of_deception {
        say!(out, "value_of_deception {v:.6}");
    }
    if let Some(s) = &r.rollout {
        say!(out, "rollout mean {:.6} stderr {:.6} episodes {}", s.mean, s.stderr, s.episodes);
    }
    if !r.deviation_table.is_empty() {
        say!(out, "deviations");
        for row in &r.deviation_table {
            say!(
                out,
                "  {:<6} {:<7} {:>12.6} {} V*{}",
                row.defender,
                row.attacker,
                row.value,
                row.relation,
                match &row.expected {
                    Some(e) if row.holds => format!(" (expected {e}: ok)"),
                    Some(e) => format!(" (expected {e}: VIOLATED)"),
                    None => String::new(),
                }
            );
        }
    }
}

pub fn cmd_evaluate(a: &EvaluateArgs, out: &mut dyn std::io::Write) -> Result<i32, CliError> {
    let inst = load_instance(&a.common.instance)?;
    let p = resolve_profile(&inst, &a.common, &a.profile)?;
    let ro = a.episodes.map(|episodes| RolloutOptions { episodes: episodes.max(1), seed: a.seed, keep_log: false });
    let eq = p.equilibrium.as_ref().map(|(v, s, t)| EquilibriumRef { game_value: *v, attacker: s, defender: t });
    let report = evaluate_profile(
        &p.tree,
        &inst,
        (&a.profile.defender, &a.profile.attacker),
        &p.attacker,
        &p.defender,
        eq,
        ro.as_ref(),
    );
    print_report(out, &report);
    if let Some(path) = &a.out {
        write_file(path, &(serde_json::to_string_pretty(&report).expect("report") + "\n"))?;
    }
    Ok(EXIT_OK)
}

pub fn cmd_rollout(a: &RolloutArgs, out: &mut dyn std::io::Write) -> Result<i32, CliError> {
    let inst = load_instance(&a.common.instance)?;
    let p = resolve_profile(&inst, &a.common, &a.profile)?;
    let opts = RolloutOptions { episodes: a.episodes, seed: a.seed, keep_log: a.log.is_some() || a.svg.is_some() };
    let (stats, log) = rollout(&p.tree, &inst, &p.attacker, &p.defender, &opts);
    let exact = ex_ante_value(&p.tree, &inst, 0, inst.prior(), &p.attacker, &p.defender);
    say!(out, "episodes {}", stats.episodes);
    say!(out, "seed {}", stats.seed);
    say!(out, "mean {:.6}", stats.mean);
    say!(out, "stderr {:.6}", stats.stderr);
    say!(out, "exact {:.6}", exact);
    if let Some(path) = &a.out {
        write_file(path, &(serde_json::to_string_pretty(&stats).expect("stats") + "\n"))?;
    }
    let log = log.unwrap_or_default();
    if let Some(path) = &a.log {
        let mut buf = Vec::new();
        write_log(&log, &mut buf).map_err(|e| io_error(path, e))?;
        write_file(path, &String::from_utf8(buf).expect("utf-8 log"))?;
    }
    if let Some(dir) = &a.svg {
        if inst.layout().is_none() {
            return Err(CliError::input("no_layout", "trajectory plots need a grid instance"));
        }
        for rec in log.iter().take(MAX_PLOTS) {
            if let Some(svg) = trajectory_svg(&inst, rec) {
                write_file(&dir.join(format!("episode_{:05}.svg", rec.episode)), &svg)?;
            }
        }
    }
    Ok(EXIT_OK)
}

/// Applies `DRAG_THREADS` to the global worker pool. Call once, before any parallel work.
pub fn configure_threads() {
    if let Some(n) = std::env::var("DRAG_THREADS").ok().and_then(|v| v.parse::<usize>().ok()).filter(|&n| n > 0) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}
