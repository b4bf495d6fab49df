//! Command-line interface: run/bench/formation batch execution, the
//! standalone assignment solver, and trace validation.

use crate::assignment::{self, BruteObjective, CostMatrix};
use crate::error::{Error, Result};
use crate::runner::{self, BatchSummary, PolicySelection};
use crate::scenario::{AssignMode, ScenarioConfig, Variant};
use crate::trace;
use clap::{Args, Parser, Subcommand};
use std::path::{Path, PathBuf};

#[derive(Debug, Parser)]
#[command(
    name = "fairnav",
    about = "Deterministic multi-agent navigation and formation simulator with fairness-aware goal assignment",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    command: CommandSpec,
}

#[derive(Debug, Subcommand)]
enum CommandSpec {
    /// Run one scenario for a batch of episodes and emit CSV metrics.
    Run(RunArgs),
    /// Sweep agent counts x the four variants (ra, oa, fa, fa_fr).
    Bench(BenchArgs),
    /// Solve an assignment problem from a cost matrix file.
    Assign(AssignArgs),
    /// Run formation episodes (the config must contain a formation block).
    Formation(RunArgs),
    /// Replay a trace file through the validator.
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Scenario configuration file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Episodes to run (overrides nothing in the file; flag-only).
    #[arg(long, default_value_t = 100)]
    episodes: usize,
    /// Base seed; episode k uses seed + k.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the number of agents.
    #[arg(long)]
    agents: Option<usize>,
    /// Override the assignment mode: random, optimal, or minmax.
    #[arg(long)]
    assign: Option<String>,
    /// Override the fairness reward: on or off.
    #[arg(long, value_name = "on|off")]
    fair_reward: Option<String>,
    /// Policy: scripted-ego, scripted-assigned, or external.
    #[arg(long, default_value = "scripted-assigned")]
    policy: String,
    /// Command line for the external policy process.
    #[arg(long)]
    external_cmd: Option<String>,
    /// Write per-episode CSV rows here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write a per-step trace here (one JSON object per line).
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[arg(long)]
    config: PathBuf,
    /// Comma-separated agent counts to sweep.
    #[arg(long, default_value = "3,5,7,10")]
    agents: String,
    #[arg(long, default_value_t = 100)]
    episodes: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "scripted-assigned")]
    policy: String,
    #[arg(long)]
    external_cmd: Option<String>,
    /// Write the combined summary CSV here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct AssignArgs {
    /// Plain-text cost matrix: one row per line, whitespace-separated.
    #[arg(long)]
    matrix: PathBuf,
    /// Solver: random, optimal, minmax, or brute-sum / brute-lexmax.
    #[arg(long, default_value = "optimal")]
    mode: String,
    /// Seed for the random mode.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    /// Trace file produced by `run --trace`.
    #[arg(long)]
    trace: PathBuf,
}

fn apply_overrides(mut scenario: ScenarioConfig, args: &RunArgs) -> Result<ScenarioConfig> {
    if let Some(n) = args.agents {
        scenario.num_agents = n;
    }
    if let Some(mode) = &args.assign {
        scenario.assignment_mode = AssignMode::parse(mode)?;
    }
    if let Some(flag) = &args.fair_reward {
        scenario.fairness_reward_enabled = match flag.as_str() {
            "on" => true,
            "off" => false,
            other => {
                return Err(Error::Config(format!(
                    "--fair-reward expects on or off, got {other:?}"
                )))
            }
        };
    }
    if let Some(seed) = args.seed {
        scenario.seed = seed;
    }
    scenario.validate()?;
    Ok(scenario)
}

fn cmd_run(args: &RunArgs, require_formation: bool) -> Result<()> {
    if args.episodes < 1 {
        return Err(Error::Config("--episodes must be >= 1".into()));
    }
    let scenario = apply_overrides(ScenarioConfig::from_file(&args.config)?, args)?;
    if require_formation && scenario.formation.is_none() {
        return Err(Error::Config(
            "the formation subcommand needs a [formation] block in the config".into(),
        ));
    }
    let policy = PolicySelection::parse(&args.policy, args.external_cmd.as_deref())?;
    let batch = runner::run_batch(
        &scenario,
        &policy,
        args.episodes,
        scenario.seed,
        args.trace.is_some(),
    )?;
    if let Some(path) = &args.out {
        std::fs::write(path, runner::episodes_csv(&batch.episodes))?;
    }
    if let (Some(path), Some(trace)) = (&args.trace, &batch.trace) {
        std::fs::write(path, trace)?;
    }
    println!("{}", batch.summary.summary_line());
    Ok(())
}

fn summaries_csv(rows: &[BatchSummary]) -> String {
    let mut out = String::from(
        "agents,variant,episodes,F_median,S_mean_pct,T_median,D_median,collisions_median\n",
    );
    for s in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            s.num_agents,
            s.variant,
            s.episodes,
            s.fairness.median,
            s.success_pct.mean,
            s.episode_fraction.median,
            s.total_distance.median,
            s.collisions.median
        ));
    }
    out
}

fn cmd_bench(args: &BenchArgs) -> Result<()> {
    if args.episodes < 1 {
        return Err(Error::Config("--episodes must be >= 1".into()));
    }
    let base = ScenarioConfig::from_file(&args.config)?;
    let policy = PolicySelection::parse(&args.policy, args.external_cmd.as_deref())?;
    let counts: Vec<usize> = args
        .agents
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| Error::Config(format!("bad agent count {s:?} in --agents")))
        })
        .collect::<Result<_>>()?;
    if counts.is_empty() {
        return Err(Error::Config("--agents must list at least one count".into()));
    }
    let seed = args.seed.unwrap_or(base.seed);

    let mut summaries = Vec::new();
    println!("agents variant  F_med   S_mean%  T_med   D_med");
    for &m in &counts {
        for variant in Variant::ALL {
            let scenario = ScenarioConfig {
                num_agents: m,
                seed,
                ..base.with_variant(variant)
            };
            scenario.validate()?;
            let batch = runner::run_batch(&scenario, &policy, args.episodes, seed, false)?;
            println!(
                "{:<6} {:<8} {:<7.4} {:<8.1} {:<7.3} {:<7.4}",
                m,
                variant.label(),
                batch.summary.fairness.median,
                batch.summary.success_pct.mean,
                batch.summary.episode_fraction.median,
                batch.summary.total_distance.median
            );
            summaries.push(batch.summary);
        }
    }
    if let Some(path) = &args.out {
        std::fs::write(path, summaries_csv(&summaries))?;
    }
    Ok(())
}

fn parse_matrix_file(path: &Path) -> Result<CostMatrix> {
    let text = std::fs::read_to_string(path)?;
    let rows: Vec<Vec<f64>> = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|line| {
            line.split_whitespace()
                .map(|tok| {
                    tok.parse::<f64>()
                        .map_err(|_| Error::Config(format!("bad matrix entry {tok:?}")))
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    CostMatrix::new(rows)
}

fn cmd_assign(args: &AssignArgs) -> Result<()> {
    let c = parse_matrix_file(&args.matrix)?;
    let assignment = match args.mode.as_str() {
        "random" => assignment::assign_random(c.n(), args.seed),
        "optimal" => assignment::assign_optimal(&c),
        "minmax" => assignment::assign_minmax_fair(&c)?,
        "brute-sum" => assignment::brute_force_assign(&c, BruteObjective::Sum)?,
        "brute-lexmax" => assignment::brute_force_assign(&c, BruteObjective::LexMax)?,
        other => {
            return Err(Error::Config(format!(
                "unknown assign mode {other:?} (expected random, optimal, minmax, brute-sum, or brute-lexmax)"
            )))
        }
    };
    let goal_of: Vec<String> = assignment.goal_of.iter().map(|g| g.to_string()).collect();
    println!("goal_of: {}", goal_of.join(" "));
    println!("sum: {}", assignment.total_cost(&c));
    println!("max: {}", assignment.max_cost(&c));
    Ok(())
}

fn cmd_validate(args: &ValidateArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.trace)?;
    let lines = trace::parse_trace(&text)?;
    let steps = trace::validate_trace(&lines)?;
    println!("trace ok: {steps} steps validated");
    Ok(())
}

/// Parses arguments and runs the requested command; returns the process
/// exit code.
pub fn main_entry() -> i32 {
    let cli = Cli::parse();
    let result = match &cli.command {
        CommandSpec::Run(args) => cmd_run(args, false),
        CommandSpec::Formation(args) => cmd_run(args, true),
        CommandSpec::Bench(args) => cmd_bench(args),
        CommandSpec::Assign(args) => cmd_assign(args),
        CommandSpec::Validate(args) => cmd_validate(args),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
