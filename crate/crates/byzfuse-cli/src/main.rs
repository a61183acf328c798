//! byzfuse: decision-fusion simulator for multi-sensor networks with
//! Byzantine nodes.
//!
//! Subcommands: `simulate` (one scenario), `sweep` (vary p_mal or alpha over
//! a grid), `exact` (full-enumeration error probabilities on tiny
//! instances), `table` (named presets reproducing published experiments).
//! Results are written as CSV or JSON with a fixed schema.
//!
//! Exit codes: 0 success, 2 invalid configuration, 3 infeasible instance.

mod output;
mod runspec;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use byzfuse_core::exact::exact_error;
use byzfuse_core::sim::{estimate_error, sweep};

use output::{to_csv, to_json, write_atomic, Row};
use runspec::{resolve, CommandKind, ConfigError, OutputFormat, Overrides, ResolvedRun};

#[derive(Parser)]
#[command(
    name = "byzfuse",
    version,
    about = "Optimum decision fusion with Byzantine nodes: simulation and exact analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct CommonArgs {
    /// JSON config file mirroring the run spec; flags override its fields
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Monte Carlo trial count (default 100000)
    #[arg(long, value_name = "N")]
    trials: Option<u64>,
    /// Master seed; identical seeds give byte-identical output
    #[arg(long, value_name = "S")]
    seed: Option<u64>,
    /// Output path (stdout when omitted); written via temp file + rename
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Output format
    #[arg(long, value_enum, value_name = "csv|json")]
    format: Option<OutputFormat>,
    /// Comma-separated rules: independent, fixed-k, majority
    #[arg(long, value_name = "LIST")]
    rules: Option<String>,
    /// Node count
    #[arg(long, value_name = "N")]
    n: Option<usize>,
    /// Observation window length
    #[arg(long, value_name = "T")]
    t: Option<usize>,
    /// Local decision error probability (must lie in [0, 0.5))
    #[arg(long, value_name = "E")]
    epsilon: Option<f64>,
    /// Byzantine flipping probability
    #[arg(long, value_name = "P")]
    pmal: Option<f64>,
    /// Independent-prior Byzantine probability (sets the independent prior)
    #[arg(long, value_name = "A")]
    alpha: Option<f64>,
    /// Exact number of Byzantine nodes (sets the fixed-count prior)
    #[arg(long, value_name = "K")]
    k: Option<usize>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Swept parameter: p_mal or alpha
    #[arg(long, value_name = "AXIS")]
    axis: Option<String>,
    /// Comma-separated grid values in [0, 1]
    #[arg(long, value_name = "V1,V2,...")]
    grid: Option<String>,
}

#[derive(Args, Debug)]
struct TableArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Preset name, e.g. table1-row3, table2-row1, fig2, fig3, fig4
    #[arg(long, value_name = "NAME")]
    preset: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate error probabilities for a single scenario
    Simulate(CommonArgs),
    /// Sweep p_mal or alpha over a grid (common random numbers across points)
    Sweep(SweepArgs),
    /// Exact error probabilities by full enumeration (n*T <= 16, T <= 8)
    Exact(CommonArgs),
    /// Run a shipped preset reproducing a published table row or figure
    Table(TableArgs),
}

fn overrides_from(common: &CommonArgs) -> Overrides {
    Overrides {
        config: common.config.clone(),
        preset: None,
        trials: common.trials,
        seed: common.seed,
        out: common.out.clone(),
        format: common.format,
        rules: common.rules.clone(),
        n: common.n,
        t: common.t,
        epsilon: common.epsilon,
        pmal: common.pmal,
        alpha: common.alpha,
        k: common.k,
        axis: None,
        grid: None,
    }
}

enum RunError {
    Config(String),
    Infeasible(String),
    Io(String),
}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e.to_string())
    }
}

impl From<byzfuse_core::Error> for RunError {
    fn from(e: byzfuse_core::Error) -> Self {
        if e.is_infeasible() {
            RunError::Infeasible(e.to_string())
        } else {
            RunError::Config(e.to_string())
        }
    }
}

fn rows_for(run: &ResolvedRun) -> Result<Vec<Row>, RunError> {
    let seed = run.scenario.master_seed;
    match run.command {
        CommandKind::Simulate => {
            let estimates = estimate_error(&run.scenario)?;
            Ok(estimates
                .into_iter()
                .map(|(rule, est)| Row {
                    axis_value: run.scenario.p_mal,
                    rule: rule.label().to_string(),
                    per_state_error: est.per_state_error,
                    sequence_error: est.sequence_error,
                    stderr: est.stderr_per_state,
                    trials: est.trials,
                    seed,
                })
                .collect())
        }
        CommandKind::Sweep | CommandKind::Table => {
            let axis = run.axis.expect("resolve() guarantees an axis");
            let grid = run.grid.as_deref().expect("resolve() guarantees a grid");
            let rows = sweep(&run.scenario, axis, grid)?;
            Ok(rows
                .into_iter()
                .map(|r| Row {
                    axis_value: r.value,
                    rule: r.rule.label().to_string(),
                    per_state_error: r.estimate.per_state_error,
                    sequence_error: r.estimate.sequence_error,
                    stderr: r.estimate.stderr_per_state,
                    trials: r.estimate.trials,
                    seed,
                })
                .collect())
        }
        CommandKind::Exact => {
            let ch = run.scenario.channel()?;
            let mut rows = Vec::with_capacity(run.scenario.rules.len());
            for rule in &run.scenario.rules {
                let res = exact_error(
                    run.scenario.n,
                    run.scenario.t,
                    &ch,
                    &run.scenario.node_prior,
                    rule,
                )?;
                rows.push(Row {
                    axis_value: run.scenario.p_mal,
                    rule: rule.label().to_string(),
                    per_state_error: res.per_state_error,
                    sequence_error: res.sequence_error,
                    stderr: 0.0,
                    trials: 0,
                    seed,
                });
            }
            Ok(rows)
        }
    }
}

fn execute(command: CommandKind, flags: Overrides) -> Result<(), RunError> {
    let run = resolve(command, &flags)?;
    let rows = rows_for(&run)?;
    let payload = match run.format {
        OutputFormat::Csv => to_csv(&rows),
        OutputFormat::Json => to_json(&run.spec, &rows),
    };
    match &run.out {
        Some(path) => write_atomic(path, &payload)
            .map_err(|e| RunError::Io(format!("writing {}: {e}", path.display())))?,
        None => print!("{payload}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, flags) = match cli.command {
        Command::Simulate(common) => (CommandKind::Simulate, overrides_from(&common)),
        Command::Sweep(args) => {
            let mut flags = overrides_from(&args.common);
            flags.axis = args.axis;
            flags.grid = args.grid;
            (CommandKind::Sweep, flags)
        }
        Command::Exact(common) => (CommandKind::Exact, overrides_from(&common)),
        Command::Table(args) => {
            let mut flags = overrides_from(&args.common);
            flags.preset = args.preset;
            (CommandKind::Table, flags)
        }
    };
    match execute(command, flags) {
        Ok(()) => ExitCode::SUCCESS,
        Err(RunError::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(RunError::Infeasible(msg)) => {
            eprintln!("error: infeasible instance: {msg}");
            ExitCode::from(3)
        }
        Err(RunError::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
