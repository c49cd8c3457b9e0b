mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use isotherm_core::circuit::qasm::export_qasm;
use isotherm_core::protocol::{
    fit_power_law, fully_quantum_step_circuits, hybrid_step_circuits, run_exact, run_fully_quantum,
    run_hybrid_enumerate, run_hybrid_montecarlo, scaling_sweep, Readout, RunMode, Schedule, ScheduleKind, WorkSummary,
};
use isotherm_core::{validate, BathParams, Branch, Preparation};

use config::{ConfigArgs, Format, RunConfig, ScheduleArg, DEFAULT_TRAJECTORIES};
use output::{emit, sig, CSV_DIGITS};

/// Discrete-step isothermal process on a simulated quantum register.
#[derive(Parser, Debug)]
#[command(name = "isotherm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one protocol and write per-step populations and work
    Run(ConfigArgs),
    /// Extra work against step number at fixed contact time
    Scaling(ScalingArgs),
    /// Recompute the exact-work table for N = 2, 3, 4 and both contact times
    Table(TableArgs),
    /// Write one OpenQASM 2.0 file per measured step
    ExportQasm(ExportArgs),
    /// Run the invariant suite; exit status 2 on any failure
    Validate(ValidateArgs),
}

#[derive(Args, Debug)]
struct ScalingArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Ascending step numbers
    #[arg(long, value_delimiter = ',', default_value = "4,8,16,32,64")]
    n_list: Vec<usize>,
}

#[derive(Args, Debug)]
struct TableArgs {
    #[arg(long, value_enum, default_value = "geometric")]
    schedule: ScheduleArg,
}

#[derive(Args, Debug)]
struct ExportArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Sub-channel per step for hybrid modes, e.g. "↓↑" or "du"
    #[arg(long)]
    selection: Option<String>,
    /// Files are written as <PREFIX>_step<j>.qasm
    #[arg(long, default_value = "isotherm")]
    prefix: PathBuf,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    #[arg(long, default_value_t = validate::DEFAULT_SEED)]
    seed: u64,
}

fn run_summary(config: &RunConfig, schedule: &Schedule) -> Result<WorkSummary> {
    Ok(match config.mode {
        RunMode::Exact => run_exact(schedule)?,
        RunMode::HybridEnumerate => run_hybrid_enumerate(schedule)?.summary,
        RunMode::HybridMonteCarlo => {
            run_hybrid_montecarlo(schedule, config.trajectories.unwrap_or(DEFAULT_TRAJECTORIES), config.seed)?
        }
        RunMode::FullyQuantum => {
            let readout = match config.shots {
                Some(shots) => Readout::Shots { shots, seed: config.seed },
                None => Readout::Exact,
            };
            run_fully_quantum(schedule, readout, config.ancilla_mode)?
        }
    })
}

fn cmd_run(args: &ConfigArgs) -> Result<()> {
    let config = RunConfig::resolve(args)?;
    let schedule = config.schedule()?;
    let summary = run_summary(&config, &schedule)?;
    let text = match config.format {
        Format::Csv => output::run_csv(&schedule, &summary),
        Format::Json => output::run_json(&summary),
    };
    emit(config.out.as_deref(), &text)
}

fn cmd_scaling(args: &ScalingArgs) -> Result<()> {
    let config = RunConfig::resolve(&args.config)?;
    let rows = scaling_sweep(
        config.schedule,
        config.bath()?,
        config.omega_start,
        config.omega_end,
        config.delta_tau,
        &args.n_list,
    )?;
    let mut text = String::from("N,tau,mean_work,extra_work,N_times_extra\n");
    for (n, w) in &rows {
        text.push_str(&format!(
            "{n},{},{},{},{}\n",
            sig(*n as f64 * config.delta_tau, CSV_DIGITS),
            sig(w.mean_work, CSV_DIGITS),
            sig(w.extra_work, CSV_DIGITS),
            sig(*n as f64 * w.extra_work, CSV_DIGITS),
        ));
    }
    let points: Vec<(usize, f64)> = rows.iter().map(|(n, w)| (*n, w.extra_work)).collect();
    if points.len() < 4 {
        text.push_str(&format!("# fit skipped: {} points, at least 4 needed\n", points.len()));
    } else {
        let fit = fit_power_law(&points)?;
        text.push_str(&format!("# slope={}\n# C={}\n", sig(fit.slope, CSV_DIGITS), sig(fit.coefficient, CSV_DIGITS)));
    }
    emit(config.out.as_deref(), &text)
}

pub const TABLE_STEPS: [usize; 3] = [2, 3, 4];
pub const TABLE_DTAUS: [f64; 2] = [0.5, 10.0];

fn cmd_table(args: &TableArgs) -> Result<()> {
    let kind: ScheduleKind = args.schedule.into();
    let bath = BathParams::new(1.0, 1.0)?;
    let mut text = String::from("simulation     N  dtau=0.5  dtau=10\n");
    let mut row = |label: &str, n: usize, fully_quantum: bool| -> Result<()> {
        let mut cells = Vec::new();
        for dtau in TABLE_DTAUS {
            let schedule = Schedule::build(kind, bath, 1.0, 2.0, n, dtau)?;
            let w = if fully_quantum {
                run_fully_quantum(&schedule, Readout::Exact, Default::default())?.mean_work
            } else {
                run_hybrid_enumerate(&schedule)?.summary.mean_work
            };
            cells.push(format!("{w:.3}"));
        }
        text.push_str(&format!("{label:<14} {n}  {:<8}  {}\n", cells[0], cells[1]));
        Ok(())
    };
    for n in TABLE_STEPS {
        row("hybrid", n, false)?;
    }
    row("fully-quantum", 2, true)?;
    emit(None, &text)
}

fn cmd_export_qasm(args: &ExportArgs) -> Result<()> {
    let config = RunConfig::resolve(&args.config)?;
    let schedule = config.schedule()?;
    let circuits = match config.mode {
        RunMode::FullyQuantum => {
            if args.selection.is_some() {
                bail!("--selection only applies to hybrid modes");
            }
            fully_quantum_step_circuits(&schedule, Preparation::CoherentRotation)?
        }
        RunMode::HybridEnumerate | RunMode::HybridMonteCarlo => {
            let text = args.selection.as_deref().context("hybrid export needs --selection")?;
            let selection = Branch::parse_selection(text)?;
            hybrid_step_circuits(&schedule, &selection, Preparation::CoherentRotation)?
        }
        RunMode::Exact => bail!("export-qasm needs a fully-quantum or hybrid mode"),
    };
    let prefix = args.prefix.display();
    for (i, circuit) in circuits.iter().enumerate() {
        let path = PathBuf::from(format!("{prefix}_step{}.qasm", i + 1));
        std::fs::write(&path, export_qasm(circuit)?).with_context(|| format!("writing {}", path.display()))?;
        println!("{}", path.display());
    }
    Ok(())
}

fn cmd_validate(args: &ValidateArgs) -> ExitCode {
    let report = validate::run_all_seeded(args.seed);
    for outcome in &report.outcomes {
        println!("{outcome}");
    }
    let failed = report.failures().count();
    println!("{} checks, {} failed", report.outcomes.len(), failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Scaling(args) => cmd_scaling(args),
        Command::Table(args) => cmd_table(args),
        Command::ExportQasm(args) => cmd_export_qasm(args),
        Command::Validate(args) => return cmd_validate(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
