use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use conefix::reproduce::{self, render_table, ReproduceOptions};
use conefix::run::EXIT_USAGE;
use conefix::{load_scenario, run_scenario, Mode, RunOptions};

#[derive(Parser)]
#[command(name = "conefix", version, about = "Cone-metric fixed-point experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Overrides solver.seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Report directory (CONEFIX_OUT takes precedence).
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Omit the timestamp from JSON reports.
    #[arg(long, global = true)]
    no_timestamp: bool,
    /// Worker threads for `reproduce`.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Check cone and metric axioms.
    Axioms { scenario: PathBuf },
    /// Estimate the TR-contraction modulus.
    Modulus { scenario: PathBuf },
    /// Run a solve, solve-localized, solve-power or uniqueness scenario.
    Solve { scenario: PathBuf },
    /// Run every bundled scenario in a directory and print a summary.
    Reproduce { dir: Option<PathBuf> },
}

fn accepts(command: &Command, mode: Mode) -> bool {
    match command {
        Command::Axioms { .. } => mode == Mode::Axioms,
        Command::Modulus { .. } => mode == Mode::Modulus,
        Command::Solve { .. } => matches!(
            mode,
            Mode::Solve | Mode::SolveLocalized | Mode::SolvePower | Mode::Uniqueness
        ),
        Command::Reproduce { .. } => false,
    }
}

fn run(cli: Cli) -> anyhow::Result<i32> {
    let out_dir = std::env::var_os("CONEFIX_OUT")
        .map(PathBuf::from)
        .unwrap_or(cli.out);
    let run_opts = RunOptions {
        out_dir: Some(out_dir),
        timestamp: !cli.no_timestamp,
    };
    let path = match &cli.command {
        Command::Reproduce { dir } => {
            let dir = dir.clone().unwrap_or_else(reproduce::bundled_dir);
            let rows = reproduce::reproduce_bundled(
                &dir,
                &ReproduceOptions {
                    seed: cli.seed,
                    jobs: cli.jobs,
                    run: run_opts,
                },
            );
            print!("{}", render_table(&rows));
            return Ok(reproduce::exit_code(&rows));
        }
        Command::Axioms { scenario } | Command::Modulus { scenario } | Command::Solve { scenario } => {
            scenario.clone()
        }
    };
    let mut scenario = load_scenario(&path)?;
    if !accepts(&cli.command, scenario.mode) {
        anyhow::bail!("scenario mode `{}` does not match this subcommand", scenario.mode);
    }
    if let Some(seed) = cli.seed {
        scenario.solver.seed = seed;
    }
    let report = run_scenario(&scenario, &run_opts)?;
    let value = report
        .key
        .value
        .map(|v| format!("{v:.16e}"))
        .unwrap_or_else(|| "-".into());
    println!("{}: {} ({} = {})", report.scenario, report.outcome, report.key.label, value);
    Ok(report.exit_code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE as u8 } else { 0 });
        }
    };
    let code = run(cli).unwrap_or_else(|e| {
        eprintln!("error: {e:#}");
        EXIT_USAGE
    });
    ExitCode::from(code as u8)
}
