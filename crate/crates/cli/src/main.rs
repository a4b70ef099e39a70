use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use obstacle_cli::config::{Config, Method};
use obstacle_cli::run::{run, RunOptions};
use obstacle_cli::summary::Summary;
use obstacle_cli::{compare, report, CliError};
use rayon::prelude::*;

#[derive(Parser)]
#[command(name = "obstacle-lab", version, about = "Obstacle-problem laboratory")]
struct Cli {
    /// Treat hypothesis warnings as failures and stop before solving.
    #[arg(long, global = true)]
    strict: bool,
    /// Output root; each run writes to `<out>/<name>/` (default `runs`).
    /// For `compare`, the directory receiving `compare.csv`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverArg {
    ActiveSet,
    Psor,
}

#[derive(Args)]
struct RunArgs {
    /// Scenario file; repeat to run several in parallel.
    #[arg(long = "config", required = true)]
    configs: Vec<PathBuf>,
    #[arg(long, value_enum)]
    solver: Option<SolverArg>,
}

#[derive(Subcommand)]
enum Command {
    /// Check hypotheses and solve.
    Solve(RunArgs),
    /// Solve, then run the analyses listed in each file.
    Analyze(RunArgs),
    /// Compare two run directories with the same analysis plan.
    Compare { a: PathBuf, b: PathBuf },
    /// Print a run's summary.
    Report { dir: PathBuf },
}

fn execute(cli: &Cli) -> Result<i32, CliError> {
    match &cli.command {
        Command::Solve(args) | Command::Analyze(args) => {
            let configs = args.configs.iter().map(|p| Config::load(p)).collect::<Result<Vec<_>, _>>()?;
            let opts = RunOptions {
                solver: args.solver.map(|s| match s {
                    SolverArg::ActiveSet => Method::ActiveSet,
                    SolverArg::Psor => Method::Psor,
                }),
                strict: cli.strict,
                out: cli.out.clone().unwrap_or_else(|| PathBuf::from("runs")),
                analyze: matches!(cli.command, Command::Analyze(_)),
            };
            let codes: Vec<i32> = configs
                .par_iter()
                .map(|c| match run(c, &opts) {
                    Ok(outcome) => {
                        println!("{}: {} -> {}", c.name, outcome.summary.status, outcome.dir.display());
                        outcome.status.code()
                    }
                    Err(e) => {
                        eprintln!("error: {e}");
                        e.exit_code()
                    }
                })
                .collect();
            Ok(codes.into_iter().max().unwrap_or(0))
        }
        Command::Compare { a, b } => {
            let (sa, sb) = (Summary::read(a)?, Summary::read(b)?);
            let rows = compare::compare(&sa, &sb)?;
            compare::print_table(&mut std::io::stdout().lock(), &sa, &sb, &rows)?;
            if let Some(out) = &cli.out {
                std::fs::create_dir_all(out)?;
                compare::write_csv(&out.join("compare.csv"), &rows)?;
            }
            Ok(0)
        }
        Command::Report { dir } => {
            report::render(&mut std::io::stdout().lock(), &Summary::read(dir)?)?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 64 } else { 0 });
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match execute(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
