use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use zerorays::sphere::DEFAULT_GRID_CAP;
use zerorays_cli::*;

#[derive(Parser)]
#[command(
    name = "zerorays",
    version,
    about = "Count real zero rays of square homogeneous systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Count zero rays by certified grid refinement.
    Count {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "exact")]
        mode: ModeArg,
        /// Significand bits in rounded mode.
        #[arg(long, default_value_t = 53)]
        bits: u32,
        #[arg(long = "max-iter", default_value_t = zerorays::engine::DEFAULT_MAX_ITERATIONS)]
        max_iter: u32,
        /// Worker threads; 0 uses every core.
        #[arg(long, default_value_t = 0)]
        workers: usize,
        /// Most grid points evaluated at one level.
        #[arg(long = "grid-cap", default_value_t = DEFAULT_GRID_CAP)]
        grid_cap: u64,
        #[arg(long)]
        output: Option<PathBuf>,
        /// Print each level's report to stderr as it completes.
        #[arg(long)]
        trace: bool,
    },
    /// Newton-refine a start point and check quadratic convergence.
    Refine {
        #[arg(long)]
        input: PathBuf,
        /// Comma-separated coordinates of a unit vector.
        #[arg(long, allow_hyphen_values = true)]
        start: String,
        #[arg(long = "max-steps", default_value_t = zerorays::engine::DEFAULT_REFINE_STEPS)]
        max_steps: usize,
        #[arg(long = "beta-tol", default_value_t = zerorays::engine::DEFAULT_BETA_TOL)]
        beta_tol: f64,
    },
    /// Grid lower bound on the condition number.
    Kappa {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        level: u32,
        #[arg(long = "grid-cap", default_value_t = DEFAULT_GRID_CAP)]
        grid_cap: u64,
    },
    /// Compare rounded-mode counts at several precisions with exact mode.
    Sweep {
        #[arg(long)]
        input: PathBuf,
        /// Comma-separated significand widths.
        #[arg(long)]
        bits: String,
        #[arg(long = "max-iter", default_value_t = zerorays::engine::DEFAULT_MAX_ITERATIONS)]
        max_iter: u32,
        #[arg(long, default_value_t = 0)]
        workers: usize,
        #[arg(long = "grid-cap", default_value_t = DEFAULT_GRID_CAP)]
        grid_cap: u64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum ModeArg {
    Exact,
    Rounded,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR as u8)
        }
    }
}

fn emit(doc: &str, output: Option<&Path>) -> CliResult<()> {
    match output {
        Some(path) => std::fs::write(path, doc).map_err(|source| CliError::Io {
            path: path.to_owned(),
            source,
        }),
        None => {
            print!("{doc}");
            Ok(())
        }
    }
}

fn run(command: Command) -> CliResult<i32> {
    match command {
        Command::Count {
            input,
            mode,
            bits,
            max_iter,
            workers,
            grid_cap,
            output,
            trace,
        } => {
            let config = RunConfig {
                mode: match mode {
                    ModeArg::Exact => ModeChoice::Exact,
                    ModeArg::Rounded => ModeChoice::Rounded,
                },
                bits,
                max_iterations: max_iter,
                workers,
                grid_cap,
                output,
                trace,
            };
            let text = read_input(&input)?;
            let result = cmd_count(&config, &text, |it| {
                eprintln!("{}", serde_json::to_string(it).expect("reports serialize"))
            })?;
            emit(&render(&result), config.output.as_deref())?;
            Ok(exit_code(&result))
        }
        Command::Refine {
            input,
            start,
            max_steps,
            beta_tol,
        } => {
            let text = read_input(&input)?;
            let report = cmd_refine(&text, &parse_point(&start)?, max_steps, beta_tol)?;
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            emit(&render(&report), None)?;
            Ok(EXIT_CONVERGED)
        }
        Command::Kappa {
            input,
            level,
            grid_cap,
        } => {
            let text = read_input(&input)?;
            emit(&render(&cmd_kappa(&text, level, grid_cap)?), None)?;
            Ok(EXIT_CONVERGED)
        }
        Command::Sweep {
            input,
            bits,
            max_iter,
            workers,
            grid_cap,
            output,
        } => {
            let config = RunConfig {
                max_iterations: max_iter,
                workers,
                grid_cap,
                ..RunConfig::default()
            };
            let text = read_input(&input)?;
            let table = cmd_sweep(&config, &text, &parse_bits(&bits)?)?;
            emit(&render(&table), output.as_deref())?;
            Ok(EXIT_CONVERGED)
        }
    }
}
