use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pmlkit::oracle::OracleBudget;
use pmlkit::{PmlError, RunConfig, SolverConfig};

mod bench;
mod commands;

use bench::BenchSpecError;

#[derive(Parser)]
#[command(name = "pmlkit", version, about = "Approximate profile maximum likelihood")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the profile of a whitespace-separated sample file.
    Profile { input: PathBuf },
    /// Solve the convex relaxation on one scaled grid and print the allocation.
    Solve {
        /// Profile JSON or sample file.
        input: PathBuf,
        /// Grid scale factor (at least 1).
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Estimate a distribution and evaluate plug-in properties on it.
    Estimate {
        /// Profile JSON or sample file.
        input: PathBuf,
        #[command(flatten)]
        run: RunArgs,
        /// Property to evaluate, as `name` or `name:param`. Repeatable.
        #[arg(long = "property")]
        properties: Vec<String>,
        /// Compare against the exact discrete maximizer (tiny inputs only).
        #[arg(long)]
        oracle_check: bool,
    },
    /// Exact discrete PML, or the exact profile probability of `--probs`.
    Oracle {
        /// Profile JSON or sample file.
        input: PathBuf,
        /// Grid JSON `{"levels":[...]}`; defaults to the base grid for `--alpha`.
        #[arg(long)]
        grid: Option<PathBuf>,
        /// Comma-separated symbol probabilities.
        #[arg(long, value_delimiter = ',')]
        probs: Option<Vec<f64>>,
        #[arg(long, default_value_t = 1.0 / 3.0)]
        alpha: f64,
        #[command(flatten)]
        budget: BudgetArgs,
    },
    /// Run a benchmark described by a JSON spec and print a CSV table.
    Bench {
        spec: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
}

#[derive(Args, Clone, Copy)]
struct RunArgs {
    #[arg(long, default_value_t = 1.0 / 3.0)]
    alpha: f64,
    #[arg(long, default_value_t = 1e-4)]
    gap_tol: f64,
    #[arg(long, default_value_t = 5000)]
    max_iters: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    resolve_levels: bool,
    #[arg(long, default_value_t = 200)]
    max_scales: usize,
}

impl From<RunArgs> for RunConfig {
    fn from(a: RunArgs) -> Self {
        RunConfig {
            alpha: a.alpha,
            solver: SolverConfig {
                gap_tol: a.gap_tol,
                max_iters: a.max_iters,
                seed: a.seed,
            },
            resolve_levels: a.resolve_levels,
            max_scales: a.max_scales,
        }
    }
}

#[derive(Args, Clone, Copy)]
struct BudgetArgs {
    #[arg(long, default_value_t = 5)]
    max_domain: usize,
    #[arg(long, default_value_t = 8)]
    max_n: u64,
    #[arg(long, default_value_t = 10_000_000)]
    max_states: u64,
}

impl From<BudgetArgs> for OracleBudget {
    fn from(b: BudgetArgs) -> Self {
        OracleBudget {
            max_domain: b.max_domain,
            max_n: b.max_n,
            max_states: b.max_states,
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<BenchSpecError>().is_some() {
        return 6;
    }
    for cause in err.chain() {
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<PmlError>() {
            return match e {
                PmlError::EmptyInput => 3,
                PmlError::Infeasible { .. } => 4,
                PmlError::BudgetExceeded(_) => 5,
                _ => 1,
            };
        }
    }
    1
}

fn init_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("PMLKIT_THREADS") {
        let n: usize = v
            .parse()
            .map_err(|_| anyhow::anyhow!("PMLKIT_THREADS must be a positive integer, got {v:?}"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<String> {
    init_threads()?;
    match cli.command {
        Command::Profile { input } => commands::cmd_profile(&input),
        Command::Solve { input, scale, run } => commands::cmd_solve(&input, scale, &run.into()),
        Command::Estimate {
            input,
            run,
            properties,
            oracle_check,
        } => commands::cmd_estimate(&input, &run.into(), &properties, oracle_check),
        Command::Oracle {
            input,
            grid,
            probs,
            alpha,
            budget,
        } => commands::cmd_oracle(&input, grid.as_deref(), probs.as_deref(), alpha, &budget.into()),
        Command::Bench { spec, run } => bench::cmd_bench(&spec, &run.into()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
