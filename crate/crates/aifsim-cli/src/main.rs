use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use aifsim::Error;
use aifsim_cli::commands::{self, Overrides};
use aifsim_cli::config::load_config;

#[derive(Parser)]
#[command(
    name = "aifsim",
    about = "Antithetic integral feedback with negative-feedback action: exact simulation, sweeps, and moment analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Experiment config JSON (or a manifest from a previous run).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override the trajectory count.
    #[arg(long, global = true)]
    n: Option<usize>,

    /// Override the base seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Use the full-scale ensemble size (10^6 trajectories).
    #[arg(long, global = true)]
    paper_scale: bool,

    /// Worker threads (default: all cores). Results do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one closed-loop ensemble and write trajectory statistics.
    Simulate,
    /// Evaluate the (k, Kp) grid from the config's sweep block.
    Sweep,
    /// Emit the dataset behind a named figure class (see `reproduce help`).
    Reproduce { figure_id: String },
    /// Check the four stationary invariants of the antithetic controller.
    Invariants,
    /// Moment-closure analysis only (no simulation); requires --beta.
    Analyze {
        /// Effective proportional gain to analyze at.
        #[arg(long, default_value_t = 0.0)]
        beta: f64,
    },
}

fn run(cli: Cli) -> Result<(), Error> {
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Error::Config(format!("cannot configure thread pool: {e}")))?;
    }
    let overrides = Overrides {
        n: cli.n,
        seed: cli.seed,
        paper_scale: cli.paper_scale,
    };
    let need_config = || -> Result<_, Error> {
        let path = cli
            .config
            .as_ref()
            .ok_or_else(|| Error::Config("--config <file> is required for this command".into()))?;
        let mut config = load_config(path)?;
        overrides.apply(&mut config);
        Ok(config)
    };

    match &cli.command {
        Command::Simulate => {
            commands::cmd_simulate(&need_config()?, &cli.out)?;
        }
        Command::Sweep => {
            commands::cmd_sweep(&need_config()?, &cli.out)?;
        }
        Command::Reproduce { figure_id } => {
            commands::cmd_reproduce(figure_id, &overrides, &cli.out)?;
        }
        Command::Invariants => {
            commands::cmd_invariants(&need_config()?, &cli.out)?;
        }
        Command::Analyze { beta } => {
            commands::cmd_analyze(&need_config()?, *beta, &cli.out)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                Error::Config(_) | Error::Structure(_) | Error::Unsupported(_) => {
                    ExitCode::from(2)
                }
                Error::Numeric(_)
                | Error::Analysis(_)
                | Error::Domain(_)
                | Error::Estimation(_) => ExitCode::from(3),
            }
        }
    }
}
