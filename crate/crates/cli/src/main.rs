use clap::{Parser, Subcommand};
use log::error;
use polaron_nm_cli::{parse_config, run_single, run_sweep, CliError, Config};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(version, about = "Telegraph-noise spin-boson dynamics and BLP non-Markovianity")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one parameter point, writing trace.csv and summary.csv.
    Run {
        config: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Evaluate a quantity on a two-axis grid, writing grid.csv and heatmap.pgm.
    Sweep {
        config: PathBuf,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
        workers: u64,
        /// Master seed for Monte-Carlo cells (overrides the config seed).
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

fn execute(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Run { config, out } => match parse_config(&config)? {
            Config::Run(cfg) => run_single(&cfg, &out).map(|_| ()),
            Config::Sweep(_) => Err(CliError::Config {
                line: 0,
                msg: "file has a [sweep] section, use `sweep`".into(),
            }),
        },
        Command::Sweep {
            config,
            workers,
            seed,
            out,
        } => match parse_config(&config)? {
            Config::Sweep(cfg) => run_sweep(&cfg, workers as usize, seed, &out).map(|_| ()),
            Config::Run(_) => Err(CliError::Config {
                line: 0,
                msg: "file has no [sweep] section, use `run`".into(),
            }),
        },
    }
}

fn main() -> ExitCode {
    env_logger::Builder::new()
        .filter_level(log::LevelFilter::Info)
        .format_timestamp(None)
        .init();
    let args = Args::parse();
    match execute(args.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
