//! `oirs`: run a scenario file through one of the simulation commands.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use sha2::{Digest, Sha256};

use commands::{config_dir, run, Command, Context, RunError};
use config::Scenario;

#[derive(Parser, Debug)]
#[command(name = "oirs", version, about = "Optical reflecting surface simulations")]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// Scenario file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Overrides `solver.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory, used as is. Without it files go to
    /// `<output.dir>/<command>`, or `out/<command>`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `solver.threads`.
    #[arg(long)]
    threads: Option<usize>,
}

fn main_inner(cli: Cli) -> Result<(), RunError> {
    let (scenario, bytes) = Scenario::load(&cli.config).map_err(|e| RunError::Config(e.to_string()))?;
    if let Some(n) = cli.threads.or(scenario.solver.threads) {
        if n == 0 {
            return Err(RunError::Config("threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| RunError::Compute(e.to_string()))?;
    }
    let out_dir = cli
        .out
        .unwrap_or_else(|| {
            let base = scenario.output.dir.as_ref().map_or_else(|| PathBuf::from("out"), |d| config_dir(&cli.config).join(d));
            base.join(cli.command.name())
        });
    let ctx = Context {
        command: cli.command,
        seed: cli.seed.unwrap_or(scenario.solver.seed),
        config_sha256: hex::encode(Sha256::digest(&bytes)),
        config_dir: config_dir(&cli.config),
        out_dir,
        scenario,
    };
    run(&ctx)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match main_inner(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.to_string().replace(['\n', '"'], " ");
            eprintln!("error kind={} message=\"{msg}\"", e.kind());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
