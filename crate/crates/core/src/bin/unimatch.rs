use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use unimatch::experiments::{
    cmd_oracle, cmd_rde, cmd_round, cmd_simulate, load_config, HasSchema, Outputs,
};
use unimatch::Error;

#[derive(Parser)]
#[command(
    name = "unimatch",
    version,
    about = "Seeded cavity-method matching runs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the message law by grid iteration and population dynamics.
    Rde(Common),
    /// Compare exact optima on generated graphs with the limit predictions.
    Simulate(Common),
    /// Run the cover-score rounding pipeline on one generated graph.
    Round(Common),
    /// Check tree and cycle solvers against brute force.
    Oracle(Common),
}

#[derive(Args)]
struct Common {
    /// JSON config; defaults are used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads (defaults to all cores).
    #[arg(long)]
    threads: Option<usize>,
}

fn config<T>(c: &Common) -> Result<T, Error>
where
    T: HasSchema + Default + for<'de> serde::Deserialize<'de>,
{
    let mut cfg = match &c.config {
        Some(path) => load_config::<T>(path)?,
        None => T::default(),
    };
    if let Some(seed) = c.seed {
        cfg.set_seed(seed);
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<Outputs, Error> {
    let common = match &cli.command {
        Command::Rde(c) | Command::Simulate(c) | Command::Round(c) | Command::Oracle(c) => c,
    };
    if let Some(t) = common.threads {
        if t == 0 {
            return Err(Error::validation("threads", "must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Error::validation("threads", e.to_string()))?;
    }
    let out = &common.out;
    match &cli.command {
        Command::Rde(c) => cmd_rde(&config(c)?, out),
        Command::Simulate(c) => cmd_simulate(&config(c)?, out),
        Command::Round(c) => cmd_round(&config(c)?, out),
        Command::Oracle(c) => cmd_oracle(&config(c)?, out),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(out) => {
            for f in &out.files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
