use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use extremal::commands::{cmd_density, cmd_example_sec4, cmd_sample, cmd_verify, RunContext};
use extremal::config::ScenarioConfig;
use extremal::par::with_threads;

#[derive(Parser)]
#[command(name = "extremal", version, about = "Simulate and verify spatial extremal processes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw replicates and write their first k argmins.
    Sample(Common),
    /// Tabulate an argmin or minimum-value density.
    Density(Common),
    /// Run a builtin verification suite; exit 1 if any check fails.
    Verify(Common),
    /// Reproduce the one-dimensional Brownian-noise example.
    ExampleSec4(Common),
}

#[derive(Args)]
struct Common {
    /// Scenario file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Overrides `seed` in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides EXTREMAL_OUT_DIR and `out_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Use the final term exactly as printed in the source formula.
    #[arg(long)]
    paper_printed_term: bool,
    /// Worker threads (default: all cores). Output does not depend on it.
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (run, c): (fn(&ScenarioConfig, &RunContext) -> anyhow::Result<bool>, Common) = match cli.command {
        Command::Sample(c) => (cmd_sample, c),
        Command::Density(c) => (cmd_density, c),
        Command::Verify(c) => (cmd_verify, c),
        Command::ExampleSec4(c) => (cmd_example_sec4, c),
    };
    let result = ScenarioConfig::load(&c.config).and_then(|cfg| {
        let ctx = RunContext::resolve(&cfg, c.seed, c.out, c.paper_printed_term);
        with_threads(c.threads, || run(&cfg, &ctx))?
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
