use anyhow::Result;
use clap::{Parser, Subcommand};
use gatemon_tools::config::PipelineConfig;
use gatemon_tools::pipeline;
use std::path::PathBuf;
use std::process::ExitCode;

/// Gate-level hardening toolchain: security coverage, DMR monitor
/// insertion under ECO timing budgets, and trojan detection evaluation.
#[derive(Parser)]
#[command(name = "gatemon", version)]
struct Cli {
    /// Pipeline config file (flat key=value).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for reports and artifacts.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Override the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate the netlist; emit its canonical form.
    Parse,
    /// Security coverage reports (structural, and exact when configured).
    Coverage,
    /// Run the assertion selection loop over the candidate manifest.
    Select,
    /// Floorplan and initial placement with timing and wirelength.
    Place,
    /// Full back-end hardening: monitors, ECO loop, snapshots, summaries.
    Harden,
    /// Trojan campaign and clean-run false-positive check.
    Attack,
    /// One-page design digest.
    Report,
}

fn run() -> Result<Vec<PathBuf>> {
    let cli = Cli::parse();
    let config_path = cli
        .config
        .ok_or_else(|| anyhow::anyhow!("--config <path> is required"))?;
    let mut config = PipelineConfig::load(&config_path)?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    match cli.command {
        Command::Parse => pipeline::cmd_parse(&config, &cli.out),
        Command::Coverage => pipeline::cmd_coverage(&config, &cli.out),
        Command::Select => pipeline::cmd_select(&config, &cli.out),
        Command::Place => pipeline::cmd_place(&config, &cli.out),
        Command::Harden => pipeline::cmd_harden(&config, &cli.out),
        Command::Attack => pipeline::cmd_attack(&config, &cli.out),
        Command::Report => pipeline::cmd_report(&config, &cli.out),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(files) => {
            for f in files {
                println!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
