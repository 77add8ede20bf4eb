use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ptc::cli::{run_scenario, Analysis};

/// Predefined-time and fixed-time controller laboratory.
#[derive(Debug, Parser)]
#[command(name = "ptc", version)]
struct Cli {
    /// Output directory for CSV trajectories and JSON reports.
    #[arg(long, global = true, env = "PTC_OUT_DIR", default_value = "ptc-out")]
    out_dir: PathBuf,

    /// Suppress the summary on stdout.
    #[arg(long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run every analysis listed in the scenario's [analyses] section.
    Run { scenario: PathBuf },
    /// Integrate each initial state and write trajectory CSVs.
    Simulate { scenario: PathBuf },
    /// Locate the peak control magnitude of each run.
    Peaks { scenario: PathBuf },
    /// Evaluate both predefined-time laws at t0 over a grid of initial states.
    BoundScan { scenario: PathBuf },
    /// Check the mean-velocity lower bound on each run.
    VelocityCheck { scenario: PathBuf },
    /// Classify higher derivatives of the exact solution at tf.
    Singularity { scenario: PathBuf },
    /// Compare peaks of a predefined-time and a fixed-time run.
    Compare { scenario: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (path, only) = match cli.command {
        Command::Run { scenario } => (scenario, None),
        Command::Simulate { scenario } => (scenario, Some(Analysis::Simulate)),
        Command::Peaks { scenario } => (scenario, Some(Analysis::Peaks)),
        Command::BoundScan { scenario } => (scenario, Some(Analysis::BoundScan)),
        Command::VelocityCheck { scenario } => (scenario, Some(Analysis::VelocityCheck)),
        Command::Singularity { scenario } => (scenario, Some(Analysis::Singularity)),
        Command::Compare { scenario } => (scenario, Some(Analysis::Compare)),
    };
    match run_scenario(&path, &cli.out_dir, only) {
        Ok(summary) => {
            if !cli.quiet {
                for f in &summary.files {
                    println!("wrote {}", f.display());
                }
                if summary.diverged > 0 {
                    println!("{} trajectories diverged (see reports)", summary.diverged);
                }
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            let line = serde_json::json!({
                "error": e.category.as_str(),
                "message": e.message,
            });
            eprintln!("{line}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
