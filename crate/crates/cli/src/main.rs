use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use retrospin_cli::{run, CommandKind, Invocation};

/// Simulate pulsed QND spin squeezing with forward and retrodicted
/// estimation, and emit reproducible CSV/JSON/SVG artifacts.
#[derive(Parser)]
#[command(name = "retrospin", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Configuration file; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed; every sampled number derives from it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Output directory for all artifacts.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Worker threads (default: all cores). The RETROSPIN_THREADS
    /// environment variable overrides the default; this flag overrides both.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Reject unknown configuration keys instead of warning.
    #[arg(long, global = true)]
    strict: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run one two- or three-pulse squeezing simulation.
    Simulate,
    /// Sweep squeezing and retrodiction durations; emit CSV and a heatmap.
    Sweep,
    /// Compare the two schemes at matched total durations.
    Compare,
    /// Cross-check closed forms against the grid and Monte Carlo oracles.
    OracleCheck,
    /// Stroboscopic back-action evasion versus continuous probing.
    BaeDemo,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let command = match cli.command {
        Command::Simulate => CommandKind::Simulate,
        Command::Sweep => CommandKind::Sweep,
        Command::Compare => CommandKind::Compare,
        Command::OracleCheck => CommandKind::OracleCheck,
        Command::BaeDemo => CommandKind::BaeDemo,
    };
    let threads = cli.threads.or_else(|| {
        std::env::var("RETROSPIN_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    let invocation = Invocation {
        command,
        config_path: cli.config,
        seed: cli.seed,
        out_dir: cli.out,
        threads,
        strict: cli.strict,
    };
    match run(&invocation) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
