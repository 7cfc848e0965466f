use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use tnf_lab::{run_from_file, ExperimentKind, Overrides};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Kind {
    Vmc,
    Floquet,
    Pareto,
    Circuit,
}

/// Runs a configured experiment and writes its data files and manifest.
#[derive(Debug, Parser)]
#[command(name = "tnf-lab", version)]
struct Cli {
    experiment: Kind,
    /// JSON experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
    /// Worker threads; defaults to the config value, else 1.
    #[arg(long)]
    threads: Option<usize>,
    /// Overrides the seed in the config.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let kind = match cli.experiment {
        Kind::Vmc => ExperimentKind::Vmc,
        Kind::Floquet => ExperimentKind::Floquet,
        Kind::Pareto => ExperimentKind::Pareto,
        Kind::Circuit => ExperimentKind::Circuit,
    };
    let overrides = Overrides { seed: cli.seed, threads: cli.threads };
    match run_from_file(kind, &cli.config, &cli.out, &overrides) {
        Ok(m) => {
            for w in &m.warnings {
                eprintln!("warning: {w}");
            }
            println!("wrote {} files to {}", m.files.len() + 1, cli.out.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
