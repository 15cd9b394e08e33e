use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use tlab::manifest::Manifest;
use tlab::presets::{preset, PRESET_NAMES};
use tlab::runner;
use tlab::RunError;

#[derive(Parser)]
#[command(
    name = "tlab",
    about = "Spectral laboratory for truncated Toeplitz/Laurent operators: spectra, commutator certificates, admissibility probes and transport runs"
)]
struct Cli {
    /// Output directory (overrides the manifest `out` key).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads for data-parallel loops.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Seed recorded in the resolved manifest (reserved for randomized probes).
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a manifest file.
    Run { manifest: PathBuf },
    /// Materialize a named preset manifest (and optionally run it).
    Preset {
        name: String,
        /// Write the resolved preset manifest to a file instead of running it.
        #[arg(long)]
        emit: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        configure_threads(threads);
    }
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("tlab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

#[cfg(feature = "parallel")]
fn configure_threads(threads: usize) {
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
        eprintln!("tlab: thread pool already configured: {e}");
    }
}

#[cfg(not(feature = "parallel"))]
fn configure_threads(_threads: usize) {
    eprintln!("tlab: built without the `parallel` feature; --threads has no effect");
}

fn dispatch(cli: &Cli) -> Result<(), RunError> {
    match &cli.command {
        Command::Run { manifest } => {
            let text = std::fs::read_to_string(manifest).map_err(|e| {
                RunError::Manifest(format!("cannot read {}: {e}", manifest.display()))
            })?;
            let mut man = Manifest::parse(&text)?;
            if let Some(seed) = cli.seed {
                man.seed = seed;
            }
            let outcome = runner::run(&man, cli.out.as_deref())?;
            for line in &outcome.summary {
                println!("{line}");
            }
            Ok(())
        }
        Command::Preset { name, emit } => {
            let mut man = preset(name).map_err(|_| {
                RunError::Manifest(format!(
                    "unknown preset `{name}`; available: {}",
                    PRESET_NAMES.join(", ")
                ))
            })?;
            if let Some(seed) = cli.seed {
                man.seed = seed;
            }
            match emit {
                Some(path) => {
                    std::fs::write(path, man.resolved_text()).map_err(|e| {
                        RunError::Internal(format!("cannot write {}: {e}", path.display()))
                    })?;
                    Ok(())
                }
                None => {
                    let outcome = runner::run(&man, cli.out.as_deref())?;
                    for line in &outcome.summary {
                        println!("{line}");
                    }
                    Ok(())
                }
            }
        }
    }
}
