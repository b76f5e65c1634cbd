//! `cfs`: frequency-domain analysis of a coherent feedback squeezer.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical budget
//! exceeded, 4 unstable-plant precondition.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use cfs_core::CfsError;
use output::Format;

#[derive(Parser)]
#[command(name = "cfs", version, about = "Coherent feedback squeezer analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(clap::Args)]
struct Common {
    /// Configuration file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Table format.
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
    /// Worker threads for sweeps (0 = automatic).
    #[arg(long, default_value_t = 0)]
    workers: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Vacuum-input output spectra S_x, S_p per reflectivity.
    Spectrum(Common),
    /// Loop-gain Bode traces per reflectivity.
    Bode(Common),
    /// Nyquist verdicts and loci per reflectivity.
    Nyquist(Common),
    /// Allowable-length-mismatch feasibility map.
    Feasibility(Common),
    /// Single-pass and DOPO gain spectra (dispersive device).
    Gainspec(Common),
    /// Closed-loop sensitivity bounds.
    Sensitivity(Common),
}

type Runner = fn(&config::LoadedConfig, &std::path::Path, Format) -> anyhow::Result<()>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (common, run): (&Common, Runner) =
        match &cli.command {
            Command::Spectrum(c) => (c, commands::run_spectrum),
            Command::Bode(c) => (c, commands::run_bode),
            Command::Nyquist(c) => (c, commands::run_nyquist),
            Command::Feasibility(c) => (c, commands::run_feasibility),
            Command::Gainspec(c) => (c, commands::run_gainspec),
            Command::Sensitivity(c) => (c, commands::run_sensitivity),
        };

    if common.workers > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(common.workers)
            .build_global()
        {
            eprintln!("cfs: cannot size worker pool: {e}");
        }
    }

    let format = match common.format {
        FormatArg::Csv => Format::Csv,
        FormatArg::Json => Format::Json,
    };

    let loaded = match config::load(&common.config) {
        Ok(l) => l,
        Err(e) => {
            eprintln!("cfs: config error: {e:#}");
            return ExitCode::from(2);
        }
    };

    match run(&loaded, &common.out, format) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cfs: {e:#}");
            ExitCode::from(classify(&e))
        }
    }
}

/// Maps failures to the documented exit codes.
fn classify(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if let Some(c) = cause.downcast_ref::<CfsError>() {
            return match c {
                CfsError::RefinementBudgetExceeded { .. } | CfsError::BudgetExceeded { .. } => 3,
                CfsError::InternallyUnstablePlant { .. } => 4,
                _ => 2,
            };
        }
    }
    // feasibility cell failures surface as plain messages
    let msg = format!("{e}");
    if msg.contains("budget") {
        3
    } else {
        2
    }
}
