use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use nsbem_cli::config;
use nsbem_cli::run::{converge, mesh_check, run, Mode, RunReport};

/// Boundary element solver for acoustic scattering by nested fluid bodies.
///
/// Worker threads can be capped with NSBEM_THREADS.
#[derive(Parser)]
#[command(name = "nsbem", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a scenario and write every requested output.
    Run {
        scenario: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        /// Override the subdivision level of every parametric surface.
        #[arg(long)]
        level: Option<u32>,
    },
    /// Compare a concentric core-shell scenario with the analytic solution.
    Validate {
        scenario: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        #[arg(long)]
        level: Option<u32>,
    },
    /// Run `validate` at several subdivision levels and tabulate the errors.
    Converge {
        scenario: PathBuf,
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        levels: Vec<u32>,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Build every surface and report mesh integrity.
    MeshCheck {
        scenario: PathBuf,
        #[arg(long)]
        level: Option<u32>,
    },
}

fn finish(report: &RunReport) -> ExitCode {
    print!("{report}");
    if report.ok() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn main_inner() -> Result<ExitCode> {
    let cli = Cli::parse();
    nsbem_cli::init_threads()?;
    match cli.command {
        Command::Run {
            scenario,
            out,
            level,
        } => {
            let f = config::load(&scenario)?;
            Ok(finish(&run(&f, &out, Mode::Run, level)?))
        }
        Command::Validate {
            scenario,
            out,
            level,
        } => {
            let f = config::load(&scenario)?;
            Ok(finish(&run(&f, &out, Mode::Validate, level)?))
        }
        Command::Converge {
            scenario,
            levels,
            out,
        } => {
            let f = config::load(&scenario)?;
            let (_, report) = converge(&f, &levels, &out)?;
            Ok(finish(&report))
        }
        Command::MeshCheck { scenario, level } => {
            let f = config::load(&scenario)?;
            let (text, ok) = mesh_check(&f, level)?;
            print!("{text}");
            Ok(if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
    }
}

fn main() -> ExitCode {
    match main_inner() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
