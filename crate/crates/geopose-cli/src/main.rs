//! `geopose` — batch evaluation, verification, and benchmarks for the
//! camera-centric multi-person pose library.
//!
//! Exit codes: 0 success, 1 verification failure or runtime error,
//! 2 usage or input error.

mod chart;
mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::ConfigFile;

#[derive(Parser)]
#[command(
    name = "geopose",
    version,
    about = "Camera-centric multi-person 3D pose: evaluation, verification, benchmarks"
)]
struct Cli {
    /// Flat `key = value` config file; command-line flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic scene fixtures (and optionally dense-map tensors).
    SynthGen(commands::synthgen::SynthGenArgs),
    /// Run the full pipeline over scene fixtures or external dense maps and
    /// write CSV + text reports.
    Eval(commands::eval::EvalArgs),
    /// Compare the analytic depth gradient against central finite differences.
    Gradcheck(commands::verify::GradcheckArgs),
    /// Compare the closed-form depth against the numerical argmin oracle.
    Oracle(commands::verify::OracleArgs),
    /// Depth-fusion benchmark: regression vs geometry vs fused error.
    Bench(commands::bench::BenchArgs),
    /// Emit benchmark figures as SVG images with CSV twins.
    Plot(commands::bench::PlotArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match &cli.config {
        Some(path) => match ConfigFile::load(path) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e:#}");
                return ExitCode::from(2);
            }
        },
        None => ConfigFile::default(),
    };
    let result = match cli.command {
        Command::SynthGen(args) => commands::synthgen::run(args, &cfg),
        Command::Eval(args) => commands::eval::run(args, &cfg),
        Command::Gradcheck(args) => commands::verify::run_gradcheck(args, &cfg),
        Command::Oracle(args) => commands::verify::run_oracle(args, &cfg),
        Command::Bench(args) => commands::bench::run_bench(args, &cfg),
        Command::Plot(args) => commands::bench::run_plot(args, &cfg),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
