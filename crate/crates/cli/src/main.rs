//! `qsthermo` command-line driver.

mod commands;
mod config;
mod error;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::{RunConfig, SweepAxis};
use crate::error::CliError;

#[derive(Parser)]
#[command(name = "qsthermo", version, about = "Damped quantum oscillator thermodynamics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration; omitted keys take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// RNG seed for classical runs.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Model tag, e.g. full-hermitian or caldeira-leggett.
    #[arg(long, global = true)]
    model: Option<String>,
    #[arg(long, global = true)]
    dt: Option<f64>,
    #[arg(long, global = true)]
    steps: Option<usize>,
    #[arg(long, global = true)]
    dim: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Propagate one density matrix and write its thermodynamic record.
    QuantumRun,
    /// Tabulate Lindblad-form conditions and Choi certificates over a grid.
    LindbladCheck,
    /// Compare the mapped optical master equation with the full Hermitian model.
    QomeCompare,
    /// Simulate the classical Langevin ensemble.
    ClassicalRun,
    /// Run quantum-run over one axis of models or initial conditions.
    Sweep {
        #[arg(long, value_enum)]
        axis: Option<SweepAxis>,
    },
    /// Write the friction operators as CSV.
    FrictionDump,
}

fn load_config(common: &Common) -> Result<RunConfig, CliError> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            RunConfig::from_json(&text)?
        }
        None => RunConfig::default(),
    };
    if let Some(out) = &common.out {
        cfg.output = Some(out.clone());
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(model) = &common.model {
        cfg.model = model.clone();
    }
    if let Some(dt) = common.dt {
        cfg.dt = dt;
    }
    if let Some(steps) = common.steps {
        cfg.steps = steps;
    }
    if let Some(dim) = common.dim {
        cfg.dim = dim;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = load_config(&cli.common)?;
    let dir = commands::output_dir(&cfg);
    match cli.command {
        Command::QuantumRun => commands::quantum_run(&cfg, &dir)?.print(&cfg),
        Command::LindbladCheck => {
            commands::lindblad_check(&cfg, &dir)?;
        }
        Command::QomeCompare => {
            commands::qome_compare(&cfg)?;
        }
        Command::ClassicalRun => {
            commands::classical_run(&cfg, &dir)?;
        }
        Command::Sweep { axis } => {
            if axis.is_some() {
                cfg.sweep.axis = axis;
            }
            commands::sweep(&cfg, &dir)?;
        }
        Command::FrictionDump => {
            commands::friction_dump(&cfg, &dir)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    qsthermo::linalg::use_sequential_kernels();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qsthermo: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
