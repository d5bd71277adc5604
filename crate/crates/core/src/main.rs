use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ac_diamond::commands::{self, Output, SweepOptions};
use ac_diamond::config::ExperimentConfig;
use ac_diamond::Error;

/// Aharonov-Casher phase simulator for an NV centre on a spinning disk.
#[derive(Parser, Debug)]
#[command(name = "ac-diamond", version, about)]
struct Cli {
    /// Configuration file (`key = value` lines); defaults apply otherwise.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Write CSV here; the summary then goes to stdout.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Overrides the configured Monte Carlo seed.
    #[arg(long, global = true, value_name = "INT")]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Closed-form total A-C phase.
    Phase,
    /// Fluorescence signal from zero field to E0.
    Sweep {
        /// Number of grid points.
        #[arg(long, default_value_t = commands::DEFAULT_GRID)]
        grid: usize,
        /// Set E0 so that the run accumulates this phase (rad).
        #[arg(long, value_name = "RAD")]
        phi_max: Option<f64>,
        /// Also write a gnuplot script for the CSV.
        #[arg(long, value_name = "PATH")]
        plot: Option<PathBuf>,
    },
    /// Propagator diagnostics along a half turn.
    Holonomy {
        /// Single step count instead of the default ladder.
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Analytic sensitivity and averaging time.
    Sensitivity,
    /// Photon-counting Monte Carlo of the phase estimate.
    Montecarlo {
        /// Single shot count instead of the default ladder.
        #[arg(long)]
        shots: Option<u64>,
    },
    /// Ground-state Stark shift and adiabaticity.
    Stark,
    /// Residual phase under constant detunings.
    EchoCheck,
}

fn run(cli: &Cli) -> Result<(), Error> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let output: Output = match &cli.command {
        Command::Phase => commands::phase(&cfg)?,
        Command::Sweep { grid, phi_max, plot } => {
            let out = commands::sweep(&cfg, &SweepOptions { grid: *grid, phi_max: *phi_max })?;
            if let Some(plot) = plot {
                let data = cli
                    .out
                    .as_ref()
                    .map(|p| p.display().to_string())
                    .unwrap_or_else(|| "sweep.csv".to_string());
                fs::write(plot, commands::gnuplot_script(&data))?;
            }
            out
        }
        Command::Holonomy { steps } => commands::holonomy(&cfg, *steps)?,
        Command::Sensitivity => commands::sensitivity(&cfg)?,
        Command::Montecarlo { shots } => commands::montecarlo(&cfg, *shots)?,
        Command::Stark => commands::stark(&cfg)?,
        Command::EchoCheck => commands::echo_check(&cfg)?,
    };
    match &cli.out {
        Some(path) => {
            fs::write(path, &output.csv)?;
            std::io::stdout().write_all(output.summary.as_bytes())?;
        }
        None => {
            std::io::stdout().write_all(output.csv.as_bytes())?;
            std::io::stderr().write_all(output.summary.as_bytes())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
