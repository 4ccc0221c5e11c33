use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lpdelay::report::to_json_string;
use lpdelay::spectral::CoefficientVariant;
use lpdelay_cli::analyze::{cmd_analyze, AnalyzeArgs};
use lpdelay_cli::config::RunConfig;
use lpdelay_cli::simulate::cmd_simulate;
use lpdelay_cli::sweep::{sweep, tau_grid, to_csv};
use lpdelay_cli::verify::{run_battery, Fault};
use lpdelay_cli::{analyze, verify, CliError};

/// Delay differential equations with Lie–Poisson structure.
#[derive(Debug, Parser)]
#[command(name = "lpdelay", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate one configured run; writes a trajectory CSV and a JSON summary.
    Simulate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Stability and Hopf analysis of the rigid body with delayed damping.
    Analyze {
        #[arg(long = "I1")]
        i1: f64,
        #[arg(long = "I2")]
        i2: f64,
        #[arg(long = "I3")]
        i3: f64,
        #[arg(long, allow_hyphen_values = true)]
        alpha: f64,
        #[arg(long, allow_hyphen_values = true)]
        m: f64,
        /// `determinant` (default) or `paper`.
        #[arg(long, default_value = "determinant")]
        variant: String,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Integrate the configured run over a grid of delays; emits CSV.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        tau_min: f64,
        #[arg(long)]
        tau_max: f64,
        #[arg(long)]
        points: usize,
        /// Worker threads (default: available parallelism).
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run the invariant battery of every module; emits JSON.
    Verify {
        /// Deliberately break something to exercise the harness (`structure-constant`).
        #[arg(long)]
        fault_inject: Option<String>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn emit(output: Option<&Path>, text: &str) -> Result<(), CliError> {
    match output {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Io(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate { config } => {
            let s = cmd_simulate(&config)?;
            if s.step.adjusted {
                eprintln!("step used: {}", s.step.used.0);
            }
            Ok(())
        }
        Command::Analyze { i1, i2, i3, alpha, m, variant, output } => {
            let variant: CoefficientVariant = variant
                .parse()
                .map_err(|_| CliError::config(format!("--variant: expected determinant or paper, got `{variant}`")))?;
            let report = cmd_analyze(&AnalyzeArgs { inertia: [i1, i2, i3], alpha, m, variant })?;
            emit(output.as_deref(), &to_json_string(&report))?;
            analyze::outcome(&report)
        }
        Command::Sweep { config, tau_min, tau_max, points, threads, output } => {
            let cfg = RunConfig::load(&config)?;
            let taus = tau_grid(tau_min, tau_max, points)?;
            let rows = sweep(&cfg, &taus, threads)?;
            for r in rows.iter().filter(|r| !r.is_ok()) {
                eprintln!("tau = {}: {}", r.tau, r.status);
            }
            emit(output.as_deref(), &to_csv(&rows))
        }
        Command::Verify { fault_inject, output } => {
            let fault = fault_inject.as_deref().map(str::parse::<Fault>).transpose()?;
            let report = run_battery(fault);
            emit(output.as_deref(), &to_json_string(&report))?;
            verify::outcome(&report)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
