#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use crate::config::HamiltonianKind;

/// Experiments on a resonantly forced pair of coupled oscillators: direct
/// simulation, Mathieu stability, the averaging check and the envelope
/// Hamiltonian. Every run writes CSV data, gnuplot scripts and `summary.json`.
#[derive(Debug, Parser)]
#[command(name = "pulsations", version)]
struct Cli {
    /// TOML configuration file.
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,

    /// Override a configuration key, e.g. `--set oscillator.a=0.5`. Repeatable.
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE", global = true)]
    set: Vec<String>,

    /// Output directory (same as `--set output.dir=...`).
    #[arg(short, long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate the coupled system and fit the initial envelope slope.
    Simulate(SimulateArgs),
    /// Floquet exponents of the Mathieu equation: surface, section, integral index.
    Stability(StabilityArgs),
    /// Compare both sides of the averaged envelope equation along a simulation.
    VerifyAveraging(AveragingArgs),
    /// Envelope Hamiltonian: phase portrait, amplitude roots, orbit period.
    Envelope(EnvelopeArgs),
    /// Produce the data behind one figure with its reference settings.
    Reproduce(ReproduceArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    step: Option<f64>,
    /// `rk4` or `abm4`.
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    stride: Option<usize>,
    /// Start from the stationary envelope state instead of rest.
    #[arg(long)]
    stationary: bool,
}

#[derive(Debug, Clone, Default, Args)]
pub struct StabilityArgs {
    /// Re λ₁ on the (Q, R) grid.
    #[arg(long)]
    surface: bool,
    /// Fixed-Q section, given as `Q=36` or `36`; the configured Q when no value follows.
    #[arg(long, num_args = 0..=1, default_missing_value = "", value_name = "Q")]
    section: Option<String>,
    /// Damping μ for the dissipation level 2μ and the Q shift.
    #[arg(long)]
    mu: Option<f64>,
    /// Integral index Λ(τ) from an envelope CSV with `tau` and either `r` or `k1,k2`.
    #[arg(long, value_name = "FILE")]
    integral_index: Option<PathBuf>,
    #[arg(long)]
    grid_step: Option<f64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct AveragingArgs {
    /// Horizon in units of ε⁻².
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long)]
    samples_per_period: Option<usize>,
    /// Start from the stationary envelope state instead of rest.
    #[arg(long)]
    stationary: bool,
}

#[derive(Debug, Clone, Default, Args)]
pub struct EnvelopeArgs {
    #[arg(long, value_enum)]
    hamiltonian: Option<HamiltonianKind>,
    /// Amplitude roots and periods over a range of H₀.
    #[arg(long)]
    sweep: bool,
    /// Flows from starts around the equilibrium and the vector field nearby.
    #[arg(long)]
    portrait: bool,
    /// Orbit period by flow return and by contour integral.
    #[arg(long)]
    period: bool,
    /// Simulated y envelope against the envelope flow.
    #[arg(long)]
    overlay: bool,
    /// With `--overlay`, also write the sampled y component.
    #[arg(long)]
    pulsations: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ReproduceArgs {
    #[arg(long, value_parser = ["1", "1a", "2", "8", "9", "10", "11", "12", "13", "21", "22"])]
    figure: String,
}

fn run(cli: Cli) -> Result<report::Run> {
    let mut overrides = cli.set.clone();
    if let Some(out) = &cli.out {
        overrides.push(format!("output.dir={:?}", out.display().to_string()));
    }
    match cli.command {
        Command::Simulate(a) => {
            overrides.extend(commands::simulate::overrides(&a));
            commands::simulate::run(&config::load(cli.config.as_deref(), &overrides)?)
        }
        Command::Stability(a) => {
            overrides.extend(commands::stability::overrides(&a)?);
            commands::stability::run(&config::load(cli.config.as_deref(), &overrides)?, &a)
        }
        Command::VerifyAveraging(a) => {
            overrides.extend(commands::averaging::overrides(&a));
            commands::averaging::run(&config::load(cli.config.as_deref(), &overrides)?)
        }
        Command::Envelope(a) => {
            overrides.extend(commands::envelope::overrides(&a));
            commands::envelope::run(&config::load(cli.config.as_deref(), &overrides)?, &a)
        }
        Command::Reproduce(a) => {
            commands::reproduce::run(&a.figure, cli.config.as_deref(), &overrides)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(run) => {
            let failed = run.failed_gates().to_vec();
            let dir = run.dir().to_path_buf();
            match run.finish() {
                Ok(true) => ExitCode::SUCCESS,
                Ok(false) => {
                    let err = serde_json::json!({
                        "status": "gate_failed",
                        "failed_gates": failed,
                        "summary": dir.join("summary.json"),
                    });
                    eprintln!("{err}");
                    ExitCode::from(2)
                }
                Err(e) => error_exit(e),
            }
        }
        Err(e) => error_exit(e),
    }
}

fn error_exit(e: anyhow::Error) -> ExitCode {
    let err = serde_json::json!({
        "status": "error",
        "error": format!("{e:#}"),
    });
    eprintln!("{err}");
    ExitCode::FAILURE
}
