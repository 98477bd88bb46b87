use std::path::Path;

use anyhow::Result;

use super::{averaging, envelope, simulate, stability};
use crate::config::{self, ExperimentConfig};
use crate::report::{Plot, Run};
use crate::EnvelopeArgs;

/// Settings of each figure, applied before the user's overrides.
fn figure_overrides(figure: &str) -> Vec<&'static str> {
    match figure {
        "1" => vec![
            "integration.t_end=1.5e5",
            "integration.stride=60",
            "integration.method=\"abm4\"",
        ],
        "1a" => vec!["integration.t_end=2000.0"],
        "12" => vec![
            "integration.t_end=1.5e5",
            "integration.stride=60",
            "integration.method=\"abm4\"",
            "integration.init=\"stationary\"",
        ],
        "9" | "10" | "11" => vec!["envelope.hamiltonian=\"printed\""],
        "13" => vec![
            "envelope.hamiltonian=\"printed\"",
            "integration.method=\"abm4\"",
        ],
        "21" => vec!["stability.section_q=36.0", "stability.mu=0.1"],
        "22" => vec!["averaging.horizon=100.0"],
        _ => vec![],
    }
}

fn envelope_args(portrait: bool, sweep: bool, overlay: bool, pulsations: bool) -> EnvelopeArgs {
    EnvelopeArgs {
        hamiltonian: None,
        sweep,
        portrait,
        period: false,
        overlay,
        pulsations,
    }
}

pub fn run(figure: &str, config_path: Option<&Path>, overrides: &[String]) -> Result<Run> {
    let mut all: Vec<String> = figure_overrides(figure)
        .into_iter()
        .map(String::from)
        .collect();
    all.extend(overrides.iter().cloned());
    let mut cfg = config::load(config_path, &all)?;
    cfg.output.dir = cfg.output.dir.join(format!("fig{figure}"));
    println!("figure {figure} -> {}", cfg.output.dir.display());
    match figure {
        "1" | "1a" | "12" => simulate::run(&cfg),
        "2" => {
            let mut run = Run::new("reproduce 2", &cfg)?;
            stability::surface(&cfg, &mut run)?;
            Ok(run)
        }
        "8" => averaging::run(&cfg),
        "9" => envelope::run(&cfg, &envelope_args(false, false, true, false)),
        "10" => envelope::run(&cfg, &envelope_args(true, false, false, false)),
        "11" => envelope::run(&cfg, &envelope_args(false, true, false, false)),
        "13" => envelope::run(&cfg, &envelope_args(false, false, true, true)),
        "21" => {
            let mut run = Run::new("reproduce 21", &cfg)?;
            stability::section(&cfg, &mut run)?;
            Ok(run)
        }
        "22" => integral_index(&cfg),
        other => anyhow::bail!("unknown figure `{other}`"),
    }
}

/// Envelope of the simulated run fed into the integral index.
fn integral_index(cfg: &ExperimentConfig) -> Result<Run> {
    let mut run = Run::new("reproduce 22", cfg)?;
    let (_, env) = averaging::simulate_envelope(cfg)?;
    run.table(
        "envelope",
        &averaging::envelope_table(&env),
        Some(Plot {
            title: "envelope k(tau)",
            x: "tau",
            y: &["k1", "k2"],
            style: "lines",
            extra: vec![],
            series: vec![],
        }),
    )?;
    let r: Vec<f64> = env.k.iter().map(|k| 2.0 * k.norm()).collect();
    stability::write_integral_index(cfg, &mut run, &env.tau, &r)?;
    Ok(run)
}
