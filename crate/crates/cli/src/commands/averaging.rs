use std::f64::consts::PI;

use anyhow::{Context, Result};
use pulsations::averaging::{
    default_window, extract_envelope, manufactured_trajectory, residual_report_with_window,
};
use pulsations::io::Table;
use pulsations::oscillator::{simulate_nondim, state_to_theta};
use pulsations::{Complex64, EnvelopeSeries};

use super::{initial_state, params};
use crate::config::ExperimentConfig;
use crate::report::{Plot, Run};
use crate::AveragingArgs;

pub fn overrides(a: &AveragingArgs) -> Vec<String> {
    let mut o = Vec::new();
    if let Some(h) = a.horizon {
        o.push(format!("averaging.horizon={h:e}"));
    }
    if let Some(n) = a.samples_per_period {
        o.push(format!("averaging.samples_per_period={n}"));
    }
    if a.stationary {
        o.push("integration.init=\"stationary\"".into());
    }
    o
}

/// Simulates in θ over the configured horizon (whole periods) and extracts `k(τ)`.
pub fn simulate_envelope(
    cfg: &ExperimentConfig,
) -> Result<(pulsations::TimeSeries, EnvelopeSeries)> {
    let (p, np) = params(cfg);
    let av = &cfg.averaging;
    let periods = (av.horizon / (np.varepsilon * np.varepsilon) / (2.0 * PI))
        .ceil()
        .max(1.0);
    let theta_end = 2.0 * PI * periods;
    let init = state_to_theta(&initial_state(cfg), p.big_omega);
    let h = 2.0 * PI / av.samples_per_period as f64;
    let ts = simulate_nondim(&np, &init, theta_end, h, cfg.integration.method, 1)
        .context("simulation in θ failed")?;
    let env = extract_envelope(&ts, &np)?;
    Ok((ts, env))
}

pub fn envelope_table(env: &EnvelopeSeries) -> Table {
    let mut t = Table::new(&["tau", "k1", "k2"]);
    for (tau, k) in env.tau.iter().zip(&env.k) {
        t.push(vec![*tau, k.re, k.im]);
    }
    t
}

pub fn run(cfg: &ExperimentConfig) -> Result<Run> {
    let mut run = Run::new("verify-averaging", cfg)?;
    let (_, np) = params(cfg);
    let (ts, env) = simulate_envelope(cfg)?;
    run.note(format!(
        "θ ∈ [0, {:.1}] ({} periods, {} samples each)",
        ts.time(ts.len() - 1),
        env.len(),
        cfg.averaging.samples_per_period
    ));
    run.table(
        "envelope",
        &envelope_table(&env),
        Some(Plot {
            title: "envelope k(tau)",
            x: "tau",
            y: &["k1", "k2"],
            style: "lines",
            extra: vec![],
            series: vec![],
        }),
    )?;

    let window = cfg.averaging.window.unwrap_or_else(|| default_window(&np));
    let rep = residual_report_with_window(&ts, &np, window)?;
    let mut table = Table::new(&["tau", "rel_error"]);
    for (tau, e) in rep.tau.iter().zip(&rep.rel_error) {
        table.push_optional(vec![Some(*tau), *e]);
    }
    run.note(format!(
        "averaging window {window:.2} in θ; {} windows compared, {} without a defined residual",
        rep.tau.len(),
        rep.n_missing()
    ));
    match rep.median_middle_half() {
        Some(m) => run.at_most(
            "median_rel_error_middle_half",
            Some(m),
            cfg.averaging.max_median,
            true,
        ),
        None => run.note("no defined residual in the middle half (zero signal)"),
    }
    run.table(
        "residual",
        &table,
        Some(Plot {
            title: "relative residual of the averaged equation",
            x: "tau",
            y: &["rel_error"],
            style: "linespoints",
            extra: vec!["set logscale y".into()],
            series: vec![],
        }),
    )?;

    // a trajectory that satisfies the averaged equation exactly
    let (mts, _) = manufactured_trajectory(&np, 0.7, 0.4, Complex64::new(1.0, 0.5), 64, 40)?;
    let mrep = residual_report_with_window(&mts, &np, window.min(2.0 * PI * 8.0))?;
    let worst = mrep
        .rel_error
        .iter()
        .flatten()
        .cloned()
        .fold(None, |a: Option<f64>, b| Some(a.map_or(b, |a| a.max(b))));
    run.at_most(
        "manufactured_max_rel_error",
        worst,
        cfg.averaging.max_manufactured,
        true,
    );
    Ok(run)
}
