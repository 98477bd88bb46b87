use std::f64::consts::{PI, SQRT_2};

use anyhow::{Context, Result};
use pulsations::io::{trajectory_table, Table};
use pulsations::oscillator::{default_step, fit_initial_slope, simulate_strided, window_maxima};

use super::{initial_state, params};
use crate::config::{ExperimentConfig, InitKind};
use crate::report::{Plot, Run};
use crate::SimulateArgs;

pub fn overrides(a: &SimulateArgs) -> Vec<String> {
    let mut o = Vec::new();
    if let Some(v) = a.t_end {
        o.push(format!("integration.t_end={v:e}"));
    }
    if let Some(v) = a.step {
        o.push(format!("integration.step={v:e}"));
    }
    if let Some(v) = &a.method {
        o.push(format!("integration.method={v:?}"));
    }
    if let Some(v) = a.stride {
        o.push(format!("integration.stride={v}"));
    }
    if a.stationary {
        o.push("integration.init=\"stationary\"".into());
    }
    o
}

pub fn run(cfg: &ExperimentConfig) -> Result<Run> {
    let mut run = Run::new("simulate", cfg)?;
    let (p, np) = params(cfg);
    let ic = &cfg.integration;
    let h = ic.step.unwrap_or_else(|| default_step(&p));
    let init = initial_state(cfg);
    let ts = simulate_strided(&p, &init, ic.t_end, h, ic.method, ic.stride)
        .context("simulation failed")?;
    run.note(format!(
        "integrated t ∈ [0, {}] with {:?}, h = {h:.4e}, {} rows kept",
        ic.t_end,
        ic.method,
        ts.len()
    ));

    run.table(
        "trajectory",
        &trajectory_table(&ts)?,
        Some(Plot {
            title: "trajectory",
            x: "t",
            y: &["y", "x"],
            style: "lines",
            extra: vec![],
            series: vec![],
        }),
    )?;

    // one window per period of y
    let window = ((2.0 * PI / p.big_omega) / ts.sample_step())
        .round()
        .max(1.0) as usize;
    let times = ts.times();
    let env = window_maxima(&times, &ts.column(2), window);
    let mut table = Table::new(&["t", "y_envelope"]);
    for (t, v) in &env {
        table.push(vec![*t, *v]);
    }

    let mut extra = vec![format!(
        "set arrow from graph 0, first {s} to graph 1, first {s} nohead dt 2",
        s = np.pulsation_scale()
    )];
    let zero_start = cfg.integration.state.is_none() && ic.init == InitKind::Zero;
    if zero_start && p.a > 0.0 {
        match fit_initial_slope(&ts, &p) {
            Ok(fit) => {
                println!(
                    "initial slope: fitted {:.6e} (|y|), {:.6e} (|εy|); formula {:.6e}; ratios {:.4} / {:.4}; best fit: {:?}",
                    fit.slope_y, fit.slope_eps_y, fit.formula, fit.ratio_y, fit.ratio_eps_y, fit.best
                );
                run.relative(
                    "initial_slope_y",
                    Some(fit.slope_y),
                    fit.formula,
                    0.1,
                    false,
                );
                run.relative(
                    "initial_slope_eps_y",
                    Some(fit.slope_eps_y),
                    fit.formula,
                    0.1,
                    false,
                );
                run.note(format!(
                    "slope window t ∈ [0, {:.1}], {} maxima; best normalization {:?}",
                    fit.window_end, fit.n_maxima, fit.best
                ));
                extra.push(format!("line(x) = {:e} * x", fit.formula));
                extra.push(format!("set xrange [0:{}]", fit.window_end));
                extra.push(format!(
                    "set yrange [0:{}]",
                    1.2 * fit.formula * fit.window_end
                ));
            }
            Err(e) => run.note(format!("no initial slope fit: {e}")),
        }
    }
    if ic.init == InitKind::Stationary && cfg.integration.state.is_none() && !env.is_empty() {
        // |εy| envelope against λ²/√2
        let target = np.lambda * np.lambda / SQRT_2;
        let worst = env
            .iter()
            .map(|(_, v)| (np.varepsilon * v - target).abs() / target)
            .fold(0.0, f64::max);
        run.at_most(
            "stationary_envelope_max_deviation",
            Some(worst),
            0.15,
            false,
        );
    }
    let series = if extra.iter().any(|l| l.starts_with("line(")) {
        vec!["line(x) title \"formula\"".to_string()]
    } else {
        vec![]
    };
    run.table(
        "envelope",
        &table,
        Some(Plot {
            title: "envelope of y",
            x: "t",
            y: &["y_envelope"],
            style: "linespoints",
            extra,
            series,
        }),
    )?;
    Ok(run)
}
