use std::f64::consts::{FRAC_1_SQRT_2, PI};

use anyhow::{Context, Result};
use pulsations::envelope::{
    classify, dual_period, find_equilibrium, flow_until_exit, level_set_summary, period_by_contour,
    stationary_initial_data, AveragedReduction, EnvelopeState, Equilibrium, EquilibriumKind,
    PeriodInUnits, PlanarHamiltonian, PrintedHamiltonian, PRINTED_CENTRE, REFERENCE_PERIOD,
};
use pulsations::io::Table;
use pulsations::oscillator::{default_step, slow_envelope};
use pulsations::{Method, NondimParams, OscParams};
use rayon::prelude::*;

use super::{linspace, params};
use crate::config::{ExperimentConfig, HamiltonianKind};
use crate::report::{Plot, Run};
use crate::EnvelopeArgs;

pub fn overrides(a: &EnvelopeArgs) -> Vec<String> {
    match a.hamiltonian {
        Some(HamiltonianKind::Printed) => vec!["envelope.hamiltonian=\"printed\"".into()],
        Some(HamiltonianKind::Averaged) => vec!["envelope.hamiltonian=\"averaged\"".into()],
        None => vec![],
    }
}

/// A Hamiltonian together with the conversion of its flow time.
struct Model {
    h: Box<dyn PlanarHamiltonian>,
    kind: HamiltonianKind,
    seed: (f64, f64),
    /// τ per unit of flow time.
    tau_per_unit: f64,
    time_name: &'static str,
    p: OscParams,
    np: NondimParams,
}

impl Model {
    fn new(cfg: &ExperimentConfig) -> Result<Self> {
        let (p, np) = params(cfg);
        Ok(match cfg.envelope.hamiltonian {
            HamiltonianKind::Printed => Self {
                h: Box::new(PrintedHamiltonian::new(p.a, p.big_omega)?),
                kind: HamiltonianKind::Printed,
                seed: PRINTED_CENTRE,
                tau_per_unit: np.lambda.powi(8),
                time_name: "tau_prime",
                p,
                np,
            },
            HamiltonianKind::Averaged => Self {
                h: Box::new(AveragedReduction::new(np.lambda, np.f, np.delta)?),
                kind: HamiltonianKind::Averaged,
                seed: (-FRAC_1_SQRT_2, 0.0),
                tau_per_unit: 1.0,
                time_name: "tau",
                p,
                np,
            },
        })
    }

    fn units(&self, period: f64) -> PeriodInUnits {
        PeriodInUnits::from_tau(
            period * self.tau_per_unit,
            self.np.lambda,
            self.np.varepsilon,
            self.p.big_omega,
        )
    }

    /// Physical time per unit of flow time.
    fn t_per_unit(&self) -> f64 {
        self.tau_per_unit / (self.np.varepsilon * self.np.varepsilon * self.p.big_omega)
    }
}

pub fn run(cfg: &ExperimentConfig, a: &EnvelopeArgs) -> Result<Run> {
    let mut run = Run::new("envelope", cfg)?;
    let model = Model::new(cfg)?;
    run.note(format!(
        "Hamiltonian: {:?}; flow time {}",
        model.kind, model.time_name
    ));
    let eq = equilibrium(&model, &mut run);
    let all = !(a.sweep || a.portrait || a.period || a.overlay);
    if a.portrait || all {
        portrait(cfg, &model, eq.as_ref(), &mut run)?;
    }
    if a.sweep || all {
        sweep(cfg, &model, &mut run)?;
    }
    if a.period || all {
        period(cfg, &model, eq.as_ref(), &mut run)?;
    }
    if a.overlay {
        overlay(cfg, &model, eq.as_ref(), a.pulsations, &mut run)?;
    }
    Ok(run)
}

fn equilibrium(model: &Model, run: &mut Run) -> Option<Equilibrium> {
    let h = model.h.as_ref();
    if model.kind == HamiltonianKind::Printed {
        let (c1, c2) = PRINTED_CENTRE;
        if let Ok(v) = h.value(c1, c2) {
            run.measured("H_at_printed_centre", v, Some("H(1/√2, 0)".into()));
        }
        run.measured(
            "H0_reference_level",
            1.0 / (4.0 * PI),
            Some("1/(4π)".into()),
        );
    }
    let k_stationary = model.np.varepsilon * stationary_initial_data(&model.np)[2]
        / (model.np.lambda * model.np.lambda);
    run.measured(
        "K1_of_stationary_data",
        k_stationary,
        Some("εy(0)/λ², the envelope of the stationary initial state".into()),
    );
    match find_equilibrium(h, model.seed) {
        Ok(eq) => {
            run.note(format!(
                "equilibrium ({:.9}, {:.2e}) from seed ({:.4}, {}): {:?}, Hessian det {:.6e}, linear time scale {:.6e}",
                eq.k1,
                eq.k2,
                model.seed.0,
                model.seed.1,
                eq.kind,
                eq.hessian_det(),
                eq.linear_period()
            ));
            run.measured(
                "equilibrium_hessian_det",
                eq.hessian_det(),
                Some(format!("{:?}", eq.kind)),
            );
            Some(eq)
        }
        Err(e) => {
            run.unavailable("equilibrium", e.to_string(), true);
            None
        }
    }
}

fn flow_step(char_time: f64, horizon: f64) -> f64 {
    (char_time / 1000.0).min(horizon / 2000.0)
}

fn portrait(
    cfg: &ExperimentConfig,
    model: &Model,
    eq: Option<&Equilibrium>,
    run: &mut Run,
) -> Result<()> {
    let Some(eq) = eq else {
        run.note("no equilibrium: phase portrait skipped");
        return Ok(());
    };
    let h = model.h.as_ref();
    let ec = &cfg.envelope;
    let char_time = eq.linear_period();
    let horizon = ec.portrait_periods * char_time;
    let dt = flow_step(char_time, horizon);

    let mut starts = vec![(eq.k1, eq.k2)];
    for &r in &ec.portrait_radii {
        starts.extend([
            (eq.k1 + r, eq.k2),
            (eq.k1 - r, eq.k2),
            (eq.k1, eq.k2 + r),
            (eq.k1, eq.k2 - r),
        ]);
    }
    let runs: Vec<_> = starts
        .par_iter()
        .map(|&(k1, k2)| {
            let init = EnvelopeState::new(k1, k2)?;
            flow_until_exit(h, init, horizon, dt)
        })
        .collect();

    let mut table = Table::new(&["orbit", model.time_name, "K1", "K2", "H"]);
    let (mut drift, mut exits, mut skipped) = (0.0f64, 0usize, Vec::new());
    for (i, (r, start)) in runs.into_iter().zip(&starts).enumerate() {
        match r {
            Ok((traj, exit)) => {
                if i == 0 {
                    run.at_most(
                        "equilibrium_displacement",
                        Some(traj.max_displacement()),
                        1e-9,
                        true,
                    );
                }
                drift = drift.max(traj.max_relative_drift());
                exits += usize::from(exit.is_some());
                for j in 0..traj.len() {
                    table.push(vec![i as f64, traj.t[j], traj.k1[j], traj.k2[j], traj.h[j]]);
                }
            }
            Err(e) => skipped.push(format!("({:.3}, {:.3}): {e}", start.0, start.1)),
        }
    }
    run.note(format!(
        "{} flows over {horizon:.4e} {} (step {dt:.3e}); {exits} reached the disk boundary",
        starts.len() - skipped.len(),
        model.time_name
    ));
    if !skipped.is_empty() {
        run.note(format!(
            "starts outside the domain of H: {}",
            skipped.join("; ")
        ));
    }
    run.at_most("max_relative_H_drift", Some(drift), ec.max_h_drift, true);
    run.table(
        "portrait",
        &table,
        Some(Plot {
            title: "phase portrait",
            x: "K1",
            y: &["K2"],
            style: "dots",
            extra: vec!["set size ratio -1".into()],
            series: vec![],
        }),
    )?;

    // vector field on a grid around the equilibrium
    let w = ec.field_half_width;
    let mut field = Table::new(&["K1", "K2", "dK1", "dK2"]);
    for k1 in linspace(eq.k1 - w, eq.k1 + w, ec.field_points) {
        for k2 in linspace(eq.k2 - w, eq.k2 + w, ec.field_points) {
            if let Ok((d1, d2)) = h.vector_field(k1, k2) {
                field.push(vec![k1, k2, d1, d2]);
            }
        }
    }
    run.table("vector_field", &field, None)?;
    run.script(
        "vector_field",
        "set datafile separator ','\nset size ratio -1\n\
         plot 'vector_field.csv' using \"K1\":\"K2\":(0.02*$3/sqrt($3**2+$4**2)):(0.02*$4/sqrt($3**2+$4**2)) with vectors notitle\n",
    )?;
    Ok(())
}

fn sweep(cfg: &ExperimentConfig, model: &Model, run: &mut Run) -> Result<()> {
    let ec = &cfg.envelope;
    let (p, np) = (model.p, model.np);
    let mut levels = linspace(ec.h0_min, ec.h0_max, ec.h0_count);
    let marker = 1.0 / (4.0 * PI);
    if !levels.iter().any(|v| (v - marker).abs() < 1e-12)
        && (ec.h0_min..=ec.h0_max).contains(&marker)
    {
        levels.push(marker);
        levels.sort_by(f64::total_cmp);
    }
    let h = model.h.as_ref();
    let rows: Vec<_> = levels
        .par_iter()
        .map(|&h0| {
            level_set_summary(
                h,
                h0,
                p.a,
                p.big_omega,
                np.lambda,
                np.varepsilon,
                model.seed,
            )
        })
        .collect();
    let mut table = Table::new(&["H0", "r_minus", "r_plus", "T_tau_prime", "T_physical"]);
    let mut no_period = None;
    for s in &rows {
        // the summary reports the period in the flow time of `h`
        let period = s.period_tau_prime.map(|t| model.units(t));
        table.push_optional(vec![
            Some(s.h0),
            s.r_minus,
            s.r_plus,
            period.as_ref().map(|u| u.tau_prime),
            period.as_ref().map(|u| u.t),
        ]);
        if no_period.is_none() {
            no_period = s.period_error.clone();
        }
    }
    let feasible = rows.iter().filter(|s| s.feasible).count();
    run.note(format!(
        "{} levels, {feasible} with real amplitude roots",
        rows.len()
    ));
    if let Some(e) = no_period {
        run.note(format!("periods unavailable for some levels: {e}"));
    }
    if let Some(s) = rows.iter().find(|s| (s.h0 - marker).abs() < 1e-12) {
        run.relative("r_plus_at_quarter_pi_inverse", s.r_plus, 1.0, 1e-12, false);
        run.at_most(
            "abs_r_minus_at_quarter_pi_inverse",
            s.r_minus.map(f64::abs),
            1e-12,
            false,
        );
        if let Some(y) = s.max_y_estimate {
            run.measured("max_y_estimate", y, Some("(λ²/ε) max|r±|".into()));
        }
    }
    run.table(
        "level_sweep",
        &table,
        Some(Plot {
            title: "amplitude roots",
            x: "H0",
            y: &["r_minus", "r_plus"],
            style: "lines",
            extra: vec![format!(
                "set arrow from {marker}, graph 0 to {marker}, graph 1 nohead dt 2"
            )],
            series: vec![],
        }),
    )?;
    Ok(())
}

fn period(
    cfg: &ExperimentConfig,
    model: &Model,
    eq: Option<&Equilibrium>,
    run: &mut Run,
) -> Result<()> {
    let Some(eq) = eq else {
        run.unavailable("period_dual_agreement", "no equilibrium".into(), true);
        return Ok(());
    };
    let h = model.h.as_ref();
    let ec = &cfg.envelope;
    // a moderate orbit, 0.04 from the equilibrium towards the origin
    let (k1, k2) = ec
        .period_start
        .map_or((eq.k1 - 0.04 * eq.k1.signum(), eq.k2), |[a, b]| (a, b));
    let start = EnvelopeState::new(k1, k2).context("period start outside the domain")?;
    if eq.kind != EquilibriumKind::Centre {
        run.note(format!(
            "the equilibrium is a {:?}; orbits about it need not close",
            eq.kind
        ));
    }
    match dual_period(h, (eq.k1, eq.k2), start, eq.linear_period()) {
        Ok(dp) => {
            run.at_most(
                "period_relative_gap",
                Some(dp.relative_gap()),
                ec.max_period_gap,
                true,
            );
            run.at_most("period_H_drift", Some(dp.h_drift), ec.max_h_drift, true);
            let u = model.units(dp.contour);
            println!(
                "period through ({:.4}, {:.4}): τ′ = {:.6e}, τ = {:.6}, θ = {:.6e}, t = {:.6e}",
                start.k1, start.k2, u.tau_prime, u.tau, u.theta, u.t
            );
            run.measured("period_tau_prime", u.tau_prime, None);
            run.measured("period_tau", u.tau, None);
            run.measured("period_theta", u.theta, None);
            run.measured("period_t", u.t, None);
            run.note(format!(
                "variables within 5% of {REFERENCE_PERIOD}: {:?}",
                u.matches_reference
            ));
            run.json("period", &serde_json::json!({ "dual": dp, "units": u }))?;
        }
        Err(e) => run.unavailable("period_dual_agreement", e.to_string(), true),
    }
    if eq.kind == EquilibriumKind::Centre {
        let small = EnvelopeState::new(eq.k1 - 1e-3, eq.k2)?;
        match dual_period(h, (eq.k1, eq.k2), small, eq.linear_period()) {
            Ok(dp) => run.relative(
                "small_orbit_period_vs_hessian",
                Some(dp.contour),
                eq.linear_period(),
                0.02,
                false,
            ),
            Err(e) => run.unavailable("small_orbit_period_vs_hessian", e.to_string(), false),
        }
        // the orbit of the rest state grazes |K| = 1, where only the contour integral is reliable
        let rest = EnvelopeState::new(0.01 * eq.k1.signum(), 0.0)?;
        match period_by_contour(h, (eq.k1, eq.k2), rest, 4096) {
            Ok(p) => {
                let u = model.units(p);
                run.note(format!(
                    "orbit through K = ({:.2}, 0), contour only: τ′ = {:.6e}, τ = {:.2}, θ = {:.6e}, t = {:.6e}; within 5% of {REFERENCE_PERIOD}: {:?}",
                    rest.k1, u.tau_prime, u.tau, u.theta, u.t, u.matches_reference
                ));
                run.measured("rest_orbit_period_tau", u.tau, None);
            }
            Err(e) => run.note(format!("no contour period through the rest state: {e}")),
        }
    }
    Ok(())
}

fn overlay(
    cfg: &ExperimentConfig,
    model: &Model,
    eq: Option<&Equilibrium>,
    pulsations: bool,
    run: &mut Run,
) -> Result<()> {
    let (p, np) = (model.p, model.np);
    let ec = &cfg.envelope;
    let t_end = ec.overlay_t_end;
    let h_sim = cfg.integration.step.unwrap_or_else(|| default_step(&p));
    let method = cfg.integration.method;
    let sim = slow_envelope(&p, &[0.0; 4], t_end, h_sim, method)
        .context("simulation from rest failed")?;
    let mut table = Table::new(&["t", "y_envelope"]);
    for (t, v) in &sim {
        table.push(vec![*t, *v]);
    }
    run.table("simulated_envelope", &table, None)?;
    if pulsations {
        write_pulsations(&p, t_end, h_sim, method, run)?;
    }

    let h = model.h.as_ref();
    let horizon = t_end / model.t_per_unit();
    let char_time = eq.map_or(horizon / 1000.0, |e| e.linear_period());
    // the rest-state orbit grazes the singular rim |K| = 1
    let dt = flow_step(char_time, horizon).min(horizon / 3e5);
    let [k1, k2] = ec.overlay_start;
    let init = EnvelopeState::new(k1, k2)?;
    let scale = np.lambda * np.lambda / np.varepsilon;
    let mut flow = Table::new(&["t", "K1", "K2", "y_envelope"]);
    match flow_until_exit(h, init, horizon, dt) {
        Ok((traj, exit)) => {
            let every = (traj.len() / 5000).max(1);
            for j in (0..traj.len()).filter(|j| j % every == 0 || j + 1 == traj.len()) {
                let (a, b) = (traj.k1[j], traj.k2[j]);
                flow.push(vec![
                    traj.t[j] * model.t_per_unit(),
                    a,
                    b,
                    scale * a.hypot(b),
                ]);
            }
            run.at_most(
                "overlay_H_drift",
                Some(traj.max_relative_drift()),
                ec.max_h_drift,
                true,
            );
            if let Some(t) = exit {
                run.note(format!(
                    "envelope flow reached the disk boundary at {} = {t:.4e} (t = {:.4e})",
                    model.time_name,
                    t * model.t_per_unit()
                ));
            }
            let peak = traj
                .k1
                .iter()
                .zip(&traj.k2)
                .map(|(a, b)| a.hypot(*b))
                .fold(0.0, f64::max);
            run.measured(
                "flow_envelope_max",
                scale * peak,
                Some("λ²/ε · max|K|".into()),
            );
        }
        Err(e) => run.unavailable("overlay_flow", e.to_string(), true),
    }
    let sim_max = sim.iter().map(|e| e.1).fold(0.0, f64::max);
    run.relative("simulated_envelope_max", Some(sim_max), scale, 0.15, false);
    match classify(h, 0.0, 0.0) {
        Ok(c) => run.note(format!(
            "K = 0 classified as {:?} (Hessian det {:.4e})",
            c.kind,
            c.hessian_det()
        )),
        Err(e) => run.note(format!("K = 0 cannot be classified: {e}")),
    }
    run.table("flow_envelope", &flow, None)?;
    // the reference period read in τ, converted to t
    let t_ref = REFERENCE_PERIOD / (np.varepsilon * np.varepsilon * p.big_omega);
    run.script(
        "overlay",
        &format!(
            "set datafile separator ','\nset xlabel \"t\"\n\
             set arrow from {t_ref}, graph 0 to {t_ref}, graph 1 nohead dt 2\n\
             set arrow from graph 0, first {scale} to graph 1, first {scale} nohead dt 3\n\
             plot 'simulated_envelope.csv' using \"t\":\"y_envelope\" with lines title \"simulation\", \\\n     \
             'flow_envelope.csv' using \"t\":\"y_envelope\" with lines dt 2 title \"envelope flow\"{}\n",
            if pulsations {
                ", \\\n     'pulsations.csv' using \"t\":\"y\" with lines lc rgb \"gray\" title \"y\""
            } else {
                ""
            }
        ),
    )?;
    Ok(())
}

/// `t,y` at about twelve samples per period of y.
fn write_pulsations(
    p: &OscParams,
    t_end: f64,
    h: f64,
    method: Method,
    run: &mut Run,
) -> Result<()> {
    let stride = ((2.0 * PI / p.big_omega) / (12.0 * h)).floor().max(1.0) as usize;
    let ts = pulsations::oscillator::simulate_strided(p, &[0.0; 4], t_end, h, method, stride)?;
    let mut t = Table::new(&["t", "y"]);
    for i in 0..ts.len() {
        t.push(vec![ts.time(i), ts.row(i)[2]]);
    }
    run.table("pulsations", &t, None)
}
