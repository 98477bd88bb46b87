use std::path::Path;

use anyhow::{bail, Context, Result};
use pulsations::floquet::{
    damped_multiplicator, integral_index, stability_section, stability_surface,
};
use pulsations::io::Table;

use super::params;
use crate::config::ExperimentConfig;
use crate::report::{Plot, Run};
use crate::StabilityArgs;

/// Parses `Q=36`, `q=36` or `36`.
fn parse_section(s: &str) -> Result<Option<f64>> {
    let v = s.trim();
    if v.is_empty() {
        return Ok(None);
    }
    let v = v
        .strip_prefix("Q=")
        .or_else(|| v.strip_prefix("q="))
        .unwrap_or(v);
    Ok(Some(
        v.trim()
            .parse()
            .with_context(|| format!("bad section value `{s}`"))?,
    ))
}

pub fn overrides(a: &StabilityArgs) -> Result<Vec<String>> {
    let mut o = Vec::new();
    if let Some(q) = a
        .section
        .as_deref()
        .map(parse_section)
        .transpose()?
        .flatten()
    {
        o.push(format!("stability.section_q={q:e}"));
    }
    if let Some(mu) = a.mu {
        o.push(format!("stability.mu={mu:e}"));
    }
    if let Some(s) = a.grid_step {
        o.push(format!("stability.grid_step={s:e}"));
    }
    Ok(o)
}

pub fn run(cfg: &ExperimentConfig, a: &StabilityArgs) -> Result<Run> {
    let mut run = Run::new("stability", cfg)?;
    let any = a.surface || a.section.is_some() || a.integral_index.is_some();
    if a.surface || !any {
        surface(cfg, &mut run)?;
    }
    if a.section.is_some() {
        section(cfg, &mut run)?;
    }
    if let Some(file) = &a.integral_index {
        index_from_file(cfg, &mut run, file)?;
    }
    Ok(run)
}

pub fn surface(cfg: &ExperimentConfig, run: &mut Run) -> Result<()> {
    let s = &cfg.stability;
    let started = std::time::Instant::now();
    let surf = stability_surface((s.q_min, s.q_max), (s.r_min, s.r_max), s.grid_step, s.h)?;
    run.note(format!(
        "{} × {} monodromies in {:.1} s",
        surf.q_values.len(),
        surf.r_values.len(),
        started.elapsed().as_secs_f64()
    ));
    let mut table = Table::new(&["Q", "R", "re_lambda1"]);
    let mut mismatched = 0usize;
    let mut zero_column_max = 0.0f64;
    for (iq, &q) in surf.q_values.iter().enumerate() {
        for (ir, &r) in surf.r_values.iter().enumerate() {
            let c = surf.cell(iq, ir);
            table.push(vec![q, r, c.re_lambda1]);
            if (c.trace.abs() <= 2.0) != (c.re_lambda1 == 0.0) {
                mismatched += 1;
            }
            if r == 0.0 && q > 0.0 {
                zero_column_max = zero_column_max.max(c.re_lambda1.abs());
            }
        }
    }
    run.at_most(
        "max_det_residual",
        Some(surf.max_det_residual()),
        s.max_det_residual,
        true,
    );
    run.at_most(
        "trace_dichotomy_violations",
        Some(mismatched as f64),
        0.0,
        true,
    );
    if s.r_min <= 0.0 && s.r_max >= 0.0 {
        run.at_most("max_abs_re_lambda1_at_R0", Some(zero_column_max), 0.0, true);
    }
    let stable = surf.cells.iter().filter(|c| c.re_lambda1 == 0.0).count();
    run.note(format!("{stable} of {} cells stable", surf.cells.len()));
    run.table("surface", &table, None)?;
    run.script(
        "surface",
        "set datafile separator ','\n\
         set title \"Re lambda_1(Q, R)\"\n\
         set xlabel \"Q\"\nset ylabel \"R\"\n\
         set view map\n\
         splot 'surface.csv' using \"Q\":\"R\":\"re_lambda1\" with points pointtype 5 pointsize 0.3 palette notitle\n",
    )?;
    Ok(())
}

pub fn section(cfg: &ExperimentConfig, run: &mut Run) -> Result<()> {
    let s = &cfg.stability;
    let mu = cfg.mu();
    let sec = stability_section(s.section_q, (s.r_min, s.r_max), s.grid_step, mu, s.h)?;
    let mut table = Table::new(&["R", "re_lambda1", "2*mu"]);
    for p in &sec.points {
        table.push(vec![p.r, p.re_lambda1, sec.two_mu]);
    }
    let crossings = sec.threshold_crossings();
    run.note(format!(
        "Q = {}: Re λ₁ crosses 2μ = {} at R ≈ {:?}",
        sec.q,
        sec.two_mu,
        crossings
            .iter()
            .map(|c| format!("{c:.3}"))
            .collect::<Vec<_>>()
    ));
    // the damped multiplicator is 1 where Re λ₁ = 2μ; q = Q + 4μ²
    for r in crossings.iter().take(4) {
        let m = damped_multiplicator(sec.q + 4.0 * mu * mu, *r, mu, s.h)?;
        run.relative(
            &format!("multiplicator_at_R_{r:.3}"),
            Some(m),
            1.0,
            0.05,
            false,
        );
    }
    run.table(
        "section",
        &table,
        Some(Plot {
            title: &format!("Re lambda_1 at Q = {}", sec.q),
            x: "R",
            y: &["re_lambda1", "2*mu"],
            style: "lines",
            extra: vec![],
            series: vec![],
        }),
    )?;
    Ok(())
}

/// Reads `tau` and either `r` or `k1,k2` (then `r = 2|k|`).
fn read_modulation(file: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let t = Table::read(file).with_context(|| format!("reading {}", file.display()))?;
    let tau = t.column("tau")?;
    let r = if t.column_index("r").is_some() {
        t.column("r")?
    } else if t.column_index("k1").is_some() && t.column_index("k2").is_some() {
        let (k1, k2) = (t.column("k1")?, t.column("k2")?);
        k1.iter().zip(&k2).map(|(a, b)| 2.0 * a.hypot(*b)).collect()
    } else {
        bail!("{} has neither an `r` column nor `k1,k2`", file.display());
    };
    if tau.len() != r.len() {
        bail!(
            "{}: `tau` and the modulation have missing entries",
            file.display()
        );
    }
    Ok((tau, r))
}

fn index_from_file(cfg: &ExperimentConfig, run: &mut Run, file: &Path) -> Result<()> {
    let (tau, r) = read_modulation(file)?;
    write_integral_index(cfg, run, &tau, &r)
}

pub fn write_integral_index(
    cfg: &ExperimentConfig,
    run: &mut Run,
    tau: &[f64],
    r: &[f64],
) -> Result<()> {
    let (_, np) = params(cfg);
    let q = 4.0 * np.lambda * np.lambda;
    let mu = cfg.mu();
    let ix = integral_index(tau, r, q, mu, cfg.stability.h)?;
    let mut table = Table::new(&["tau", "Lambda", "re_lambda1"]);
    for i in 0..ix.tau.len() {
        table.push(vec![ix.tau[i], ix.lambda[i], ix.re_lambda1[i]]);
    }
    let worst = ix
        .lambda
        .iter()
        .skip(1)
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    run.note(format!(
        "q = {q}, μ = {mu}: max Re λ₁ {:.3e}, Λ at τ = {:.3} is {:.4e}",
        ix.re_lambda1.iter().cloned().fold(0.0, f64::max),
        ix.tau.last().copied().unwrap_or(0.0),
        ix.lambda.last().copied().unwrap_or(0.0)
    ));
    if worst.is_finite() {
        run.at_most("max_Lambda_after_start", Some(worst), 0.0, false);
    }
    run.table(
        "integral_index",
        &table,
        Some(Plot {
            title: "integral index",
            x: "tau",
            y: &["Lambda"],
            style: "lines",
            extra: vec![],
            series: vec![],
        }),
    )?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn section_values() {
        assert_eq!(parse_section("Q=36").unwrap(), Some(36.0));
        assert_eq!(parse_section("30.5").unwrap(), Some(30.5));
        assert_eq!(parse_section("").unwrap(), None);
        assert!(parse_section("Q=abc").is_err());
    }
}
