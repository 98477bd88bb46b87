//! Artifacts of one run: CSV tables, gnuplot companions and the JSON summary.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use pulsations::io::Table;
use serde::Serialize;

use crate::config::ExperimentConfig;

/// One measured-vs-expected pair. Gates decide the exit status.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub measured: Option<f64>,
    pub expected: Option<f64>,
    pub tolerance: Option<f64>,
    /// `None` when the quantity could not be measured.
    pub pass: Option<bool>,
    pub gate: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct RunSummary {
    pub command: String,
    pub ok: bool,
    pub artifacts: Vec<String>,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
    pub config: ExperimentConfig,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub failed_gates: Vec<String>,
}

/// gnuplot companion for a CSV file.
pub struct Plot<'a> {
    pub title: &'a str,
    pub x: &'a str,
    pub y: &'a [&'a str],
    pub style: &'a str,
    /// Extra gnuplot lines placed before `plot`.
    pub extra: Vec<String>,
    /// Extra items of the `plot` command, e.g. a function.
    pub series: Vec<String>,
}

pub struct Run {
    dir: PathBuf,
    summary: RunSummary,
}

impl Run {
    pub fn new(command: &str, cfg: &ExperimentConfig) -> Result<Self> {
        let dir = cfg.output.dir.clone();
        std::fs::create_dir_all(&dir)
            .with_context(|| format!("creating output directory {}", dir.display()))?;
        Ok(Self {
            dir,
            summary: RunSummary {
                command: command.to_string(),
                ok: true,
                artifacts: Vec::new(),
                checks: Vec::new(),
                notes: Vec::new(),
                config: cfg.clone(),
                failed_gates: Vec::new(),
            },
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn table(&mut self, name: &str, table: &Table, plot: Option<Plot<'_>>) -> Result<()> {
        let csv = format!("{name}.csv");
        table
            .write(self.dir.join(&csv))
            .with_context(|| format!("writing {csv}"))?;
        self.summary.artifacts.push(csv.clone());
        if let Some(plot) = plot {
            let gp = format!("{name}.gp");
            std::fs::write(self.dir.join(&gp), gnuplot(&csv, &plot))
                .with_context(|| format!("writing {gp}"))?;
            self.summary.artifacts.push(gp);
        }
        Ok(())
    }

    /// A free-form gnuplot script.
    pub fn script(&mut self, name: &str, text: &str) -> Result<()> {
        let gp = format!("{name}.gp");
        std::fs::write(self.dir.join(&gp), text).with_context(|| format!("writing {gp}"))?;
        self.summary.artifacts.push(gp);
        Ok(())
    }

    pub fn json(&mut self, name: &str, value: &impl Serialize) -> Result<()> {
        let file = format!("{name}.json");
        std::fs::write(self.dir.join(&file), serde_json::to_string_pretty(value)?)
            .with_context(|| format!("writing {file}"))?;
        self.summary.artifacts.push(file);
        Ok(())
    }

    pub fn note(&mut self, note: impl Into<String>) {
        let note = note.into();
        println!("  {note}");
        self.summary.notes.push(note);
    }

    /// Relative comparison `|measured − expected| ≤ tol·|expected|`.
    pub fn relative(
        &mut self,
        name: &str,
        measured: Option<f64>,
        expected: f64,
        tol: f64,
        gate: bool,
    ) {
        let pass = measured.map(|m| (m - expected).abs() <= tol * expected.abs());
        self.push(name, measured, Some(expected), Some(tol), pass, gate, None);
    }

    /// Upper bound `measured ≤ bound`.
    pub fn at_most(&mut self, name: &str, measured: Option<f64>, bound: f64, gate: bool) {
        let pass = measured.map(|m| m <= bound);
        self.push(name, measured, None, Some(bound), pass, gate, None);
    }

    /// A gate that could not be evaluated at all.
    pub fn unavailable(&mut self, name: &str, why: String, gate: bool) {
        self.push(name, None, None, None, Some(false), gate, Some(why));
    }

    /// A measured quantity reported without any pass/fail judgement.
    pub fn measured(&mut self, name: &str, value: f64, note: Option<String>) {
        self.push(name, Some(value), None, None, None, false, note);
    }

    #[allow(clippy::too_many_arguments)]
    fn push(
        &mut self,
        name: &str,
        measured: Option<f64>,
        expected: Option<f64>,
        tolerance: Option<f64>,
        pass: Option<bool>,
        gate: bool,
        note: Option<String>,
    ) {
        let tag = match (pass, gate) {
            (Some(true), _) => "ok",
            (Some(false), true) => "GATE FAILED",
            (Some(false), false) => "off",
            (None, _) => "--",
        };
        let m = measured.map_or("n/a".to_string(), |v| format!("{v:.6e}"));
        let e = match (expected, tolerance) {
            (Some(e), Some(t)) => format!(" (expected {e:.6e}, rel. tol {t})"),
            (None, Some(t)) => format!(" (bound {t:e})"),
            _ => String::new(),
        };
        let n = note.as_deref().map_or(String::new(), |n| format!(": {n}"));
        println!("[{tag}] {name} = {m}{e}{n}");
        if gate && pass == Some(false) {
            self.summary.ok = false;
            self.summary.failed_gates.push(name.to_string());
        }
        self.summary.checks.push(Check {
            name: name.to_string(),
            measured,
            expected,
            tolerance,
            pass,
            gate,
            note,
        });
    }

    /// Writes `summary.json` and returns whether every gate passed.
    pub fn finish(mut self) -> Result<bool> {
        self.summary.artifacts.push("summary.json".into());
        let path = self.dir.join("summary.json");
        std::fs::write(&path, serde_json::to_string_pretty(&self.summary)?)
            .with_context(|| format!("writing {}", path.display()))?;
        Ok(self.summary.ok)
    }

    pub fn failed_gates(&self) -> &[String] {
        &self.summary.failed_gates
    }
}

fn gnuplot(csv: &str, plot: &Plot<'_>) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "set datafile separator ','");
    let _ = writeln!(s, "set title \"{}\"", plot.title);
    let _ = writeln!(s, "set xlabel \"{}\"", plot.x);
    let _ = writeln!(s, "set key outside");
    for line in &plot.extra {
        let _ = writeln!(s, "{line}");
    }
    let mut series: Vec<String> = plot
        .y
        .iter()
        .map(|y| {
            format!(
                "'{csv}' using \"{}\":\"{y}\" with {} title \"{y}\"",
                plot.x, plot.style
            )
        })
        .collect();
    series.extend(plot.series.iter().cloned());
    let _ = writeln!(s, "plot {}", series.join(", \\\n     "));
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gnuplot_script_names_columns() {
        let s = gnuplot(
            "a.csv",
            &Plot {
                title: "t",
                x: "R",
                y: &["re_lambda1", "2*mu"],
                style: "lines",
                extra: vec!["set grid".into()],
                series: vec!["0.2 title \"2mu\"".into()],
            },
        );
        assert!(s.contains("using \"R\":\"re_lambda1\""));
        assert!(s.contains("using \"R\":\"2*mu\""));
        assert!(s.contains("set grid"));
        assert!(s.contains(", \\\n     0.2 title"));
    }
}
