//! Experiment configuration: a TOML file with `[oscillator]`, `[integration]`,
//! `[stability]`, `[averaging]`, `[envelope]` and `[output]` sections. Every key
//! has a default, and `--set section.key=value` overrides any of them.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use pulsations::floquet::DEFAULT_STEP;
use pulsations::{Method, OscParams};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub oscillator: OscillatorSection,
    pub integration: IntegrationSection,
    pub stability: StabilitySection,
    pub averaging: AveragingSection,
    pub envelope: EnvelopeSection,
    pub output: OutputSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OscillatorSection {
    pub omega: f64,
    pub big_omega: f64,
    pub a: f64,
    pub nu: f64,
    pub eps: f64,
    pub delta: f64,
}

impl Default for OscillatorSection {
    fn default() -> Self {
        let p = OscParams::reference();
        Self {
            omega: p.omega,
            big_omega: p.big_omega,
            a: p.a,
            nu: p.nu,
            eps: p.eps,
            delta: p.delta,
        }
    }
}

impl OscillatorSection {
    pub fn params(&self) -> OscParams {
        OscParams {
            omega: self.omega,
            big_omega: self.big_omega,
            a: self.a,
            nu: self.nu,
            eps: self.eps,
            delta: self.delta,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitKind {
    /// All four components zero.
    Zero,
    /// The stationary envelope state `(f/λ², 0, −λ²/(ε√2), 0)`.
    Stationary,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegrationSection {
    pub method: Method,
    /// Fixed step in physical time; 200 samples per fastest period when absent.
    pub step: Option<f64>,
    pub t_end: f64,
    /// Keep every `stride`-th state in the trajectory file.
    pub stride: usize,
    pub init: InitKind,
    /// Explicit `(x, x', y, y')`; overrides `init`.
    pub state: Option<[f64; 4]>,
}

impl Default for IntegrationSection {
    fn default() -> Self {
        Self {
            method: Method::Rk4,
            step: None,
            t_end: 2000.0,
            stride: 1,
            init: InitKind::Zero,
            state: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StabilitySection {
    pub q_min: f64,
    pub q_max: f64,
    pub r_min: f64,
    pub r_max: f64,
    pub grid_step: f64,
    /// Step of the monodromy integration in `s`.
    pub h: f64,
    /// `Q` of the fixed-`Q` section.
    pub section_q: f64,
    /// Damping μ; `ν/Ω` from `[oscillator]` when absent.
    pub mu: Option<f64>,
    /// Largest admissible `|det M − 1|`.
    pub max_det_residual: f64,
}

impl Default for StabilitySection {
    fn default() -> Self {
        Self {
            q_min: 25.0,
            q_max: 49.0,
            r_min: 0.0,
            r_max: 64.0,
            grid_step: 0.25,
            h: DEFAULT_STEP,
            section_q: 36.0,
            mu: None,
            max_det_residual: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AveragingSection {
    /// Horizon in `θ`, in units of `ε⁻²`.
    pub horizon: f64,
    pub samples_per_period: usize,
    /// Window of the right-hand-side average in `θ`; `2π round(ε⁻²/2π)` when absent.
    pub window: Option<f64>,
    /// Gate on the median relative residual over the middle half of the run.
    pub max_median: f64,
    /// Gate on the manufactured-solution residual.
    pub max_manufactured: f64,
}

impl Default for AveragingSection {
    fn default() -> Self {
        Self {
            horizon: 5.3,
            samples_per_period: 400,
            window: None,
            max_median: 0.25,
            max_manufactured: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum HamiltonianKind {
    /// The closed-form Hamiltonian of the envelope equations, flow time `τ′`.
    Printed,
    /// The Hamiltonian obtained by averaging the asymptotic fast response, flow time `τ`.
    Averaged,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvelopeSection {
    pub hamiltonian: HamiltonianKind,
    pub h0_min: f64,
    pub h0_max: f64,
    pub h0_count: usize,
    /// Offsets from the equilibrium of the phase-portrait starts.
    pub portrait_radii: Vec<f64>,
    /// Portrait horizon in linearization time scales.
    pub portrait_periods: f64,
    /// Half-width of the vector-field sample grid around the equilibrium.
    pub field_half_width: f64,
    pub field_points: usize,
    /// Start of the period computation; 0.04 from the equilibrium towards the origin when absent.
    pub period_start: Option<[f64; 2]>,
    /// Start of the envelope flow compared against the simulated envelope.
    pub overlay_start: [f64; 2],
    pub overlay_t_end: f64,
    pub max_h_drift: f64,
    pub max_period_gap: f64,
}

impl Default for EnvelopeSection {
    fn default() -> Self {
        Self {
            hamiltonian: HamiltonianKind::Printed,
            h0_min: 0.02,
            h0_max: 0.5,
            h0_count: 97,
            portrait_radii: vec![0.02, 0.05, 0.1, 0.2, 0.3],
            portrait_periods: 1.5,
            field_half_width: 0.25,
            field_points: 21,
            period_start: None,
            overlay_start: [-0.01, 0.0],
            overlay_t_end: 150_000.0,
            max_h_drift: 1e-7,
            max_period_gap: 0.01,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
        }
    }
}

/// Reads the config file (if any) and applies `section.key=value` overrides.
pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<ExperimentConfig> {
    let mut table = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .with_context(|| format!("reading config {}", p.display()))?;
            text.parse::<toml::Table>()
                .with_context(|| format!("parsing config {}", p.display()))?
        }
        None => toml::Table::new(),
    };
    for ov in overrides {
        apply_override(&mut table, ov)?;
    }
    let cfg: ExperimentConfig = toml::Value::Table(table)
        .try_into()
        .context("invalid configuration")?;
    cfg.validate()?;
    Ok(cfg)
}

fn apply_override(table: &mut toml::Table, spec: &str) -> Result<()> {
    let Some((key, raw)) = spec.split_once('=') else {
        bail!("override `{spec}` is not of the form section.key=value");
    };
    let Some((section, field)) = key.trim().split_once('.') else {
        bail!("override key `{key}` must name a section and a key");
    };
    // bare words that are not valid TOML values are taken as strings
    let value = format!("v = {}", raw.trim())
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.trim().to_string()));
    let entry = table
        .entry(section.to_string())
        .or_insert_with(|| toml::Value::Table(toml::Table::new()));
    let Some(sub) = entry.as_table_mut() else {
        bail!("`{section}` is not a section");
    };
    sub.insert(field.to_string(), value);
    Ok(())
}

impl ExperimentConfig {
    /// Checks the fields that no library call validates before work starts.
    pub fn validate(&self) -> Result<()> {
        self.oscillator.params().validate()?;
        let i = &self.integration;
        if !(i.t_end.is_finite() && i.t_end > 0.0) {
            bail!("integration.t_end must be positive");
        }
        if i.step.is_some_and(|h| !(h.is_finite() && h > 0.0)) {
            bail!("integration.step must be positive");
        }
        if i.stride == 0 {
            bail!("integration.stride must be at least 1");
        }
        let s = &self.stability;
        if !(s.q_min <= s.q_max && s.r_min <= s.r_max) {
            bail!("stability ranges must satisfy min <= max");
        }
        if !(s.grid_step > 0.0 && s.h > 0.0) {
            bail!("stability.grid_step and stability.h must be positive");
        }
        if s.mu.is_some_and(|m| !(m >= 0.0)) {
            bail!("stability.mu must be non-negative");
        }
        let a = &self.averaging;
        if !(a.horizon > 0.0) || a.samples_per_period < 8 {
            bail!("averaging.horizon must be positive and samples_per_period at least 8");
        }
        let e = &self.envelope;
        if !(e.h0_min <= e.h0_max) || e.h0_count == 0 {
            bail!("envelope.h0 range is empty");
        }
        if e.field_points < 2 || !(e.field_half_width > 0.0) {
            bail!("envelope field grid needs at least 2 points and a positive half-width");
        }
        if !(e.portrait_periods > 0.0 && e.overlay_t_end > 0.0) {
            bail!("envelope horizons must be positive");
        }
        Ok(())
    }

    pub fn mu(&self) -> f64 {
        self.stability
            .mu
            .unwrap_or(self.oscillator.nu / self.oscillator.big_omega)
    }
}
