pub mod averaging;
pub mod envelope;
pub mod reproduce;
pub mod simulate;
pub mod stability;

use pulsations::envelope::stationary_initial_data;
use pulsations::{NondimParams, OscParams};

use crate::config::{ExperimentConfig, InitKind};

/// Initial state in physical time.
pub fn initial_state(cfg: &ExperimentConfig) -> [f64; 4] {
    if let Some(s) = cfg.integration.state {
        return s;
    }
    match cfg.integration.init {
        InitKind::Zero => [0.0; 4],
        InitKind::Stationary => {
            let p = cfg.oscillator.params();
            let s = stationary_initial_data(&p.nondimensionalize());
            // θ-derivatives to t-derivatives
            [s[0], s[1] * p.big_omega, s[2], s[3] * p.big_omega]
        }
    }
}

pub fn params(cfg: &ExperimentConfig) -> (OscParams, NondimParams) {
    let p = cfg.oscillator.params();
    (p, p.nondimensionalize())
}

/// `n` equally spaced values from `a` to `b` inclusive.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..n)
            .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}
