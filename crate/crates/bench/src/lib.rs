//! Shared inputs for the kernel benchmarks.

use std::f64::consts::PI;

use pulsations::oscillator::simulate_nondim;
use pulsations::{Method, NondimParams, OscParams, TimeSeries};

/// Samples per period of the fast phase.
pub const SAMPLES: usize = 400;

pub fn reference_params() -> NondimParams {
    OscParams::reference().nondimensionalize()
}

/// `periods` fast periods from rest, sampled `SAMPLES` times per period.
pub fn theta_run(periods: usize, method: Method) -> TimeSeries {
    let np = reference_params();
    simulate_nondim(
        &np,
        &[0.0; 4],
        2.0 * PI * periods as f64,
        2.0 * PI / SAMPLES as f64,
        method,
        1,
    )
    .expect("reference run is finite")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_has_whole_periods() {
        let ts = theta_run(3, Method::Rk4);
        assert_eq!(ts.len(), 3 * SAMPLES + 1);
    }
}
