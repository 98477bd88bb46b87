//! Numerical toolkit for a resonantly forced pair of coupled nonlinear
//! oscillators: fixed-step integrators, Floquet analysis of the Mathieu
//! equation, a windowed check of the averaged envelope equation and the
//! planar Hamiltonian envelope reduction.

// NaN-rejecting guards read as `!(x > 0.0)`; index loops mirror the formulas.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod averaging;
pub mod envelope;
pub mod error;
pub mod floquet;
pub mod integrators;
pub mod io;
pub mod numerics;
pub mod oscillator;

pub use averaging::{EnvelopeSeries, ResidualReport};
pub use envelope::{
    AveragedReduction, EnvelopeState, LevelSetSummary, PlanarHamiltonian, PrintedHamiltonian,
};
pub use error::{Error, Result};
pub use floquet::{FloquetResult, MathieuParams};
pub use integrators::{IntegrationGrid, Method, TimeSeries, VectorField};
pub use io::Table;
pub use num_complex::Complex64;
pub use oscillator::{NondimParams, OscParams};
