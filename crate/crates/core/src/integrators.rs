//! Fixed-step integrators: classical RK4 and the four-step Adams–Bashforth–Moulton
//! predictor-corrector (PECE), both producing equally spaced output.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Any state component beyond this magnitude aborts the integration.
pub const DIVERGENCE_THRESHOLD: f64 = 1e12;

/// Right-hand side of `x' = f(t, x)`.
pub trait VectorField {
    fn dimension(&self) -> usize;

    /// Writes `f(t, state)` into `out`. Both slices have length `dimension()`.
    fn eval(&self, t: f64, state: &[f64], out: &mut [f64]);
}

impl<V: VectorField + ?Sized> VectorField for &V {
    fn dimension(&self) -> usize {
        (**self).dimension()
    }

    fn eval(&self, t: f64, state: &[f64], out: &mut [f64]) {
        (**self).eval(t, state, out)
    }
}

/// Adapter turning a closure into a [`VectorField`].
pub struct FnField<F> {
    dimension: usize,
    f: F,
}

impl<F> FnField<F>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    pub fn new(dimension: usize, f: F) -> Self {
        Self { dimension, f }
    }
}

impl<F> VectorField for FnField<F>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn eval(&self, t: f64, state: &[f64], out: &mut [f64]) {
        (self.f)(t, state, out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegrationGrid {
    pub t0: f64,
    pub t_end: f64,
    pub h: f64,
    pub n_steps: usize,
}

impl IntegrationGrid {
    /// `n_steps = round((t_end − t0) / h)`; the step itself is kept as given.
    pub fn new(t0: f64, t_end: f64, h: f64) -> Result<Self> {
        if !(t0.is_finite() && t_end.is_finite() && h.is_finite()) {
            return Err(invalid("grid", "non-finite bound or step"));
        }
        if h <= 0.0 {
            return Err(invalid("h", format!("step must be positive, got {h}")));
        }
        if t_end <= t0 {
            return Err(invalid(
                "t_end",
                format!("t_end = {t_end} must exceed t0 = {t0}"),
            ));
        }
        let n_steps = ((t_end - t0) / h).round() as usize;
        if n_steps == 0 {
            return Err(invalid("h", "step is longer than the interval"));
        }
        Ok(Self {
            t0,
            t_end,
            h,
            n_steps,
        })
    }

    /// Grid over `[t0, t0 + n_steps·h]`.
    pub fn with_steps(t0: f64, h: f64, n_steps: usize) -> Result<Self> {
        if n_steps == 0 {
            return Err(invalid("n_steps", "must be at least 1"));
        }
        Self::new(t0, t0 + h * n_steps as f64, h)
    }

    #[inline]
    pub fn time(&self, step: usize) -> f64 {
        self.t0 + step as f64 * self.h
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Rk4,
    Abm4,
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rk4" => Ok(Method::Rk4),
            "abm4" | "adams" => Ok(Method::Abm4),
            other => Err(invalid("method", format!("unknown method `{other}`"))),
        }
    }
}

/// Equally spaced trajectory. Row `i` is the state at `grid.time(i * stride)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub grid: IntegrationGrid,
    pub stride: usize,
    dimension: usize,
    data: Vec<f64>,
}

impl TimeSeries {
    /// Builds a series from row-major samples; used for synthetic signals.
    pub fn from_rows(
        grid: IntegrationGrid,
        stride: usize,
        dimension: usize,
        data: Vec<f64>,
    ) -> Result<Self> {
        if stride == 0 || dimension == 0 || !data.len().is_multiple_of(dimension) {
            return Err(invalid(
                "data",
                "row-major buffer does not match the dimension",
            ));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(invalid("data", "non-finite sample"));
        }
        Ok(Self {
            grid,
            stride,
            dimension,
            data,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dimension
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Spacing between consecutive rows.
    pub fn sample_step(&self) -> f64 {
        self.grid.h * self.stride as f64
    }

    pub fn time(&self, row: usize) -> f64 {
        self.grid.time(row * self.stride)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dimension..(i + 1) * self.dimension]
    }

    pub fn last(&self) -> &[f64] {
        self.row(self.len() - 1)
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dimension)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.time(i)).collect()
    }
}

fn check_state(t: f64, state: &[f64]) -> Result<()> {
    if state
        .iter()
        .all(|v| v.is_finite() && v.abs() <= DIVERGENCE_THRESHOLD)
    {
        Ok(())
    } else {
        Err(Error::NonFiniteState { t })
    }
}

/// Reusable RK4 stage storage.
struct Rk4Work {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4Work {
    fn new(n: usize) -> Self {
        Self {
            k1: vec![0.0; n],
            k2: vec![0.0; n],
            k3: vec![0.0; n],
            k4: vec![0.0; n],
            tmp: vec![0.0; n],
        }
    }

    /// One step in place. `k1` must already hold `f(t, y)`.
    fn step_with_k1<V: VectorField + ?Sized>(&mut self, field: &V, t: f64, h: f64, y: &mut [f64]) {
        let half = 0.5 * h;
        for i in 0..y.len() {
            self.tmp[i] = y[i] + half * self.k1[i];
        }
        field.eval(t + half, &self.tmp, &mut self.k2);
        for i in 0..y.len() {
            self.tmp[i] = y[i] + half * self.k2[i];
        }
        field.eval(t + half, &self.tmp, &mut self.k3);
        for i in 0..y.len() {
            self.tmp[i] = y[i] + h * self.k3[i];
        }
        field.eval(t + h, &self.tmp, &mut self.k4);
        let sixth = h / 6.0;
        for i in 0..y.len() {
            y[i] += sixth * (self.k1[i] + 2.0 * (self.k2[i] + self.k3[i]) + self.k4[i]);
        }
    }
}

/// Single classical RK4 step, in place.
pub fn rk4_step<V: VectorField + ?Sized>(field: &V, t: f64, h: f64, y: &mut [f64]) {
    let mut work = Rk4Work::new(y.len());
    field.eval(t, y, &mut work.k1);
    work.step_with_k1(field, t, h, y);
}

/// Integrates over `grid`, calling `observer(step, t, state)` for step 0 (the
/// initial condition) and after every step. Nothing is stored.
pub fn drive<V, O>(
    method: Method,
    field: &V,
    init: &[f64],
    grid: &IntegrationGrid,
    mut observer: O,
) -> Result<()>
where
    V: VectorField + ?Sized,
    O: FnMut(usize, f64, &[f64]),
{
    let n = field.dimension();
    if init.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: init.len(),
        });
    }
    check_state(grid.t0, init)?;
    if method == Method::Abm4 && grid.n_steps < 4 {
        return Err(Error::GridTooShort {
            n_steps: grid.n_steps,
            required: 4,
        });
    }

    let h = grid.h;
    let mut y = init.to_vec();
    let mut work = Rk4Work::new(n);
    observer(0, grid.t0, &y);

    match method {
        Method::Rk4 => {
            for step in 0..grid.n_steps {
                let t = grid.time(step);
                field.eval(t, &y, &mut work.k1);
                work.step_with_k1(field, t, h, &mut y);
                let t_next = grid.time(step + 1);
                check_state(t_next, &y)?;
                observer(step + 1, t_next, &y);
            }
        }
        Method::Abm4 => {
            // history[0] = f_n, history[1] = f_{n-1}, ...
            let mut history: [Vec<f64>; 4] = std::array::from_fn(|_| vec![0.0; n]);
            field.eval(grid.t0, &y, &mut history[0]);
            for step in 0..3 {
                let t = grid.time(step);
                work.k1.copy_from_slice(&history[0]);
                work.step_with_k1(field, t, h, &mut y);
                let t_next = grid.time(step + 1);
                check_state(t_next, &y)?;
                observer(step + 1, t_next, &y);
                history.rotate_right(1);
                field.eval(t_next, &y, &mut history[0]);
            }
            let mut predicted = vec![0.0; n];
            let mut f_pred = vec![0.0; n];
            let c = h / 24.0;
            for step in 3..grid.n_steps {
                let t_next = grid.time(step + 1);
                let [f0, f1, f2, f3] = &history;
                for i in 0..n {
                    predicted[i] =
                        y[i] + c * (55.0 * f0[i] - 59.0 * f1[i] + 37.0 * f2[i] - 9.0 * f3[i]);
                }
                field.eval(t_next, &predicted, &mut f_pred);
                for i in 0..n {
                    y[i] += c * (9.0 * f_pred[i] + 19.0 * f0[i] - 5.0 * f1[i] + f2[i]);
                }
                check_state(t_next, &y)?;
                observer(step + 1, t_next, &y);
                history.rotate_right(1);
                field.eval(t_next, &y, &mut history[0]);
            }
        }
    }
    Ok(())
}

/// Integrates and keeps every `stride`-th state (plus the initial one).
pub fn integrate_strided<V: VectorField + ?Sized>(
    method: Method,
    field: &V,
    init: &[f64],
    grid: &IntegrationGrid,
    stride: usize,
) -> Result<TimeSeries> {
    if stride == 0 {
        return Err(invalid("stride", "must be at least 1"));
    }
    let n = field.dimension();
    let mut data = Vec::with_capacity((grid.n_steps / stride + 1) * n);
    drive(method, field, init, grid, |step, _, y| {
        if step % stride == 0 {
            data.extend_from_slice(y);
        }
    })?;
    Ok(TimeSeries {
        grid: *grid,
        stride,
        dimension: n,
        data,
    })
}

pub fn integrate<V: VectorField + ?Sized>(
    method: Method,
    field: &V,
    init: &[f64],
    grid: &IntegrationGrid,
) -> Result<TimeSeries> {
    integrate_strided(method, field, init, grid, 1)
}

pub fn rk4_integrate<V: VectorField + ?Sized>(
    field: &V,
    init: &[f64],
    grid: &IntegrationGrid,
) -> Result<TimeSeries> {
    integrate(Method::Rk4, field, init, grid)
}

/// Startup uses three RK4 steps.
pub fn abm4_integrate<V: VectorField + ?Sized>(
    field: &V,
    init: &[f64],
    grid: &IntegrationGrid,
) -> Result<TimeSeries> {
    integrate(Method::Abm4, field, init, grid)
}
