//! Small numerical helpers shared across modules.

/// Composite trapezoid of uniformly spaced samples.
pub fn trapezoid(samples: &[f64], step: f64) -> f64 {
    match samples.len() {
        0 | 1 => 0.0,
        n => step * (samples[1..n - 1].iter().sum::<f64>() + 0.5 * (samples[0] + samples[n - 1])),
    }
}

/// Cumulative trapezoid starting at zero; same length as the input.
pub fn cumulative_trapezoid(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(ys.len());
    let mut acc = 0.0;
    for i in 0..ys.len() {
        if i > 0 {
            acc += 0.5 * (xs[i] - xs[i - 1]) * (ys[i] + ys[i - 1]);
        }
        out.push(acc);
    }
    out
}

/// Ordinary least-squares line through `(xs, ys)`, returns `(slope, intercept)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

/// Median of the finite entries; `None` when there are none.
pub fn median(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let mut v: Vec<f64> = values.into_iter().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(|a, b| a.total_cmp(b));
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    })
}

/// Bisection on a sign change of `f` in `[a, b]`.
pub fn bisect(mut a: f64, mut b: f64, tol: f64, f: impl Fn(f64) -> f64) -> Option<f64> {
    let mut fa = f(a);
    let fb = f(b);
    if fa == 0.0 {
        return Some(a);
    }
    if fb == 0.0 {
        return Some(b);
    }
    if !(fa.is_finite() && fb.is_finite()) || fa.signum() == fb.signum() {
        return None;
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        let fm = f(m);
        if !fm.is_finite() {
            return None;
        }
        if fm == 0.0 || (b - a).abs() < tol {
            return Some(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Some(0.5 * (a + b))
}
