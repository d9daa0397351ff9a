//! Interpolation of sampled radial data in the variable `t = ln r`.

/// Index `i` with `xs[i] <= x <= xs[i+1]`, clamped to the table.
pub fn bracket(xs: &[f64], x: f64) -> usize {
    let n = xs.len();
    if x <= xs[0] {
        return 0;
    }
    if x >= xs[n - 1] {
        return n - 2;
    }
    match xs.binary_search_by(|v| v.total_cmp(&x)) {
        Ok(i) => i.min(n - 2),
        Err(i) => i - 1,
    }
}

/// Cubic Hermite interpolation from values `y` and slopes `dy = dy/dx`.
pub fn hermite(xs: &[f64], y: &[f64], dy: &[f64], x: f64) -> (f64, f64) {
    let i = bracket(xs, x);
    let h = xs[i + 1] - xs[i];
    let s = (x - xs[i]) / h;
    let (y0, y1, m0, m1) = (y[i], y[i + 1], dy[i] * h, dy[i + 1] * h);
    let s2 = s * s;
    let s3 = s2 * s;
    let v = (2.0 * s3 - 3.0 * s2 + 1.0) * y0
        + (s3 - 2.0 * s2 + s) * m0
        + (-2.0 * s3 + 3.0 * s2) * y1
        + (s3 - s2) * m1;
    let d = ((6.0 * s2 - 6.0 * s) * y0 + (3.0 * s2 - 4.0 * s + 1.0) * m0 + (-6.0 * s2 + 6.0 * s) * y1
        + (3.0 * s2 - 2.0 * s) * m1)
        / h;
    (v, d)
}

/// Local Lagrange interpolation through `degree + 1` nodes centred on `x`.
pub fn lagrange(xs: &[f64], y: &[f64], x: f64, degree: usize) -> f64 {
    let n = xs.len();
    let m = (degree + 1).min(n);
    let i = bracket(xs, x);
    let start = (i + 1).saturating_sub(m / 2).min(n - m);
    let mut acc = 0.0;
    for j in start..start + m {
        let mut w = 1.0;
        for k in start..start + m {
            if k != j {
                w *= (x - xs[k]) / (xs[j] - xs[k]);
            }
        }
        acc += w * y[j];
    }
    acc
}
