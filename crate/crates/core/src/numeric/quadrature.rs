//! Adaptive Gauss–Kronrod (7/15) quadrature on finite and half-infinite ranges.

use crate::error::{ConeError, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_8,
];

// Gauss weights for the 7-point rule embedded at the odd Kronrod nodes.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Tolerances and subdivision budget for [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub epsabs: f64,
    pub epsrel: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            epsabs: 0.0,
            epsrel: 1e-13,
            max_intervals: 400,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    abs_value: f64,
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Panel {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut abs_sum = fc.abs() * WGK[7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        kronrod += WGK[j] * (f1 + f2);
        abs_sum += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let value = kronrod * half;
    let abs_value = abs_sum * half.abs();
    let raw_err = ((kronrod - gauss) * half).abs();
    // QUADPACK-style error scaling
    let error = if raw_err == 0.0 {
        0.0
    } else {
        let scaled = raw_err * (200.0 * raw_err / abs_value.max(f64::MIN_POSITIVE)).powf(1.5).min(1.0);
        scaled.max(50.0 * f64::EPSILON * abs_value)
    };
    Panel {
        a,
        b,
        value,
        error,
        abs_value,
    }
}

/// Integrates `f` over `[a, b]` (either orientation) by globally adaptive bisection.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, opts: QuadOptions) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    if !(a.is_finite() && b.is_finite()) {
        return Err(ConeError::invalid("integration limits must be finite"));
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let mut panels = vec![gk15(&f, lo, hi)];
    loop {
        let total: f64 = panels.iter().map(|p| p.value).sum();
        let err: f64 = panels.iter().map(|p| p.error).sum();
        let abs_total: f64 = panels.iter().map(|p| p.abs_value).sum();
        if !total.is_finite() {
            return Err(ConeError::Quadrature {
                lo,
                hi,
                error: f64::INFINITY,
            });
        }
        let tol = opts
            .epsabs
            .max(opts.epsrel * total.abs())
            .max(4.0 * f64::EPSILON * abs_total);
        if err <= tol {
            return Ok(sign * total);
        }
        if panels.len() >= opts.max_intervals {
            let worst = panels
                .iter()
                .max_by(|x, y| x.error.total_cmp(&y.error))
                .copied()
                .unwrap();
            return Err(ConeError::Quadrature {
                lo: worst.a,
                hi: worst.b,
                error: worst.error,
            });
        }
        let (idx, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .unwrap();
        let worst = panels.swap_remove(idx);
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            return Err(ConeError::Quadrature {
                lo: worst.a,
                hi: worst.b,
                error: worst.error,
            });
        }
        panels.push(gk15(&f, worst.a, mid));
        panels.push(gk15(&f, mid, worst.b));
    }
}

/// Integrates `f` over `[a, +inf)` through the map `x = a + u / (1 - u)`.
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(f: F, a: f64, opts: QuadOptions) -> Result<f64> {
    integrate(
        |u: f64| {
            let w = 1.0 - u;
            let v = f(a + u / w) / (w * w);
            if v.is_finite() { v } else { 0.0 }
        },
        0.0,
        1.0,
        opts,
    )
}

/// Integrates `f` over `(-inf, b]`.
pub fn integrate_from_neg_infinity<F: Fn(f64) -> f64>(f: F, b: f64, opts: QuadOptions) -> Result<f64> {
    integrate_to_infinity(|x: f64| f(2.0 * b - x), b, opts)
}
