//! Explicit Dormand–Prince 8(5,3) integrator for small fixed-size systems.
//!
//! The driver integrates to a list of stop points, landing on each one exactly
//! by clamping the step. Error control follows Hairer's DOP853 (mixed 5th/3rd
//! order estimator) with rejection and step-size bounds.

use crate::error::{ConeError, Result};

const C: [f64; 12] = [
    0.0,
    5.260_015_195_876_773e-2,
    7.890_022_793_815_16e-2,
    1.183_503_419_072_274e-1,
    2.816_496_580_927_726e-1,
    3.333_333_333_333_333e-1,
    0.25,
    3.076_923_076_923_077e-1,
    6.512_820_512_820_513e-1,
    0.6,
    8.571_428_571_428_571e-1,
    1.0,
];

const A: [[f64; 11]; 12] = [
    [0.0; 11],
    [5.260_015_195_876_773e-2, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.972_505_698_453_79e-2, 5.917_517_095_361_37e-2, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [2.958_758_547_680_685e-2, 0.0, 8.876_275_643_042_054e-2, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [
        2.413_651_341_592_667e-1,
        0.0,
        -8.845_494_793_282_861e-1,
        9.248_340_032_617_92e-1,
        0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0,
    ],
    [
        3.703_703_703_703_703_5e-2,
        0.0,
        0.0,
        1.708_286_087_294_738_6e-1,
        1.254_676_875_668_224_2e-1,
        0.0, 0.0, 0.0, 0.0, 0.0, 0.0,
    ],
    [
        3.710_937_5e-2,
        0.0,
        0.0,
        1.702_522_110_195_440_5e-1,
        6.021_653_898_045_596e-2,
        -1.757_812_5e-2,
        0.0, 0.0, 0.0, 0.0, 0.0,
    ],
    [
        3.709_200_011_850_479e-2,
        0.0,
        0.0,
        1.703_839_257_122_399_8e-1,
        1.072_620_304_463_732_8e-1,
        -1.531_943_774_862_440_2e-2,
        8.273_789_163_814_023e-3,
        0.0, 0.0, 0.0, 0.0,
    ],
    [
        6.241_109_587_160_757e-1,
        0.0,
        0.0,
        -3.360_892_629_446_941_4,
        -8.682_193_468_417_26e-1,
        2.759_209_969_944_671e1,
        2.015_406_755_047_789_4e1,
        -4.348_988_418_106_996e1,
        0.0, 0.0, 0.0,
    ],
    [
        4.776_625_364_382_643_4e-1,
        0.0,
        0.0,
        -2.488_114_619_971_667_7,
        -5.902_908_268_368_43e-1,
        2.123_005_144_818_119_3e1,
        1.527_923_363_288_242_3e1,
        -3.328_821_096_898_486e1,
        -2.033_120_170_850_862_7e-2,
        0.0, 0.0,
    ],
    [
        -9.371_424_300_859_873e-1,
        0.0,
        0.0,
        5.186_372_428_844_064,
        1.091_437_348_996_729_5,
        -8.149_787_010_746_927,
        -1.852_006_565_999_696e1,
        2.273_948_709_935_050_5e1,
        2.493_605_552_679_652_3,
        -3.046_764_471_898_219_6,
        0.0,
    ],
    [
        2.273_310_147_516_538,
        0.0,
        0.0,
        -1.053_449_546_673_725e1,
        -2.000_872_058_224_862_5,
        -1.795_893_186_311_88e1,
        2.794_888_452_941_996e1,
        -2.858_998_277_135_023_5,
        -8.872_856_933_530_63,
        1.236_056_717_579_430_3e1,
        6.433_927_460_157_636e-1,
    ],
];

const B: [f64; 12] = [
    5.429_373_411_656_876_5e-2,
    0.0,
    0.0,
    0.0,
    0.0,
    4.450_312_892_752_409,
    1.891_517_899_314_500_3,
    -5.801_203_960_010_585,
    3.111_643_669_578_199e-1,
    -1.521_609_496_625_161e-1,
    2.013_654_008_040_303_4e-1,
    4.471_061_572_777_259e-2,
];

const ER: [f64; 12] = [
    1.312_004_499_419_488e-2,
    0.0,
    0.0,
    0.0,
    0.0,
    -1.225_156_446_376_204_4,
    -4.957_589_496_572_502e-1,
    1.664_377_182_454_986_4,
    -3.503_288_487_499_736_6e-1,
    3.341_791_187_130_175e-1,
    8.192_320_648_511_571e-2,
    -2.235_530_786_388_629_4e-2,
];

const BHH: [f64; 3] = [
    2.440_944_881_889_764e-1,
    7.338_466_882_816_118e-1,
    2.205_882_352_941_176_6e-2,
];

/// Integration tolerances and step controls.
#[derive(Debug, Clone, Copy)]
pub struct StepControl {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: f64,
    pub h_max: f64,
    pub h_min: f64,
    pub max_steps: usize,
}

impl StepControl {
    pub fn new(rtol: f64, atol: f64) -> Self {
        Self {
            rtol,
            atol,
            h_init: 0.0,
            h_max: f64::INFINITY,
            h_min: 0.0,
            max_steps: 200_000,
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Stats {
    pub evaluations: usize,
    pub accepted: usize,
    pub rejected: usize,
}

/// Stepper state: current point, step size, and the FSAL derivative.
pub struct Dop853<const N: usize> {
    pub t: f64,
    pub y: [f64; N],
    h: f64,
    k0: [f64; N],
    control: StepControl,
    pub stats: Stats,
    facold: f64,
}

#[inline]
fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[i];
        }
        *o += h * acc;
    }
    out
}

impl<const N: usize> Dop853<N> {
    pub fn new<F>(rhs: &F, t0: f64, y0: [f64; N], control: StepControl) -> Self
    where
        F: Fn(f64, &[f64; N]) -> [f64; N],
    {
        let k0 = rhs(t0, &y0);
        Self {
            t: t0,
            y: y0,
            h: control.h_init,
            k0,
            control,
            stats: Stats { evaluations: 1, ..Default::default() },
            facold: 1e-4,
        }
    }

    /// Derivative at the current point.
    pub fn derivative(&self) -> &[f64; N] {
        &self.k0
    }

    fn initial_step<F>(&mut self, rhs: &F, dir: f64)
    where
        F: Fn(f64, &[f64; N]) -> [f64; N],
    {
        let sk: Vec<f64> = self
            .y
            .iter()
            .map(|v| self.control.atol + self.control.rtol * v.abs())
            .collect();
        let dnf: f64 = self.k0.iter().zip(&sk).map(|(k, s)| (k / s).powi(2)).sum::<f64>() / N as f64;
        let dny: f64 = self.y.iter().zip(&sk).map(|(k, s)| (k / s).powi(2)).sum::<f64>() / N as f64;
        let mut h = if dnf <= 1e-10 || dny <= 1e-10 {
            1e-6
        } else {
            (dny / dnf).sqrt() * 0.01
        };
        h = h.min(self.control.h_max);
        let y1 = axpy(&self.y, dir * h, &[(1.0, &self.k0)]);
        let k1 = rhs(self.t + dir * h, &y1);
        self.stats.evaluations += 1;
        let der2: f64 = (k1
            .iter()
            .zip(&self.k0)
            .zip(&sk)
            .map(|((a, b), s)| ((a - b) / s).powi(2))
            .sum::<f64>()
            / N as f64)
            .sqrt()
            / h;
        let der12 = der2.max(dnf.sqrt());
        let h1 = if der12 <= 1e-15 {
            (h * 1e-3).max(1e-6)
        } else {
            (0.01 / der12).powf(1.0 / 8.0)
        };
        self.h = (100.0 * h).min(h1).min(self.control.h_max);
    }

    /// Advances exactly to `t_end`, taking as many adaptive steps as required.
    pub fn advance_to<F>(&mut self, rhs: &F, t_end: f64) -> Result<()>
    where
        F: Fn(f64, &[f64; N]) -> [f64; N],
    {
        let dir = if t_end >= self.t { 1.0 } else { -1.0 };
        if self.h == 0.0 {
            self.initial_step(rhs, dir);
        }
        let mut steps = 0usize;
        while (t_end - self.t) * dir > 0.0 {
            steps += 1;
            if steps > self.control.max_steps {
                return Err(ConeError::Integration {
                    t: self.t,
                    reason: "step budget exhausted".into(),
                });
            }
            let remaining = (t_end - self.t).abs();
            let mut h = self.h.abs().min(self.control.h_max);
            let last = h >= remaining * (1.0 - 1e-12);
            if last {
                h = remaining;
            }
            if h < self.control.h_min.max(f64::EPSILON * self.t.abs().max(1e-300)) && !last {
                return Err(ConeError::Integration {
                    t: self.t,
                    reason: "step size underflow".into(),
                });
            }
            let (accepted, h_next) = self.try_step(rhs, dir * h, last.then_some(t_end))?;
            self.h = h_next.abs();
            if !accepted {
                self.stats.rejected += 1;
            }
        }
        Ok(())
    }

    fn try_step<F>(&mut self, rhs: &F, h: f64, land: Option<f64>) -> Result<(bool, f64)>
    where
        F: Fn(f64, &[f64; N]) -> [f64; N],
    {
        let t = self.t;
        let y = self.y;
        let mut k: [[f64; N]; 12] = [[0.0; N]; 12];
        k[0] = self.k0;
        for s in 1..12 {
            let mut terms: Vec<(f64, &[f64; N])> = Vec::with_capacity(s);
            for (j, kj) in k.iter().enumerate().take(s) {
                if A[s][j] != 0.0 {
                    terms.push((A[s][j], kj));
                }
            }
            let ys = axpy(&y, h, &terms);
            let ks = rhs(t + C[s] * h, &ys);
            k[s] = ks;
        }
        self.stats.evaluations += 11;
        let mut terms: Vec<(f64, &[f64; N])> = Vec::new();
        for (j, kj) in k.iter().enumerate() {
            if B[j] != 0.0 {
                terms.push((B[j], kj));
            }
        }
        let y_new = axpy(&y, h, &terms);

        let mut err = 0.0;
        let mut err2 = 0.0;
        for i in 0..N {
            let sk = self.control.atol + self.control.rtol * y[i].abs().max(y_new[i].abs());
            let b_sum: f64 = (0..12).map(|j| B[j] * k[j][i]).sum();
            let e3 = b_sum - BHH[0] * k[0][i] - BHH[1] * k[8][i] - BHH[2] * k[11][i];
            err2 += (e3 / sk).powi(2);
            let e5: f64 = (0..12).map(|j| ER[j] * k[j][i]).sum();
            err += (e5 / sk).powi(2);
        }
        let mut deno = err + 0.01 * err2;
        if deno <= 0.0 {
            deno = 1.0;
        }
        let err = h.abs() * err * (1.0 / (deno * N as f64)).sqrt();
        if !err.is_finite() {
            return Ok((false, h * 0.1));
        }

        let expo1: f64 = 1.0 / 8.0;
        let safe: f64 = 0.9;
        let facc1: f64 = 1.0 / 0.333;
        let facc2: f64 = 1.0 / 6.0;
        let fac11 = err.powf(expo1);
        let fac = facc2.max(facc1.min(fac11 / safe));
        if err <= 1.0 {
            self.facold = err.max(1e-4);
            self.t = land.unwrap_or(t + h);
            self.y = y_new;
            self.k0 = rhs(self.t, &y_new);
            self.stats.evaluations += 1;
            self.stats.accepted += 1;
            if self.y.iter().any(|v| !v.is_finite()) {
                return Err(ConeError::Integration {
                    t: self.t,
                    reason: "non-finite state".into(),
                });
            }
            Ok((true, h / fac))
        } else {
            Ok((false, h / facc1.min(fac11 / safe)))
        }
    }
}
