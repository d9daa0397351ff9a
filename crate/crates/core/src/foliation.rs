//! Rotationally invariant minimal leaves asymptotic to Simons cones.
//!
//! A leaf is generated by a unit-speed curve `(x(s), y(s))` in the quarter
//! plane, where `x` and `y` are the radii of the two sphere factors. Near the
//! cone the integrator switches to log-polar variables measured from the cone
//! line, so that offsets decaying like `R^{-3}` keep full relative precision.

use serde::{Deserialize, Serialize};

use crate::cone::{make_simons_cone, ConeDescriptor};
use crate::error::{ConeError, Result};
use crate::modes::indicial_roots;
use crate::numeric::dop853::{Dop853, StepControl};
use crate::numeric::interp;
use crate::numeric::quadrature::{integrate, QuadOptions};
use crate::weighted::{fit_window_moments, End, RateOptions, RateReport};

/// Polar angle of the cone line `y = sqrt(q/p) x`.
pub fn cone_angle(p: u32, q: u32) -> f64 {
    (q as f64 / p as f64).sqrt().atan()
}

/// `(x', y', theta')` for the invariant minimal-surface profile equation.
pub fn profile_rhs(p: u32, q: u32, state: [f64; 3]) -> Result<[f64; 3]> {
    let [x, y, th] = state;
    if !(x > 0.0) || !(y > 0.0) {
        return Err(ConeError::invalid(format!(
            "profile equation is singular at (x, y) = ({x}, {y}); use the regularized start"
        )));
    }
    let (s, c) = th.sin_cos();
    Ok([c, s, -(p as f64) * s / x + q as f64 * c / y])
}

/// Curvature `theta'(0)` of the smooth cap at `(x0, 0)`.
pub fn cap_curvature(p: u32, q: u32, x0: f64) -> f64 {
    -(p as f64) / ((1.0 + q as f64) * x0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    ArcLength,
    BoundingBox,
    Samples,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct ShootStats {
    pub evaluations: usize,
    pub accepted: usize,
    pub rejected: usize,
    /// Arc length at which the log-polar formulation took over.
    pub switch_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileCurve {
    pub p: u32,
    pub q: u32,
    pub x0: f64,
    pub s: Vec<f64>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub theta: Vec<f64>,
    /// Polar angle minus the cone angle.
    pub delta: Vec<f64>,
    /// Tangent angle minus the cone angle.
    pub epsilon: Vec<f64>,
    /// `theta'` as seen by the integrator, when the curve was computed here.
    #[serde(default)]
    pub dtheta: Option<Vec<f64>>,
    pub stats: ShootStats,
    pub termination: Termination,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Side {
    XHeavy,
    YHeavy,
}

impl ProfileCurve {
    /// Builds a curve from stored samples (for example a CSV round trip).
    pub fn from_samples(p: u32, q: u32, s: Vec<f64>, x: Vec<f64>, y: Vec<f64>, theta: Vec<f64>) -> Result<Self> {
        let n = s.len();
        if n < 2 || x.len() != n || y.len() != n || theta.len() != n {
            return Err(ConeError::invalid("profile needs at least two samples with matching columns"));
        }
        if s.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(ConeError::invalid("arc length must be strictly increasing"));
        }
        let pc = cone_angle(p, q);
        let delta = x.iter().zip(&y).map(|(&x, &y)| y.atan2(x) - pc).collect();
        let epsilon = theta.iter().map(|t| t - pc).collect();
        let x0 = x[0];
        Ok(Self {
            p,
            q,
            x0,
            s,
            x,
            y,
            theta,
            delta,
            epsilon,
            dtheta: None,
            stats: ShootStats::default(),
            termination: Termination::Samples,
        })
    }

    /// The cone line itself, sampled at the given radii.
    pub fn cone_line(p: u32, q: u32, radii: &[f64]) -> Result<Self> {
        let pc = cone_angle(p, q);
        let (sn, cs) = pc.sin_cos();
        Self::from_samples(
            p,
            q,
            radii.to_vec(),
            radii.iter().map(|r| r * cs).collect(),
            radii.iter().map(|r| r * sn).collect(),
            vec![pc; radii.len()],
        )
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    pub fn radius(&self, i: usize) -> f64 {
        self.x[i].hypot(self.y[i])
    }

    /// The same leaf drawn in the `(q, p)` plane: `x` and `y` exchanged.
    pub fn exchange_axes(&self) -> Self {
        let pc = cone_angle(self.q, self.p);
        let theta: Vec<f64> = self.theta.iter().map(|t| std::f64::consts::FRAC_PI_2 - t).collect();
        Self {
            p: self.q,
            q: self.p,
            x0: self.x0,
            s: self.s.clone(),
            x: self.y.clone(),
            y: self.x.clone(),
            epsilon: theta.iter().map(|t| t - pc).collect(),
            theta,
            delta: self.delta.iter().map(|d| -d).collect(),
            dtheta: self.dtheta.as_ref().map(|d| d.iter().map(|v| -v).collect()),
            stats: self.stats,
            termination: self.termination,
        }
    }

    /// Dilation by `lambda`.
    pub fn scaled(&self, lambda: f64) -> Self {
        let mul = |v: &Vec<f64>| v.iter().map(|a| a * lambda).collect::<Vec<_>>();
        Self {
            x0: self.x0 * lambda,
            s: mul(&self.s),
            x: mul(&self.x),
            y: mul(&self.y),
            dtheta: self.dtheta.as_ref().map(|d| d.iter().map(|v| v / lambda).collect()),
            ..self.clone()
        }
    }

    /// Side of the cone occupied by the tail, if the tail is one-signed.
    pub fn tail_side(&self) -> Option<Side> {
        let zero = zero_band();
        let tail = &self.delta[self.len() / 2..];
        if tail.iter().all(|d| *d < -zero) {
            Some(Side::XHeavy)
        } else if tail.iter().all(|d| *d > zero) {
            Some(Side::YHeavy)
        } else {
            None
        }
    }
}

fn zero_band() -> f64 {
    8.0 * f64::EPSILON
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeafOptions {
    pub rtol: f64,
    /// Sample spacing in the arc-length phase, in units of `x0`.
    pub arc_spacing: f64,
    pub samples_per_decade: usize,
    /// Stop once the radius exceeds this multiple of `x0`.
    pub radius_box: Option<f64>,
}

impl Default for LeafOptions {
    fn default() -> Self {
        Self { rtol: 1e-10, arc_spacing: 1.0 / 32.0, samples_per_decade: 64, radius_box: None }
    }
}

const SERIES_START: f64 = 1e-5;
const SWITCH_RADIUS: f64 = 2.0;
const SWITCH_COS: f64 = 0.95;

/// Shoots the leaf through `(x0, 0)` out to arc length `s_max`.
pub fn shoot_leaf(p: u32, q: u32, x0: f64, s_max: f64, tol: f64) -> Result<ProfileCurve> {
    shoot_leaf_with(p, q, x0, s_max, &LeafOptions { rtol: tol, ..LeafOptions::default() })
}

pub fn shoot_leaf_with(p: u32, q: u32, x0: f64, s_max: f64, opts: &LeafOptions) -> Result<ProfileCurve> {
    if p == 0 || q == 0 {
        return Err(ConeError::invalid("sphere dimensions must be >= 1"));
    }
    if !(x0 > 0.0 && x0.is_finite()) {
        return Err(ConeError::invalid("x0 must be positive"));
    }
    if !(s_max.is_finite() && s_max > SERIES_START * x0) {
        return Err(ConeError::invalid("s_max must be finite and positive"));
    }
    if !(opts.rtol > 0.0 && opts.rtol < 1e-3) {
        return Err(ConeError::invalid("tolerance must lie in (0, 1e-3)"));
    }
    let pc = cone_angle(p, q);
    let (pf, qf) = (p as f64, q as f64);
    let r_box = opts.radius_box.map(|b| b * x0).unwrap_or(f64::INFINITY);

    let mut out = ProfileCurve {
        p,
        q,
        x0,
        s: vec![0.0],
        x: vec![x0],
        y: vec![0.0],
        theta: vec![std::f64::consts::FRAC_PI_2],
        delta: vec![-pc],
        epsilon: vec![std::f64::consts::FRAC_PI_2 - pc],
        dtheta: Some(vec![cap_curvature(p, q, x0)]),
        stats: ShootStats::default(),
        termination: Termination::ArcLength,
    };

    // Arc-length phase from the series start off the axis.
    let a = cap_curvature(p, q, x0);
    let s0 = SERIES_START * x0;
    let y0 = [x0 - a * s0 * s0 / 2.0, s0 - a * a * s0.powi(3) / 6.0, std::f64::consts::FRAC_PI_2 + a * s0];
    let rhs1 = |_s: f64, y: &[f64; 3]| {
        let (sn, cs) = y[2].sin_cos();
        [cs, sn, -pf * sn / y[0] + qf * cs / y[1]]
    };
    let mut st = Dop853::new(&rhs1, s0, y0, StepControl::new(opts.rtol, opts.rtol * 1e-6 * x0));
    let ds = opts.arc_spacing * x0;
    let mut k = 1usize;
    let mut switched = false;
    loop {
        let target = (k as f64 * ds).min(s_max);
        st.advance_to(&rhs1, target).map_err(|e| last_good(e, &st.y))?;
        let [x, y, th] = st.y;
        if !(x > 0.0 && y > 0.0) {
            return Err(ConeError::Integration {
                t: st.t,
                reason: format!("profile left the quarter plane at (x, y) = ({x}, {y})"),
            });
        }
        let phi = y.atan2(x);
        out.s.push(st.t);
        out.x.push(x);
        out.y.push(y);
        out.theta.push(th);
        out.delta.push(phi - pc);
        out.epsilon.push(th - pc);
        out.dtheta.as_mut().unwrap().push(st.derivative()[2]);
        let r = x.hypot(y);
        if target >= s_max {
            break;
        }
        if r >= r_box {
            out.termination = Termination::BoundingBox;
            break;
        }
        if r >= SWITCH_RADIUS * x0 && (th - phi).cos() >= SWITCH_COS {
            switched = true;
            break;
        }
        k += 1;
    }
    let mut stats = st.stats;
    if !switched {
        out.stats = ShootStats { evaluations: stats.evaluations, accepted: stats.accepted, rejected: stats.rejected, switch_s: None };
        return Ok(out);
    }

    // Log-polar phase: state (delta, epsilon, s) against rho = ln r.
    let rhs2 = move |rho: f64, v: &[f64; 3]| polar_rhs(pf, qf, pc, rho, v);
    let [x, y, th] = st.y;
    let rho0 = x.hypot(y).ln();
    let switch_s = st.t;
    let v0 = [y.atan2(x) - pc, th - pc, st.t];
    let ctl = StepControl::new(opts.rtol, 1e-24);
    let mut pol = Dop853::new(&rhs2, rho0, v0, ctl);
    let drho = std::f64::consts::LN_10 / opts.samples_per_decade as f64;
    // Sample nodes sit at ln x0 + j * drho so that the schedule is dilation equivariant.
    let mut j = ((rho0 - x0.ln()) / drho).floor() as i64 + 1;
    let rho_box = r_box.ln();
    loop {
        let mut target = x0.ln() + j as f64 * drho;
        let mut boxed = false;
        if target >= rho_box {
            target = rho_box;
            boxed = true;
        }
        let prev = (pol.t, pol.y);
        pol.advance_to(&rhs2, target).map_err(|e| last_good(e, &pol.y))?;
        ensure_outward(&pol.y, pol.t)?;
        let mut finished = boxed;
        if pol.y[2] >= s_max {
            // Land on s = s_max by secant iteration on rho.
            let (mut ra, mut sa) = (prev.0, prev.1[2]);
            let (mut rb, mut sb) = (pol.t, pol.y[2]);
            let mut best = pol.y;
            let mut best_rho = pol.t;
            for _ in 0..30 {
                let rm = ra + (s_max - sa) * (rb - ra) / (sb - sa);
                let mut trial = Dop853::new(&rhs2, prev.0, prev.1, ctl);
                trial.advance_to(&rhs2, rm)?;
                stats.evaluations += trial.stats.evaluations;
                best = trial.y;
                best_rho = rm;
                let sm = trial.y[2];
                if (sm - s_max).abs() <= 1e-12 * s_max {
                    break;
                }
                if sm < s_max {
                    ra = rm;
                    sa = sm;
                } else {
                    rb = rm;
                    sb = sm;
                }
            }
            best[2] = s_max;
            pol.y = best;
            pol.t = best_rho;
            finished = true;
            out.termination = Termination::ArcLength;
        } else if boxed {
            out.termination = Termination::BoundingBox;
        }
        let [d, e, s] = pol.y;
        let r = pol.t.exp();
        let dv = polar_rhs(pf, qf, pc, pol.t, &pol.y);
        if s > *out.s.last().unwrap() {
            out.s.push(s);
            out.x.push(r * (pc + d).cos());
            out.y.push(r * (pc + d).sin());
            out.theta.push(pc + e);
            out.delta.push(d);
            out.epsilon.push(e);
            out.dtheta.as_mut().unwrap().push(dv[1] / dv[2]);
        }
        if finished {
            break;
        }
        j += 1;
    }
    stats.evaluations += pol.stats.evaluations;
    stats.accepted += pol.stats.accepted;
    stats.rejected += pol.stats.rejected;
    out.stats = ShootStats {
        evaluations: stats.evaluations,
        accepted: stats.accepted,
        rejected: stats.rejected,
        switch_s: Some(switch_s),
    };
    Ok(out)
}

/// Right-hand side in `rho = ln r` for `(delta, epsilon, s)`.
fn polar_rhs(p: f64, q: f64, pc: f64, rho: f64, v: &[f64; 3]) -> [f64; 3] {
    let [d, e, _] = *v;
    let psi = e - d;
    let cpsi = psi.cos();
    // -p sin(theta) sin(phi) + q cos(theta) cos(phi), with the cone-line terms cancelled exactly.
    let num = -(p * q).sqrt() * (e + d).sin() + (q - p) * e.sin() * d.sin();
    let phi = pc + d;
    let den = phi.cos() * phi.sin() * cpsi;
    [psi.tan(), num / den, rho.exp() / cpsi]
}

fn ensure_outward(v: &[f64; 3], rho: f64) -> Result<()> {
    if (v[1] - v[0]).cos() <= 0.05 {
        return Err(ConeError::Integration {
            t: rho,
            reason: "profile turned back toward the origin in the log-polar phase".into(),
        });
    }
    Ok(())
}

fn last_good(e: ConeError, y: &[f64; 3]) -> ConeError {
    match e {
        ConeError::Integration { t, reason } => ConeError::Integration {
            t,
            reason: format!("{reason}; last state [{:e}, {:e}, {:e}]", y[0], y[1], y[2]),
        },
        other => other,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Crossings {
    pub count: usize,
    pub radii: Vec<f64>,
    pub arc_lengths: Vec<f64>,
}

impl Crossings {
    /// Ratios of successive crossing radii.
    pub fn ratios(&self) -> Vec<f64> {
        self.radii.windows(2).map(|w| w[1] / w[0]).collect()
    }
}

/// Sign changes of the offset from the cone line, refined by secant iteration
/// on a cubic Hermite model in arc length.
pub fn count_cone_crossings(profile: &ProfileCurve) -> Crossings {
    let zero = zero_band();
    let n = profile.len();
    let pc = cone_angle(profile.p, profile.q);
    let mut radii = Vec::new();
    let mut arcs = Vec::new();
    let mut last_sign = 0i8;
    let mut last_idx = 0usize;
    let sign = |d: f64| if d > zero { 1i8 } else if d < -zero { -1 } else { 0 };
    // d(delta)/ds = sin(theta - phi) / r.
    let slope = |i: usize| (profile.theta[i] - pc - profile.delta[i]).sin() / profile.radius(i);
    for i in 0..n {
        let sg = sign(profile.delta[i]);
        if sg == 0 {
            continue;
        }
        if last_sign != 0 && sg != last_sign {
            let (a, b) = (last_idx, i);
            let xs = [profile.s[a], profile.s[b]];
            let ys = [profile.delta[a], profile.delta[b]];
            let ds = [slope(a), slope(b)];
            let f = |s: f64| interp::hermite(&xs, &ys, &ds, s).0;
            let (mut lo, mut hi) = (xs[0], xs[1]);
            let (mut flo, mut fhi) = (ys[0], ys[1]);
            let mut root = lo - flo * (hi - lo) / (fhi - flo);
            for _ in 0..60 {
                let fr = f(root);
                if fr == 0.0 || (hi - lo) < 1e-15 * hi {
                    break;
                }
                if (fr > 0.0) == (flo > 0.0) {
                    lo = root;
                    flo = fr;
                } else {
                    hi = root;
                    fhi = fr;
                }
                root = lo - flo * (hi - lo) / (fhi - flo);
            }
            let rs = [profile.radius(a), profile.radius(b)];
            let drs = [(profile.theta[a] - pc - profile.delta[a]).cos(), (profile.theta[b] - pc - profile.delta[b]).cos()];
            radii.push(interp::hermite(&xs, &rs, &drs, root).0);
            arcs.push(root);
        }
        last_sign = sg;
        last_idx = i;
    }
    Crossings { count: radii.len(), radii, arc_lengths: arcs }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeafGraph {
    pub p: u32,
    pub q: u32,
    pub r: Vec<f64>,
    pub h: Vec<f64>,
    /// `dh/dR`.
    pub dh: Vec<f64>,
}

impl LeafGraph {
    /// Graph of a given function on the listed radii.
    pub fn synthetic(p: u32, q: u32, radii: &[f64], h: impl Fn(f64) -> (f64, f64)) -> Result<Self> {
        if radii.windows(2).any(|w| !(w[1] > w[0])) || radii.len() < 2 {
            return Err(ConeError::invalid("radii must be strictly increasing"));
        }
        let (hv, dv): (Vec<f64>, Vec<f64>) = radii.iter().map(|&r| h(r)).unzip();
        Ok(Self { p, q, r: radii.to_vec(), h: hv, dh: dv })
    }

    /// Graph from `(R, h)` samples; slopes by local Lagrange differentiation in `ln R`.
    pub fn from_samples(p: u32, q: u32, r: Vec<f64>, h: Vec<f64>) -> Result<Self> {
        if r.len() != h.len() || r.len() < 5 || r.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(ConeError::invalid("graph needs >= 5 samples with increasing R"));
        }
        let lr: Vec<f64> = r.iter().map(|v| v.ln()).collect();
        let n = r.len();
        let dh = (0..n)
            .map(|i| {
                let lo = i.saturating_sub(2).min(n - 5);
                let xs = &lr[lo..lo + 5];
                let ys = &h[lo..lo + 5];
                lagrange_derivative(xs, ys, lr[i]) / r[i]
            })
            .collect();
        Ok(Self { p, q, r, h, dh })
    }

    pub fn decades(&self) -> f64 {
        (self.r[self.r.len() - 1] / self.r[0]).log10()
    }

    /// `(h, dh/dR)` at `R` by cubic Hermite in `ln R`.
    pub fn eval(&self, big_r: f64) -> (f64, f64) {
        let lr: Vec<f64> = self.r.iter().map(|v| v.ln()).collect();
        self.eval_with(&lr, big_r)
    }

    fn eval_with(&self, lr: &[f64], big_r: f64) -> (f64, f64) {
        let slopes: Vec<f64> = self.dh.iter().zip(&self.r).map(|(d, r)| d * r).collect();
        let (v, d) = interp::hermite(lr, &self.h, &slopes, big_r.ln());
        (v, d / big_r)
    }

    /// `int_a^b h^2 R^w dR`.
    pub fn square_integral(&self, a: f64, b: f64, w: f64) -> Result<f64> {
        let (lo, hi) = (self.r[0], self.r[self.r.len() - 1]);
        if a < lo * (1.0 - 1e-12) || b > hi * (1.0 + 1e-12) || !(b > a) {
            return Err(ConeError::invalid(format!("window [{a:e}, {b:e}] outside graph range [{lo:e}, {hi:e}]")));
        }
        let lr: Vec<f64> = self.r.iter().map(|v| v.ln()).collect();
        let slopes: Vec<f64> = self.dh.iter().zip(&self.r).map(|(d, r)| d * r).collect();
        let (ta, tb) = (a.ln(), b.ln());
        let mut cuts = vec![ta];
        cuts.extend(lr.iter().copied().filter(|t| *t > ta && *t < tb));
        cuts.push(tb);
        let f = |tau: f64| {
            let v = interp::hermite(&lr, &self.h, &slopes, tau).0;
            v * v * ((w + 1.0) * tau).exp()
        };
        let opts = QuadOptions { epsabs: 0.0, epsrel: 1e-12, max_intervals: 200 };
        let mut acc = 0.0;
        for c in cuts.windows(2) {
            acc += integrate(f, c[0], c[1], opts)?;
        }
        Ok(acc)
    }
}

fn lagrange_derivative(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let m = xs.len();
    let mut acc = 0.0;
    for j in 0..m {
        let mut denom = 1.0;
        for k in 0..m {
            if k != j {
                denom *= xs[j] - xs[k];
            }
        }
        let mut num = 0.0;
        for l in 0..m {
            if l == j {
                continue;
            }
            let mut prod = 1.0;
            for k in 0..m {
                if k != j && k != l {
                    prod *= x - xs[k];
                }
            }
            num += prod;
        }
        acc += ys[j] * num / denom;
    }
    acc
}

/// Graph of the profile tail over the cone: `R` along the cone line, `h` the
/// signed offset (positive on the `y`-heavy side).
pub fn leaf_graph_over_cone(profile: &ProfileCurve) -> Result<LeafGraph> {
    let n = profile.len();
    let pc = cone_angle(profile.p, profile.q);
    let mut start = n - 1;
    while start > 0 {
        let i = start - 1;
        let e = profile.theta[i] - pc;
        let rr = |k: usize| profile.radius(k) * profile.delta[k].cos();
        if e.cos() > 0.0 && rr(i) < rr(i + 1) {
            start = i;
        } else {
            break;
        }
    }
    let r_end = profile.radius(n - 1);
    let x0 = profile.x0.max(profile.radius(0));
    if r_end < 10.0 * x0 || n - start < 5 {
        return Err(ConeError::invalid(format!(
            "profile tail too short: reaches radius {r_end:e}, needs at least {:e}",
            10.0 * x0
        )));
    }
    let mut r = Vec::with_capacity(n - start);
    let mut h = Vec::with_capacity(n - start);
    let mut dh = Vec::with_capacity(n - start);
    for i in start..n {
        let rad = profile.radius(i);
        let d = profile.delta[i];
        r.push(rad * d.cos());
        h.push(rad * d.sin());
        dh.push(profile.epsilon[i].tan());
    }
    Ok(LeafGraph { p: profile.p, q: profile.q, r, h, dh })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RateLabel {
    StrictRate,
    SlowRate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LeafRate {
    pub rate: RateReport,
    pub label: Option<RateLabel>,
    pub gamma_plus: f64,
    pub gamma_minus: f64,
}

/// Dyadic windows covering the last `decades` of the graph.
pub fn tail_window_starts(graph: &LeafGraph, decades: f64) -> Vec<f64> {
    let hi = graph.r[graph.r.len() - 1];
    let lo = (hi * 10f64.powf(-decades)).max(graph.r[0]);
    let mut out = Vec::new();
    let mut t = hi / 2.0;
    while t >= lo * (1.0 - 1e-12) {
        out.push(t);
        t /= 2.0;
    }
    out.reverse();
    out
}

pub const RATE_DECADES: f64 = 3.0;

/// Asymptotic rate of `h` at infinity over the last three decades, labelled
/// against the first-mode indicial roots.
pub fn fit_leaf_rate(graph: &LeafGraph, cone: &ConeDescriptor) -> Result<LeafRate> {
    fit_leaf_rate_with(graph, cone, RATE_DECADES, RateOptions::default())
}

pub fn fit_leaf_rate_with(graph: &LeafGraph, cone: &ConeDescriptor, decades: f64, options: RateOptions) -> Result<LeafRate> {
    if graph.decades() < decades - 1e-9 {
        return Err(ConeError::invalid(format!(
            "graph spans {:.3} decades, the fit needs {decades}",
            graph.decades()
        )));
    }
    let starts = tail_window_starts(graph, decades);
    let moments = starts
        .iter()
        .map(|&t| graph.square_integral(t, 2.0 * t, -1.0))
        .collect::<Result<Vec<f64>>>()?;
    let rate = fit_window_moments(cone, End::Infinity, &starts, &moments, options)?;
    let md = indicial_roots(cone, 1)?;
    let label = match rate.snapped {
        Some(g) if !md.complex && g == md.gamma_plus => Some(RateLabel::StrictRate),
        Some(g) if !md.complex && g == md.gamma_minus => Some(RateLabel::SlowRate),
        _ => None,
    };
    Ok(LeafRate { rate, label, gamma_plus: md.gamma_plus, gamma_minus: md.gamma_minus })
}

/// Both one-sided leaves of `C^{p,q}` through distance `x0`, with rates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SidedLeaves {
    pub x_heavy: LeafRate,
    pub y_heavy: LeafRate,
    /// Both sides snap to the fast exponent.
    pub strict_rate_both_sides: bool,
}

pub fn sided_leaf_rates(p: u32, q: u32, x0: f64, s_max: f64, tol: f64) -> Result<SidedLeaves> {
    let cone = make_simons_cone(p, q)?;
    let lower = shoot_leaf(p, q, x0, s_max, tol)?;
    let upper = shoot_leaf(q, p, x0, s_max, tol)?.exchange_axes();
    let x_heavy = fit_leaf_rate(&leaf_graph_over_cone(&lower)?, &cone)?;
    let y_heavy = fit_leaf_rate(&leaf_graph_over_cone(&upper)?, &cone)?;
    let strict = x_heavy.label == Some(RateLabel::StrictRate) && y_heavy.label == Some(RateLabel::StrictRate);
    Ok(SidedLeaves { x_heavy, y_heavy, strict_rate_both_sides: strict })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Disjointness {
    pub separation: f64,
    pub worst_pair: (f64, f64),
    pub band: (f64, f64),
}

/// Smallest distance between dilated copies of the leaf over the common
/// radius band where all of them are graphs over the cone.
pub fn foliation_disjointness(profile: &ProfileCurve, scales: &[f64]) -> Result<Disjointness> {
    if scales.len() < 2 || scales.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
        return Err(ConeError::invalid("need at least two positive scales"));
    }
    let graph = leaf_graph_over_cone(profile)?;
    let (g_lo, g_hi) = (graph.r[0], graph.r[graph.r.len() - 1]);
    let smax = scales.iter().cloned().fold(0.0, f64::max);
    let smin = scales.iter().cloned().fold(f64::INFINITY, f64::min);
    let (b_lo, b_hi) = (smax * g_lo, smin * g_hi);
    if !(b_hi > b_lo) {
        return Err(ConeError::invalid("scaled graphs share no common radius band"));
    }
    let lr: Vec<f64> = graph.r.iter().map(|v| v.ln()).collect();
    let nodes = 4000;
    let mut best = f64::INFINITY;
    let mut pair = (scales[0], scales[1]);
    for (i, &a) in scales.iter().enumerate() {
        for &b in &scales[i + 1..] {
            let mut sep = f64::INFINITY;
            for k in 0..=nodes {
                let big_r = (b_lo.ln() + (b_hi / b_lo).ln() * k as f64 / nodes as f64).exp().clamp(b_lo, b_hi);
                let (ha, da) = graph.eval_with(&lr, (big_r / a).clamp(g_lo, g_hi));
                let (hb, db) = graph.eval_with(&lr, (big_r / b).clamp(g_lo, g_hi));
                let lip = da.abs().max(db.abs());
                sep = sep.min((a * ha - b * hb).abs() / (1.0 + lip * lip).sqrt());
            }
            if sep < best {
                best = sep;
                pair = (a, b);
            }
        }
    }
    Ok(Disjointness { separation: best, worst_pair: pair, band: (b_lo, b_hi) })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindowEnergy {
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub minimum: f64,
}

/// `R^{-2 gamma_1^- - n} int_{A_{R,2R}} h^2` on dyadic windows over the last
/// `decades` of the graph; the annulus integral is `|S| int_R^{2R} h^2 t^{n-1} dt`.
pub fn leaf_window_energy(graph: &LeafGraph, cone: &ConeDescriptor, decades: f64) -> Result<WindowEnergy> {
    let md = indicial_roots(cone, 1)?;
    if md.complex {
        return Err(ConeError::Unsupported("first mode has complex indicial roots".into()));
    }
    let area = cone
        .cross_section_area()
        .ok_or_else(|| ConeError::Unsupported("cross-section area is only known for Simons cones".into()))?;
    let n = cone.n as f64;
    let starts = tail_window_starts(graph, decades);
    let mut values = Vec::with_capacity(starts.len());
    for &r in &starts {
        let mass = area * graph.square_integral(r, 2.0 * r, n - 1.0)?;
        values.push(r.powf(-2.0 * md.gamma_minus - n) * mass);
    }
    let minimum = values.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(WindowEnergy { radii: starts, values, minimum })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rhs_examples() {
        let pc = cone_angle(3, 5);
        let (s, c) = pc.sin_cos();
        assert!(profile_rhs(3, 5, [c, s, pc]).unwrap()[2].abs() < 1e-14);
        let d = profile_rhs(2, 2, [1.0, 1.0, std::f64::consts::FRAC_PI_4]).unwrap();
        assert!(d[2].abs() < 1e-15);
        let d = profile_rhs(3, 3, [1.0, 2.0, 0.0]).unwrap();
        assert!((d[2] - 1.5).abs() < 1e-15);
        assert!(profile_rhs(3, 3, [1.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn polar_rhs_matches_cartesian() {
        let (p, q) = (3.0, 5.0);
        let pc = cone_angle(3, 5);
        for (d, e) in [(0.01, -0.02), (-0.1, 0.05), (0.2, 0.3)] {
            let r = 7.0;
            let (x, y, th) = (r * (pc + d).cos(), r * (pc + d).sin(), pc + e);
            let c = profile_rhs(3, 5, [x, y, th]).unwrap();
            let v = polar_rhs(p, q, pc, r.ln(), &[d, e, 0.0]);
            let psi = th - (pc + d);
            // d(theta)/d(rho) = r theta' / cos(psi)
            assert!((v[1] - r * c[2] / psi.cos()).abs() < 1e-13);
            assert!((v[0] - psi.tan()).abs() < 1e-15);
        }
    }

    #[test]
    fn cone_line_has_no_crossings() {
        let radii: Vec<f64> = (0..200).map(|i| 1.0 + i as f64 * 0.7).collect();
        let line = ProfileCurve::cone_line(3, 3, &radii).unwrap();
        assert_eq!(count_cone_crossings(&line).count, 0);
        let line = ProfileCurve::cone_line(2, 5, &radii).unwrap();
        assert_eq!(count_cone_crossings(&line).count, 0);
        let g = leaf_graph_over_cone(&line).unwrap();
        assert!(g.h.iter().all(|h| h.abs() < 1e-12 * 140.0));
    }

    #[test]
    fn simons_33_leaf_is_one_sided() {
        let leaf = shoot_leaf(3, 3, 1.0, 1e4, 1e-10).unwrap();
        assert_eq!(count_cone_crossings(&leaf).count, 0);
        assert_eq!(leaf.tail_side(), Some(Side::XHeavy));
        for i in 0..leaf.len() {
            assert!(leaf.y[i] >= 0.0 && leaf.x[i] > 0.0);
        }
        let g = leaf_graph_over_cone(&leaf).unwrap();
        assert!(g.h.iter().all(|h| *h < 0.0));
        let tail = &g.h[g.h.len() / 2..];
        assert!(tail.windows(2).all(|w| w[1].abs() < w[0].abs()));
        let cone = make_simons_cone(3, 3).unwrap();
        let fit = fit_leaf_rate(&g, &cone).unwrap();
        assert_eq!(fit.label, Some(RateLabel::StrictRate));
        assert!((fit.rate.raw_exponent + 2.0).abs() < 0.04, "{}", fit.rate.raw_exponent);
    }

    #[test]
    fn simons_11_leaf_oscillates() {
        let leaf = shoot_leaf(1, 1, 1.0, 1e4, 1e-10).unwrap();
        let c = count_cone_crossings(&leaf);
        assert!(c.count >= 3, "{c:?}");
        let target = (std::f64::consts::PI / 1.75f64.sqrt()).exp();
        for r in c.ratios().iter().rev().take(2) {
            assert!((r / target - 1.0).abs() < 0.05, "{r}");
        }
    }

    #[test]
    fn integrator_derivative_matches_rhs() {
        let leaf = shoot_leaf(2, 4, 1.0, 1e3, 1e-10).unwrap();
        let d = leaf.dtheta.as_ref().unwrap();
        for i in 1..leaf.len() {
            let f = profile_rhs(2, 4, [leaf.x[i], leaf.y[i], leaf.theta[i]]).unwrap();
            assert!((f[2] - d[i]).abs() < 1e-8, "{i}: {} vs {}", f[2], d[i]);
        }
    }

    #[test]
    fn reflected_leaf_has_opposite_offset() {
        let lower = shoot_leaf(2, 5, 1.0, 2e3, 1e-10).unwrap();
        let upper = shoot_leaf(5, 2, 1.0, 2e3, 1e-10).unwrap().exchange_axes();
        assert_eq!(upper.p, 2);
        let gl = leaf_graph_over_cone(&lower).unwrap();
        let gu = leaf_graph_over_cone(&upper).unwrap();
        assert!(gl.h.iter().all(|h| *h < 0.0));
        assert!(gu.h.iter().all(|h| *h > 0.0));
    }

    #[test]
    fn synthetic_rates() {
        let cone = make_simons_cone(3, 3).unwrap();
        let radii: Vec<f64> = (0..=256).map(|i| 10f64.powf(1.0 + i as f64 / 64.0)).collect();
        let g = LeafGraph::synthetic(3, 3, &radii, |r| (r.powi(-3), -3.0 * r.powi(-4))).unwrap();
        let fit = fit_leaf_rate(&g, &cone).unwrap();
        assert_eq!(fit.label, Some(RateLabel::SlowRate));
        let g = LeafGraph::synthetic(3, 3, &radii, |r| (r.powi(-2) + r.powi(-3), -2.0 * r.powi(-3) - 3.0 * r.powi(-4))).unwrap();
        let fit = fit_leaf_rate(&g, &cone).unwrap();
        assert_eq!(fit.rate.snapped, Some(-2.0));
        let short = LeafGraph::synthetic(3, 3, &radii[..64], |r| (r.powi(-3), -3.0 * r.powi(-4))).unwrap();
        assert!(fit_leaf_rate(&short, &cone).is_err());
    }

    #[test]
    fn sampled_graph_slopes() {
        let radii: Vec<f64> = (0..=128).map(|i| 10f64.powf(i as f64 / 64.0)).collect();
        let h: Vec<f64> = radii.iter().map(|r| r.powi(-2)).collect();
        let g = LeafGraph::from_samples(3, 3, radii.clone(), h).unwrap();
        for (r, d) in radii.iter().zip(&g.dh) {
            assert!((d / (-2.0 * r.powi(-3)) - 1.0).abs() < 1e-4);
        }
    }

    #[test]
    fn disjointness_examples() {
        let leaf = shoot_leaf(3, 3, 1.0, 1e3, 1e-10).unwrap();
        assert!(foliation_disjointness(&leaf, &[1.0, 2.0]).unwrap().separation > 0.0);
        assert_eq!(foliation_disjointness(&leaf, &[1.0, 1.0]).unwrap().separation, 0.0);
        let seps: Vec<f64> = [1.1, 1.01, 1.001]
            .iter()
            .map(|s| foliation_disjointness(&leaf, &[1.0, *s]).unwrap().separation)
            .collect();
        assert!(seps.iter().all(|s| *s > 0.0));
        assert!(seps.windows(2).all(|w| w[1] < w[0]));
    }
}
