//! Dirichlet spectra of `-L_C` on the truncated cone and Green's functions at the tip.

use serde::Serialize;

use crate::cone::ConeDescriptor;
use crate::error::{ConeError, Result};
use crate::modes::{indicial_roots, mode_residual, ModeData};
use crate::numeric::dop853::{Dop853, StepControl};
use crate::numeric::grid::LogGrid;
use crate::numeric::tridiag;
use crate::radial::{PowerTerm, Provenance, RadialFunction};

pub const DEFAULT_R_MIN: f64 = 1e-6;

/// Output of [`mode_eigen`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenResult {
    pub mode: usize,
    /// Richardson-extrapolated eigenvalues.
    pub lambdas: Vec<f64>,
    /// Eigenvalues on the finer grid, before extrapolation.
    pub raw_lambdas: Vec<f64>,
    pub grid: usize,
    pub r_min: f64,
    /// Bound on the discretization error: `max_j |lambda_j(2N) - lambda_j(N)|`.
    pub extrapolation_error: f64,
    /// Change of `lambda_1` when the inner cutoff grows tenfold.
    pub cutoff_sensitivity: f64,
    #[serde(skip)]
    pub eigenfunctions: Vec<RadialFunction>,
}

struct Discrete {
    diag: Vec<f64>,
    off: Vec<f64>,
    mass: Vec<f64>,
    t: Vec<f64>,
}

/// Conservative finite differences for `-(e^{2bt} psi')' = lambda e^{(2b+2)t} psi`
/// on `[ln r_min, 0]`, Neumann at the left end, Dirichlet at `t = 0`.
fn discretize(b: f64, r_min: f64, cells: usize) -> Discrete {
    let t0 = r_min.ln();
    let h = -t0 / cells as f64;
    let t: Vec<f64> = (0..=cells).map(|i| t0 + i as f64 * h).collect();
    let p_half = |i: usize| (2.0 * b * (t[i] + 0.5 * h)).exp();
    let unknowns = cells;
    let mut kd = vec![0.0; unknowns];
    let mut ko = vec![0.0; unknowns.saturating_sub(1)];
    let mut mass = vec![0.0; unknowns];
    for i in 0..unknowns {
        let w = ((2.0 * b + 2.0) * t[i]).exp();
        let right = p_half(i) / h;
        if i == 0 {
            kd[i] = right;
            mass[i] = 0.5 * h * w;
        } else {
            kd[i] = p_half(i - 1) / h + right;
            mass[i] = h * w;
        }
        if i + 1 < unknowns {
            ko[i] = -right;
        }
    }
    let diag: Vec<f64> = kd.iter().zip(&mass).map(|(k, m)| k / m).collect();
    let off: Vec<f64> = (0..ko.len()).map(|i| ko[i] / (mass[i] * mass[i + 1]).sqrt()).collect();
    Discrete { diag, off, mass, t }
}

/// Generalized eigenvector by forward recurrence from the Neumann end, where
/// the regular branch dominates; normalized so that `sum m_i psi_i^2 = 1`.
fn tip_recurrence(d: &Discrete, lambda: f64) -> Vec<f64> {
    let n = d.diag.len();
    // Rows of K - lambda M in the unsymmetrized form.
    let kd: Vec<f64> = d.diag.iter().zip(&d.mass).map(|(a, m)| a * m).collect();
    let ko: Vec<f64> = (0..n - 1).map(|i| d.off[i] * (d.mass[i] * d.mass[i + 1]).sqrt()).collect();
    let mut psi = vec![0.0; n];
    psi[0] = 1.0;
    if n > 1 {
        psi[1] = (lambda * d.mass[0] - kd[0]) * psi[0] / ko[0];
    }
    for i in 1..n - 1 {
        psi[i + 1] = ((lambda * d.mass[i] - kd[i]) * psi[i] - ko[i - 1] * psi[i - 1]) / ko[i];
    }
    let norm = psi.iter().zip(&d.mass).map(|(p, m)| m * p * p).sum::<f64>().sqrt();
    psi.iter_mut().for_each(|p| *p /= norm);
    psi
}

fn lowest(b: f64, r_min: f64, cells: usize, count: usize) -> Vec<f64> {
    let d = discretize(b, r_min, cells);
    (0..count).map(|j| tridiag::eigenvalue(&d.diag, &d.off, j)).collect()
}

/// First `count` Dirichlet eigenvalues of the mode-`k` operator on `B_1`,
/// selecting the `r^{gamma_k^+}` branch at the tip.
pub fn mode_eigen(cone: &ConeDescriptor, k: usize, count: usize, grid_size: usize) -> Result<EigenResult> {
    mode_eigen_with_cutoff(cone, k, count, grid_size, DEFAULT_R_MIN)
}

pub fn mode_eigen_with_cutoff(cone: &ConeDescriptor, k: usize, count: usize, grid_size: usize, r_min: f64) -> Result<EigenResult> {
    let md = indicial_roots(cone, k)?;
    if md.complex {
        return Err(ConeError::Unsupported(format!(
            "mode {k} has complex indicial roots; the tip branch is not defined"
        )));
    }
    if count == 0 || grid_size < 16 * count {
        return Err(ConeError::invalid("grid_size must be at least 16 * count and count >= 1"));
    }
    if !(r_min > 0.0 && r_min < 1e-2) {
        return Err(ConeError::invalid("inner cutoff must lie in (0, 1e-2)"));
    }
    let coarse = lowest(md.b, r_min, grid_size, count);
    let fine = lowest(md.b, r_min, 2 * grid_size, count);
    let lambdas: Vec<f64> = coarse.iter().zip(&fine).map(|(c, f)| (4.0 * f - c) / 3.0).collect();
    let extrapolation_error = coarse
        .iter()
        .zip(&fine)
        .map(|(c, f)| (f - c).abs())
        .fold(0.0, f64::max);
    if extrapolation_error > 1e-2 * lambdas.last().unwrap().abs() {
        return Err(ConeError::invalid(format!(
            "eigenvalue extrapolation did not converge (change {extrapolation_error:e}); raise grid_size"
        )));
    }
    let shifted = lowest(md.b, 10.0 * r_min, 2 * grid_size, 1);
    let cutoff_sensitivity = (shifted[0] - fine[0]).abs();

    let d = discretize(md.b, r_min, 2 * grid_size);
    let cells = 2 * grid_size;
    let grid = LogGrid::new(r_min, 1.0, cells + 1)?;
    let mut eigenfunctions = Vec::with_capacity(count);
    for lam in &fine {
        let mut psi = tip_recurrence(&d, *lam);
        psi.push(0.0);
        let h = d.t[1] - d.t[0];
        let mut value = Vec::with_capacity(cells + 1);
        let mut dvalue = Vec::with_capacity(cells + 1);
        for i in 0..=cells {
            let r = grid.r(i);
            let psi_t = if i == 0 {
                0.0
            } else if i == cells {
                (3.0 * psi[i] - 4.0 * psi[i - 1] + psi[i - 2]) / (2.0 * h)
            } else {
                (psi[i + 1] - psi[i - 1]) / (2.0 * h)
            };
            let p = r.powf(md.gamma_plus);
            value.push(p * psi[i]);
            dvalue.push(p / r * (md.gamma_plus * psi[i] + psi_t));
        }
        let mut rf = RadialFunction::from_samples(k, md.mult, grid, value, dvalue, Provenance::Eigen)?;
        rf.exponents = vec![md.gamma_plus];
        eigenfunctions.push(rf);
    }
    Ok(EigenResult {
        mode: k,
        lambdas,
        raw_lambdas: fine,
        grid: grid_size,
        r_min,
        extrapolation_error,
        cutoff_sensitivity,
        eigenfunctions,
    })
}

/// Bounded radial potential `h` for `L^h = L_C - h`.
pub struct Potential {
    f: Box<dyn Fn(f64) -> f64 + Sync + Send>,
    pub bound: f64,
    pub label: String,
    zero: bool,
}

impl Potential {
    pub fn zero() -> Self {
        Self { f: Box::new(|_| 0.0), bound: 0.0, label: "0".into(), zero: true }
    }

    pub fn constant(value: f64) -> Self {
        Self {
            f: Box::new(move |_| value),
            bound: value.abs(),
            label: format!("{value}"),
            zero: value == 0.0,
        }
    }

    pub fn custom(f: impl Fn(f64) -> f64 + Sync + Send + 'static, bound: f64, label: impl Into<String>) -> Self {
        Self { f: Box::new(f), bound, label: label.into(), zero: false }
    }

    pub fn eval(&self, r: f64) -> f64 {
        (self.f)(r)
    }

    pub fn is_zero(&self) -> bool {
        self.zero
    }
}

/// Sampling and accuracy options for tip profiles.
#[derive(Debug, Clone, Copy)]
pub struct TipGrid {
    /// Inner radius is `r2 * 2^-octaves`.
    pub octaves: usize,
    pub per_octave: usize,
    pub rtol: f64,
}

impl Default for TipGrid {
    fn default() -> Self {
        Self { octaves: 20, per_octave: 16, rtol: 1e-13 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GreenProfile {
    pub profile: RadialFunction,
    pub potential: String,
    pub potential_bound: f64,
    pub r2: f64,
    pub normalization_point: f64,
    pub normalization_value: f64,
    pub residual: f64,
    pub gamma_minus: f64,
}

fn check_tip_inputs(cone: &ConeDescriptor, h: &Potential, r2: f64) -> Result<ModeData> {
    if !(r2 > 0.0 && r2.is_finite()) {
        return Err(ConeError::invalid("r2 must be positive"));
    }
    if !h.bound.is_finite() {
        return Err(ConeError::invalid("potential bound must be finite"));
    }
    let md = indicial_roots(cone, 1)?;
    if md.complex {
        return Err(ConeError::NotAdmissible(
            "mode 1 has complex indicial roots (unstable cone); no positive Green's function".into(),
        ));
    }
    Ok(md)
}

fn rhs<'a>(md: &ModeData, h: &'a Potential) -> impl Fn(f64, &[f64; 2]) -> [f64; 2] + 'a {
    let nm2 = md.n as f64 - 2.0;
    let mu = md.mu;
    move |t: f64, y: &[f64; 2]| {
        let r = t.exp();
        [y[1], -nm2 * y[1] + (mu + h.eval(r) * r * r) * y[0]]
    }
}

/// Integrates the `t`-form of the mode-1 equation from `start` through the grid
/// nodes in the given order, returning `(G, r G')` at each node.
fn shoot(md: &ModeData, h: &Potential, grid: &LogGrid, order: &[usize], t_start: f64, y0: [f64; 2], rtol: f64) -> Result<Vec<(f64, f64)>> {
    let f = rhs(md, h);
    let mut ctl = StepControl::new(rtol, 1e-30);
    ctl.h_max = grid.step();
    let mut s = Dop853::new(&f, t_start, y0, ctl);
    let mut out = vec![(0.0, 0.0); grid.n];
    for &i in order {
        let ti = grid.t(i);
        if ti != s.t {
            s.advance_to(&f, ti)?;
        }
        out[i] = (s.y[0], s.y[1]);
    }
    Ok(out)
}

/// Positive mode-1 solution of `L^h G = 0` on `(0, r2)` with `G(r2) = 0`,
/// normalized by `G(r2/2) = 1`.
pub fn greens_function(cone: &ConeDescriptor, h: &Potential, r2: f64, tip: TipGrid) -> Result<GreenProfile> {
    let md = check_tip_inputs(cone, h, r2)?;
    let grid = LogGrid::dyadic(r2 * 2f64.powi(-(tip.octaves as i32)), tip.octaves, tip.per_octave)?;
    let n = grid.n;
    let order: Vec<usize> = (0..n).rev().collect();
    let raw = shoot(&md, h, &grid, &order, r2.ln(), [0.0, -r2], tip.rtol)?;
    let half = n - 1 - tip.per_octave;
    let scale = raw[half].0;
    for i in 0..n - 1 {
        if raw[i].0 * scale <= 0.0 || !raw[i].0.is_finite() {
            return Err(ConeError::SignChange { r: grid.r(i) });
        }
    }
    let r = grid.points();
    let value: Vec<f64> = raw.iter().map(|v| v.0 / scale).collect();
    let dvalue: Vec<f64> = raw.iter().zip(&r).map(|(v, r)| v.1 / scale / r).collect();
    let mut profile = RadialFunction::from_samples(1, md.mult, grid, value, dvalue, Provenance::Green)?;
    profile.exponents = vec![md.gamma_minus];
    let extra: Vec<f64> = r.iter().zip(&profile.value).map(|(r, g)| -h.eval(*r) * r * r * g).collect();
    let residual = mode_residual(&md, &profile, None, Some(&extra));
    Ok(GreenProfile {
        profile,
        potential: h.label.clone(),
        potential_bound: h.bound,
        r2,
        normalization_point: r2 / 2.0,
        normalization_value: 1.0,
        residual,
        gamma_minus: md.gamma_minus,
    })
}

/// Closed form of the `h = 0` Green profile, for comparison.
pub fn green_closed_form(md: &ModeData, r2: f64) -> Vec<PowerTerm> {
    if md.resonant {
        // r^a ln(r2 / r) normalized at r2 / 2
        let a = md.gamma_plus;
        let norm = (r2 / 2.0).powf(a) * 2f64.ln();
        vec![
            PowerTerm::new(r2.ln() / norm, a, 0),
            PowerTerm::new(-1.0 / norm, a, 1),
        ]
    } else {
        let (gp, gm) = (md.gamma_plus, md.gamma_minus);
        let d = 2f64.powf(-gm) - 2f64.powf(-gp);
        vec![
            PowerTerm::new(r2.powf(-gm) / d, gm, 0),
            PowerTerm::new(-r2.powf(-gp) / d, gp, 0),
        ]
    }
}

/// Mode-1 solution with value 1 at `r2` on the `r^{gamma_1^+}` branch.
pub fn boundary_one_solution(cone: &ConeDescriptor, h: &Potential, r2: f64, tip: TipGrid) -> Result<RadialFunction> {
    let md = check_tip_inputs(cone, h, r2)?;
    let grid = LogGrid::dyadic(r2 * 2f64.powi(-(tip.octaves as i32)), tip.octaves, tip.per_octave)?;
    let n = grid.n;
    let r0 = grid.r_lo;
    let gp = md.gamma_plus;
    let c = h.eval(0.0) / (4.0 * (md.b + 1.0));
    let y0 = [
        r0.powf(gp) * (1.0 + c * r0 * r0),
        r0.powf(gp) * (gp * (1.0 + c * r0 * r0) + 2.0 * c * r0 * r0),
    ];
    let raw = if h.is_zero() {
        (0..n).map(|i| {
            let r = grid.r(i);
            (r.powf(gp), gp * r.powf(gp))
        }).collect()
    } else {
        let order: Vec<usize> = (0..n).collect();
        shoot(&md, h, &grid, &order, r0.ln(), y0, tip.rtol)?
    };
    let scale = raw[n - 1].0;
    let r = grid.points();
    for i in 0..n {
        if raw[i].0 * scale <= 0.0 {
            return Err(ConeError::SignChange { r: r[i] });
        }
    }
    let value: Vec<f64> = raw.iter().map(|v| v.0 / scale).collect();
    let dvalue: Vec<f64> = raw.iter().zip(&r).map(|(v, r)| v.1 / scale / r).collect();
    let mut rf = RadialFunction::from_samples(1, md.mult, grid, value, dvalue, Provenance::BoundaryOne)?;
    rf.exponents = vec![gp];
    if h.is_zero() {
        rf.closed_form = Some(vec![PowerTerm::new(r2.powf(-gp), gp, 0)]);
    }
    Ok(rf)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RescalingReport {
    pub scales: Vec<f64>,
    pub deviations: Vec<f64>,
    /// Whether deviations decrease with the scale; `None` for a single scale.
    pub monotone: Option<bool>,
}

/// Sup-distance on `[1, 2]` between `G(r x) / G(r)` and `x^{gamma_1^-}` for each scale `r`.
pub fn green_rescaling_limit(profile: &GreenProfile, scales: &[f64]) -> Result<RescalingReport> {
    if scales.is_empty() {
        return Err(ConeError::invalid("no scales given"));
    }
    let p = &profile.profile;
    let mut deviations = Vec::with_capacity(scales.len());
    for &s in scales {
        if !(s > 0.0) || s < p.grid.r_lo * (1.0 - 1e-12) || 2.0 * s > profile.r2 * (1.0 + 1e-12) {
            return Err(ConeError::invalid(format!(
                "scale {s:e} not resolved by the profile on [{:e}, {:e}]",
                p.grid.r_lo, profile.r2
            )));
        }
        let g0 = p.eval(s)?.0;
        let mut worst: f64 = 0.0;
        for j in 0..=64 {
            let x = 1.0 + j as f64 / 64.0;
            let g = p.eval((s * x).min(p.grid.r_hi))?.0;
            worst = worst.max((g / g0 - x.powf(profile.gamma_minus)).abs());
        }
        deviations.push(worst);
    }
    let monotone = (scales.len() > 1).then(|| {
        let mut idx: Vec<usize> = (0..scales.len()).collect();
        idx.sort_by(|a, b| scales[*b].total_cmp(&scales[*a]));
        idx.windows(2).all(|w| deviations[w[1]] < deviations[w[0]])
    });
    Ok(RescalingReport { scales: scales.to_vec(), deviations, monotone })
}
