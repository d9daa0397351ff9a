//! Indicial analysis and mode-wise solution of `L_C u = f`.

use serde::Serialize;

use crate::cone::{cross_section_spectrum, ConeDescriptor, ConeKind, Rational, SpectralMode};
use crate::error::{ConeError, Result};
use crate::numeric::grid::LogGrid;
use crate::numeric::interp;
use crate::numeric::quadrature::{integrate, integrate_from_neg_infinity, integrate_to_infinity, QuadOptions};
use crate::radial::{PowerTerm, Provenance, RadialFunction};

/// Radial source term `f_k(r)`.
pub type Source<'a> = &'a (dyn Fn(f64) -> f64 + Sync);

/// Indicial data of one distinct cross-section eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeData {
    pub k: usize,
    pub n: u32,
    pub mu: f64,
    pub mult: u64,
    /// `sqrt(((n-2)/2)^2 + mu)`, or its imaginary magnitude when `complex`.
    pub b: f64,
    pub complex: bool,
    pub gamma_plus: f64,
    pub gamma_minus: f64,
    pub resonant: bool,
    /// `b` is an exact rational (so the roots are exact).
    pub exact: bool,
}

impl ModeData {
    pub fn from_mu(k: usize, n: u32, mu: f64, mult: u64, mu_exact: Option<Rational>) -> Self {
        let half = (n as f64 - 2.0) / 2.0;
        let (disc, exact_b) = match mu_exact {
            Some(m) => {
                let h = Rational::new(n as i64 - 2, 2);
                let d = h * h + m;
                (crate::cone::to_f64(d), rational_sqrt(d))
            }
            None => (half * half + mu, None),
        };
        let complex = disc < 0.0;
        let b = match exact_b {
            Some(s) => crate::cone::to_f64(s),
            None => disc.abs().sqrt(),
        };
        let (gp, gm) = if complex { (-half, -half) } else { (-half + b, -half - b) };
        Self {
            k,
            n,
            mu,
            mult,
            b,
            complex,
            gamma_plus: gp,
            gamma_minus: gm,
            resonant: disc == 0.0,
            exact: exact_b.is_some(),
        }
    }

    fn from_spectral(k: usize, n: u32, m: &SpectralMode) -> Self {
        Self::from_mu(k, n, m.mu, m.mult, m.mu_exact)
    }

    pub fn half_gap(&self) -> f64 {
        (self.n as f64 - 2.0) / 2.0
    }

    /// Oscillatory representation `r^amplitude * cos(frequency * ln r + phase)` of complex modes.
    pub fn amplitude_phase(&self) -> Option<(f64, f64)> {
        self.complex.then(|| (-self.half_gap(), self.b))
    }

    fn require_real(&self) -> Result<()> {
        if self.complex {
            return Err(ConeError::Unsupported(format!(
                "mode {} has complex indicial roots -{} +/- {}i; use the oscillatory form r^{}*cos({} ln r + phase)",
                self.k,
                self.half_gap(),
                self.b,
                -self.half_gap(),
                self.b
            )));
        }
        Ok(())
    }
}

fn integer_sqrt(v: i64) -> Option<i64> {
    if v < 0 {
        return None;
    }
    let s = (v as f64).sqrt().round() as i64;
    (s.saturating_sub(1)..=s + 1).find(|c| *c >= 0 && c.checked_mul(*c) == Some(v))
}

fn rational_sqrt(d: Rational) -> Option<Rational> {
    let n = integer_sqrt(*d.numer())?;
    let m = integer_sqrt(*d.denom())?;
    Some(Rational::new(n, m))
}

/// Indicial data for the first `count` distinct eigenvalues.
pub fn mode_list(cone: &ConeDescriptor, count: usize) -> Result<Vec<ModeData>> {
    let s = cross_section_spectrum(cone, count)?;
    Ok(s.modes
        .iter()
        .enumerate()
        .map(|(i, m)| ModeData::from_spectral(i + 1, cone.n, m))
        .collect())
}

/// Roots of `gamma^2 + (n-2) gamma - mu_k = 0` for the `k`-th distinct eigenvalue.
pub fn indicial_roots(cone: &ConeDescriptor, k: usize) -> Result<ModeData> {
    if k < 1 {
        return Err(ConeError::invalid("mode index is 1-based"));
    }
    if let ConeKind::Custom { modes } = &cone.kind {
        if k > modes.len() {
            return Err(ConeError::invalid(format!(
                "mode {k} out of range (spectrum has {} modes)",
                modes.len()
            )));
        }
    }
    Ok(mode_list(cone, k)?[k - 1])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Branch {
    Plus,
    Minus,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GammaEntry {
    pub gamma: f64,
    pub sources: Vec<(usize, Branch)>,
}

/// Real indicial exponents inside an interval, with their source modes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GammaSet {
    pub lo: f64,
    pub hi: f64,
    pub entries: Vec<GammaEntry>,
}

impl GammaSet {
    pub fn values(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.gamma).collect()
    }

    pub fn contains(&self, g: f64) -> bool {
        self.entries.iter().any(|e| (e.gamma - g).abs() <= 1e-12 * (1.0 + g.abs()))
    }

    /// Entry nearest to `x`.
    pub fn nearest(&self, x: f64) -> Option<f64> {
        self.entries
            .iter()
            .map(|e| e.gamma)
            .min_by(|a, b| (a - x).abs().total_cmp(&(b - x).abs()))
    }
}

fn collect_gammas(modes: &[ModeData], lo: f64, hi: f64) -> Vec<GammaEntry> {
    let mut raw: Vec<(f64, usize, Branch)> = Vec::new();
    for m in modes.iter().filter(|m| !m.complex) {
        for (g, br) in [(m.gamma_plus, Branch::Plus), (m.gamma_minus, Branch::Minus)] {
            if g >= lo && g <= hi && !(m.resonant && br == Branch::Minus) {
                raw.push((g, m.k, br));
            }
        }
    }
    raw.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut entries: Vec<GammaEntry> = Vec::new();
    for (g, k, br) in raw {
        match entries.last_mut() {
            Some(e) if (e.gamma - g).abs() <= 1e-12 * (1.0 + g.abs()) => e.sources.push((k, br)),
            _ => entries.push(GammaEntry { gamma: g, sources: vec![(k, br)] }),
        }
    }
    entries
}

/// All indicial exponents of the cone in `[lo, hi]`.
pub fn gamma_set(cone: &ConeDescriptor, lo: f64, hi: f64) -> Result<GammaSet> {
    if !(lo < hi) {
        return Err(ConeError::invalid(format!("gamma interval [{lo}, {hi}] is empty")));
    }
    let captured = |modes: &[ModeData]| {
        modes
            .last()
            .is_some_and(|m| !m.complex && m.gamma_plus > hi && m.gamma_minus < lo)
    };
    let modes = match &cone.kind {
        ConeKind::Custom { modes } => {
            let all = mode_list(cone, modes.len())?;
            if !captured(&all) {
                return Err(ConeError::invalid(format!(
                    "custom spectrum too short to capture all exponents in [{lo}, {hi}]"
                )));
            }
            all
        }
        ConeKind::Simons { .. } => {
            let mut count = 8;
            loop {
                let all = mode_list(cone, count)?;
                if captured(&all) {
                    break all;
                }
                count *= 2;
                if count > 1 << 16 {
                    return Err(ConeError::invalid("gamma interval too wide"));
                }
            }
        }
    };
    Ok(GammaSet {
        lo,
        hi,
        entries: collect_gammas(&modes, lo, hi),
    })
}

/// A weight exponent `sigma` certified to avoid the indicial set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SigmaWeight {
    pub sigma: f64,
    pub nearest: f64,
    pub margin: f64,
}

impl SigmaWeight {
    pub fn new(cone: &ConeDescriptor, sigma: f64) -> Result<Self> {
        if !sigma.is_finite() {
            return Err(ConeError::invalid("sigma must be finite"));
        }
        let nearest = match &cone.kind {
            ConeKind::Custom { modes } => {
                let all = mode_list(cone, modes.len())?;
                let entries = collect_gammas(&all, f64::NEG_INFINITY, f64::INFINITY);
                GammaSet { lo: f64::NEG_INFINITY, hi: f64::INFINITY, entries }.nearest(sigma)
            }
            ConeKind::Simons { .. } => {
                let mut width = 1.0;
                loop {
                    let set = gamma_set(cone, sigma - width, sigma + width)?;
                    if let Some(g) = set.nearest(sigma) {
                        break Some(g);
                    }
                    width *= 2.0;
                }
            }
        };
        let nearest = nearest.unwrap_or(f64::INFINITY);
        let margin = (sigma - nearest).abs();
        if margin <= 1e-9 * (1.0 + sigma.abs()) {
            return Err(ConeError::invalid(format!(
                "sigma = {sigma} lies on the indicial exponent {nearest}"
            )));
        }
        Ok(Self { sigma, nearest, margin })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    /// `(0, 1]`
    Ball,
    /// `[1, inf)`
    Exterior,
}

impl Domain {
    /// Whether `r^gamma` lies in `L^2_sigma` near the free end of the domain.
    pub fn admits(self, gamma: f64, sigma: f64) -> bool {
        match self {
            Domain::Ball => gamma > sigma,
            Domain::Exterior => gamma < sigma,
        }
    }
}

/// Sampled homogeneous solution `c+ r^{g+} + c- r^{g-}`, or `r^a (c+ + c- ln r)` when resonant.
pub fn homogeneous_mode(cone: &ConeDescriptor, k: usize, c_plus: f64, c_minus: f64, grid: LogGrid) -> Result<RadialFunction> {
    let md = indicial_roots(cone, k)?;
    md.require_real()?;
    let mut rf = RadialFunction::from_terms(md.k, md.mult, grid, homogeneous_terms(&md, c_plus, c_minus), Provenance::Homogeneous);
    rf.coefficients = Some((c_plus, c_minus));
    Ok(rf)
}

fn homogeneous_terms(md: &ModeData, c_plus: f64, c_minus: f64) -> Vec<PowerTerm> {
    if md.resonant {
        vec![
            PowerTerm::new(c_plus, md.gamma_plus, 0),
            PowerTerm::new(c_minus, md.gamma_plus, 1),
        ]
    } else {
        vec![
            PowerTerm::new(c_plus, md.gamma_plus, 0),
            PowerTerm::new(c_minus, md.gamma_minus, 0),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Base {
    Zero,
    One,
    Infinity,
}

fn panel_opts() -> QuadOptions {
    QuadOptions {
        epsabs: 0.0,
        epsrel: 1e-13,
        max_intervals: 400,
    }
}

fn tail_opts() -> QuadOptions {
    QuadOptions {
        epsabs: 0.0,
        epsrel: 1e-12,
        max_intervals: 2000,
    }
}

/// `int_{base}^{r_i} g` at every grid node, with `g` given as a function of `t = ln r`.
fn cumulative<G: Fn(f64) -> f64>(g: &G, grid: &LogGrid, base: Base) -> Result<Vec<f64>> {
    let n = grid.n;
    let t: Vec<f64> = (0..n).map(|i| grid.t(i)).collect();
    let panel = |a: f64, b: f64| integrate(g, a, b, panel_opts());
    let mut out = vec![0.0; n];
    match base {
        Base::Zero => {
            out[0] = integrate_from_neg_infinity(g, t[0], tail_opts())?;
            for i in 1..n {
                out[i] = out[i - 1] + panel(t[i - 1], t[i])?;
            }
        }
        Base::Infinity => {
            out[n - 1] = -integrate_to_infinity(g, t[n - 1], tail_opts())?;
            for i in (0..n - 1).rev() {
                out[i] = out[i + 1] - panel(t[i], t[i + 1])?;
            }
        }
        Base::One => {
            let j = (0..n).min_by(|a, b| t[*a].abs().total_cmp(&t[*b].abs())).unwrap();
            out[j] = panel(0.0, t[j])?;
            for i in j + 1..n {
                out[i] = out[i - 1] + panel(t[i - 1], t[i])?;
            }
            for i in (0..j).rev() {
                out[i] = out[i + 1] - panel(t[i], t[i + 1])?;
            }
        }
    }
    Ok(out)
}

struct Particular {
    u: Vec<f64>,
    du: Vec<f64>,
    /// Homogeneous coefficients to add to the standard particular solution to
    /// obtain this one, when the conversion integrals converge.
    conversion: Option<(f64, f64)>,
}

fn conversion_integral<G: Fn(f64) -> f64>(g: &G, base: Base, standard: Base) -> Option<f64> {
    // int_{base}^{standard} g
    let to = |b: Base| -> Option<f64> {
        // int_{b}^{0} g (t-variable; t = 0 is r = 1)
        match b {
            Base::One => Some(0.0),
            Base::Zero => integrate_from_neg_infinity(g, 0.0, tail_opts()).ok(),
            Base::Infinity => integrate_to_infinity(g, 0.0, tail_opts()).ok().map(|v| -v),
        }
    };
    Some(to(base)? - to(standard)?)
}

fn particular(md: &ModeData, f: Source, grid: &LogGrid, bases: (Base, Base)) -> Result<Particular> {
    let n = grid.n;
    let r = grid.points();
    if md.resonant {
        let a = md.gamma_plus;
        let w = md.n as f64 / 2.0 + 1.0;
        let ga = |t: f64| (w * t).exp() * f(t.exp());
        let gb = |t: f64| t * (w * t).exp() * f(t.exp());
        let ia = cumulative(&ga, grid, bases.0)?;
        let ib = cumulative(&gb, grid, bases.0)?;
        let mut u = vec![0.0; n];
        let mut du = vec![0.0; n];
        for i in 0..n {
            let p = r[i].powf(a);
            let l = r[i].ln();
            u[i] = p * (l * ia[i] - ib[i]);
            du[i] = p / r[i] * (a * (l * ia[i] - ib[i]) + ia[i]);
        }
        // mine = standard - D_A r^a ln r + D_B r^a with D = int_0^{base}
        let conversion = match (
            conversion_integral(&ga, Base::Zero, bases.0),
            conversion_integral(&gb, Base::Zero, bases.0),
        ) {
            (Some(da), Some(db)) => Some((db, -da)),
            _ => None,
        };
        return Ok(Particular { u, du, conversion });
    }
    let (gp, gm) = (md.gamma_plus, md.gamma_minus);
    let two_b = 2.0 * md.b;
    let fp = |t: f64| ((2.0 - gp) * t).exp() * f(t.exp());
    let fm = |t: f64| ((2.0 - gm) * t).exp() * f(t.exp());
    let ip = cumulative(&fp, grid, bases.0)?;
    let im = cumulative(&fm, grid, bases.1)?;
    let mut u = vec![0.0; n];
    let mut du = vec![0.0; n];
    for i in 0..n {
        let pp = r[i].powf(gp);
        let pm = r[i].powf(gm);
        u[i] = (pp * ip[i] - pm * im[i]) / two_b;
        du[i] = (gp * pp * ip[i] - gm * pm * im[i]) / (two_b * r[i]);
    }
    // I_mine = I_standard + int_{base}^{1} g
    let conversion = match (
        conversion_integral(&fp, bases.0, Base::One),
        conversion_integral(&fm, bases.1, Base::One),
    ) {
        (Some(cp), Some(cm)) => Some((cp / two_b, -cm / two_b)),
        _ => None,
    };
    Ok(Particular { u, du, conversion })
}

/// The standard particular solution `u_k(r, f)` of the mode equation, with
/// integrals based at `1` (or at `0` with log weights when `b_k = 0`).
pub fn particular_mode(cone: &ConeDescriptor, k: usize, f: Source, grid: LogGrid) -> Result<RadialFunction> {
    let md = indicial_roots(cone, k)?;
    md.require_real()?;
    let bases = if md.resonant { (Base::Zero, Base::Zero) } else { (Base::One, Base::One) };
    let p = particular(&md, f, &grid, bases)?;
    let mut rf = RadialFunction::from_samples(md.k, md.mult, grid, p.u, p.du, Provenance::Particular)?;
    rf.coefficients = Some((0.0, 0.0));
    Ok(rf)
}

/// Data for one mode of a prescribed-asymptotics problem.
#[derive(Clone, Copy)]
pub struct ModeProblem<'a> {
    pub k: usize,
    pub f: Option<Source<'a>>,
    pub phi: f64,
    pub psi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrescribedSolution {
    pub modes: Vec<RadialFunction>,
    /// `sup_t ||u(t, .)|| t^{-sigma}` over the grid.
    pub weighted_sup: f64,
}

/// Which boundary conditions are active for a mode: `(dirichlet, neumann)`.
pub fn active_conditions(md: &ModeData, sigma: f64, domain: Domain) -> (bool, bool) {
    let (d, n) = match domain {
        Domain::Ball => (md.gamma_plus, md.gamma_minus),
        Domain::Exterior => (md.gamma_minus, md.gamma_plus),
    };
    (domain.admits(d, sigma), domain.admits(n, sigma))
}

fn check_grid(grid: &LogGrid, domain: Domain) -> Result<()> {
    let ok = match domain {
        Domain::Ball => grid.r_hi == 1.0,
        Domain::Exterior => grid.r_lo == 1.0,
    };
    if !ok {
        return Err(ConeError::invalid(match domain {
            Domain::Ball => "ball grids must end at r = 1",
            Domain::Exterior => "exterior grids must start at r = 1",
        }));
    }
    Ok(())
}

pub(crate) fn solve_mode(
    md: &ModeData,
    sigma: f64,
    domain: Domain,
    f: Option<Source>,
    phi: f64,
    psi: f64,
    grid: &LogGrid,
) -> Result<RadialFunction> {
    md.require_real()?;
    let n = grid.n;
    let edge = match domain {
        Domain::Ball => n - 1,
        Domain::Exterior => 0,
    };
    let far = match domain {
        Domain::Ball => Base::Zero,
        Domain::Exterior => Base::Infinity,
    };
    let adm_p = domain.admits(md.gamma_plus, sigma);
    let adm_m = domain.admits(md.gamma_minus, sigma);
    let base_p = if adm_p { Base::One } else { far };
    let base_m = if adm_m { Base::One } else { far };
    let part = match f {
        Some(f) => particular(md, f, grid, (base_p, base_m))?,
        None => Particular {
            u: vec![0.0; n],
            du: vec![0.0; n],
            conversion: Some((0.0, 0.0)),
        },
    };
    let (u0, du0) = (part.u[edge], part.du[edge]);
    // Values and derivatives of the two homogeneous branches at r = 1.
    let (vp, vm) = if md.resonant {
        ((1.0, md.gamma_plus), (0.0, 1.0))
    } else {
        ((1.0, md.gamma_plus), (1.0, md.gamma_minus))
    };
    let (dir, neu) = active_conditions(md, sigma, domain);
    let (cp, cm) = match (adm_p, adm_m) {
        (true, true) => {
            let det = vp.0 * vm.1 - vm.0 * vp.1;
            let (a, b) = (phi - u0, psi - du0);
            ((a * vm.1 - vm.0 * b) / det, (vp.0 * b - vp.1 * a) / det)
        }
        (true, false) => ((phi - u0) / vp.0, 0.0),
        (false, true) => (0.0, (phi - u0) / vm.0),
        (false, false) => {
            if phi != 0.0 || psi != 0.0 {
                return Err(ConeError::OverDetermined(format!(
                    "mode {}: no branch r^{} or r^{} lies in L2_sigma for sigma = {sigma}, \
                     so both boundary conditions are projected out; set phi = psi = 0",
                    md.k, md.gamma_plus, md.gamma_minus
                )));
            }
            (0.0, 0.0)
        }
    };
    debug_assert_eq!(dir || neu, adm_p || adm_m);
    let terms = homogeneous_terms(md, cp, cm);
    let r = grid.points();
    let mut u = part.u;
    let mut du = part.du;
    for i in 0..n {
        for t in &terms {
            let (v, d) = t.eval(r[i]);
            u[i] += v;
            du[i] += d;
        }
    }
    let mut rf = RadialFunction::from_samples(md.k, md.mult, *grid, u, du, Provenance::BoundaryValue)?;
    rf.coefficients = part.conversion.map(|(a, b)| (a + cp, b + cm));
    rf.exponents = terms.iter().filter(|t| t.coef != 0.0).map(|t| t.exponent).collect();
    rf.exponents.dedup();
    if f.is_none() {
        rf.closed_form = Some(terms);
    }
    Ok(rf)
}

fn weighted_sup(modes: &[RadialFunction], sigma: f64) -> f64 {
    let Some(first) = modes.first() else { return 0.0 };
    (0..first.r.len())
        .map(|i| {
            let s: f64 = modes.iter().map(|m| m.mult as f64 * m.value[i] * m.value[i]).sum();
            s.sqrt() * first.r[i].powf(-sigma)
        })
        .fold(0.0, f64::max)
}

/// Solves `L_C u = f` in `L^2_sigma` on the ball or exterior with the boundary
/// conditions selected by the weight.
pub fn solve_prescribed(
    cone: &ConeDescriptor,
    sigma: &SigmaWeight,
    problems: &[ModeProblem],
    domain: Domain,
    grid: LogGrid,
) -> Result<PrescribedSolution> {
    check_grid(&grid, domain)?;
    let k_max = problems.iter().map(|p| p.k).max().unwrap_or(0);
    if k_max == 0 {
        return Ok(PrescribedSolution { modes: Vec::new(), weighted_sup: 0.0 });
    }
    if problems.iter().any(|p| p.k == 0) {
        return Err(ConeError::invalid("mode index is 1-based"));
    }
    let list = mode_list(cone, k_max)?;
    let mut modes = Vec::with_capacity(problems.len());
    for p in problems {
        modes.push(solve_mode(&list[p.k - 1], sigma.sigma, domain, p.f, p.phi, p.psi, &grid)?);
    }
    let weighted_sup = weighted_sup(&modes, sigma.sigma);
    Ok(PrescribedSolution { modes, weighted_sup })
}

const FD8: [f64; 4] = [4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0];

/// Largest node-wise relative residual of the mode equation over interior
/// nodes, computed in `t = ln r` with an eighth-order difference of `r u'`.
/// `extra` holds samples of `r^2 (R u)` for perturbed equations.
pub fn mode_residual(md: &ModeData, rf: &RadialFunction, f: Option<Source>, extra: Option<&[f64]>) -> f64 {
    let n = rf.r.len();
    if n < 9 {
        return f64::NAN;
    }
    let h = rf.grid.step();
    let w: Vec<f64> = rf.r.iter().zip(&rf.dvalue).map(|(r, d)| r * d).collect();
    let nm2 = md.n as f64 - 2.0;
    let mut worst: f64 = 0.0;
    for i in 4..n - 4 {
        let mut wt = 0.0;
        for (j, c) in FD8.iter().enumerate() {
            wt += c * (w[i + j + 1] - w[i - j - 1]);
        }
        wt /= h;
        let r2 = rf.r[i] * rf.r[i];
        let src = f.map_or(0.0, |f| r2 * f(rf.r[i]));
        let pert = extra.map_or(0.0, |e| e[i]);
        let terms = [wt, nm2 * w[i], md.mu * rf.value[i], src, pert];
        let res = wt + nm2 * w[i] - md.mu * rf.value[i] + pert - src;
        let scale = terms.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if scale > 0.0 {
            worst = worst.max(res.abs() / scale);
        }
    }
    worst
}

/// Mode-diagonal operator `R` for `L_C u + R u = f`.
pub trait Perturbation: Sync {
    /// `(R u)_k` at the grid nodes.
    fn apply(&self, md: &ModeData, r: &[f64], u: &[f64], du: &[f64]) -> Vec<f64>;
    /// Declared bound on `||R||` from `W^{2,2}_sigma` to `L^2_{sigma-2}`.
    fn bound(&self) -> f64;
}

pub struct ZeroPerturbation;

impl Perturbation for ZeroPerturbation {
    fn apply(&self, _: &ModeData, r: &[f64], _: &[f64], _: &[f64]) -> Vec<f64> {
        vec![0.0; r.len()]
    }
    fn bound(&self) -> f64 {
        0.0
    }
}

/// `R u = eps u / r^2`, whose operator norm is exactly `|eps|`.
pub struct InverseSquare {
    pub eps: f64,
}

impl Perturbation for InverseSquare {
    fn apply(&self, _: &ModeData, r: &[f64], u: &[f64], _: &[f64]) -> Vec<f64> {
        r.iter().zip(u).map(|(r, u)| self.eps * u / (r * r)).collect()
    }
    fn bound(&self) -> f64 {
        self.eps.abs()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationReport {
    pub iterations: usize,
    pub threshold: f64,
    pub distances: Vec<f64>,
    pub factors: Vec<f64>,
}

fn w22_weights(grid: &LogGrid, sigma: f64) -> Vec<f64> {
    let h = grid.step();
    (0..grid.n)
        .map(|i| {
            let end = if i == 0 || i + 1 == grid.n { 0.5 } else { 1.0 };
            end * h * grid.r(i).powf(-2.0 * sigma)
        })
        .collect()
}

/// The three `W^{2,2}_sigma` components `(u, r u', r^2 u'')` of a mode solution.
fn w22_components(md: &ModeData, r: &[f64], u: &[f64], du: &[f64], source: &[f64]) -> [Vec<f64>; 3] {
    let n = r.len();
    let mut d2 = vec![0.0; n];
    for i in 0..n {
        let ri = r[i];
        d2[i] = ri * ri * source[i] - (md.n as f64 - 1.0) * ri * du[i] + md.mu * u[i];
    }
    [u.to_vec(), r.iter().zip(du).map(|(r, d)| r * d).collect(), d2]
}

fn w22_norm(md: &ModeData, weights: &[f64], r: &[f64], u: &[f64], du: &[f64], source: &[f64]) -> f64 {
    let c = w22_components(md, r, u, du, source);
    let mut acc = 0.0;
    for comp in &c {
        for (v, w) in comp.iter().zip(weights) {
            acc += w * v * v;
        }
    }
    acc.sqrt()
}

/// Source callable built from node samples: degree-7 Lagrange in `ln r`
/// inside the grid, power-law continuation outside.
pub(crate) struct SampledSource {
    t: Vec<f64>,
    y: Vec<f64>,
    lo_exp: f64,
    hi_exp: f64,
}

impl SampledSource {
    pub(crate) fn new(grid: &LogGrid, y: Vec<f64>) -> Self {
        let n = grid.n;
        let h = grid.step();
        let slope = |a: f64, b: f64| {
            if a != 0.0 && b != 0.0 && a.signum() == b.signum() {
                (b / a).ln() / h
            } else {
                f64::NAN
            }
        };
        Self {
            t: (0..n).map(|i| grid.t(i)).collect(),
            lo_exp: slope(y[0], y[1]),
            hi_exp: slope(y[n - 2], y[n - 1]),
            y,
        }
    }

    pub(crate) fn eval(&self, r: f64) -> f64 {
        let t = r.ln();
        let n = self.t.len();
        if t < self.t[0] {
            if self.lo_exp.is_nan() {
                return 0.0;
            }
            return self.y[0] * (self.lo_exp * (t - self.t[0])).exp();
        }
        if t > self.t[n - 1] {
            if self.hi_exp.is_nan() {
                return 0.0;
            }
            return self.y[n - 1] * (self.hi_exp * (t - self.t[n - 1])).exp();
        }
        interp::lagrange(&self.t, &self.y, t, 7)
    }
}

/// Norm of the discrete solution operator `f -> u` (zero boundary data) from
/// `L^2_{sigma-2}` to `W^{2,2}_sigma`, by power iteration.
pub fn solution_operator_norm(md: &ModeData, sigma: f64, domain: Domain, grid: &LogGrid) -> Result<f64> {
    let n = grid.n;
    let h = grid.step();
    let r = grid.points();
    let ts: Vec<f64> = (0..n).map(|i| grid.t(i)).collect();
    let ww = w22_weights(grid, sigma);
    let lw: Vec<f64> = (0..n)
        .map(|i| {
            let end = if i == 0 || i + 1 == n { 0.5 } else { 1.0 };
            (end * h * r[i].powf(4.0 - 2.0 * sigma)).sqrt()
        })
        .collect();
    // Columns of B = W^{1/2} A L^{-1/2}, stacked over the three components.
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(n);
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        let tj = ts.clone();
        let ej = e.clone();
        let lo = ts[0];
        let hi = ts[n - 1];
        let card = move |rr: f64| {
            let t = rr.ln();
            if t < lo || t > hi {
                0.0
            } else {
                interp::lagrange(&tj, &ej, t, 7)
            }
        };
        let rf = solve_mode(md, sigma, domain, Some(&card), 0.0, 0.0, grid)?;
        let comps = w22_components(md, &r, &rf.value, &rf.dvalue, &e);
        let mut col = Vec::with_capacity(3 * n);
        for comp in &comps {
            for (v, w) in comp.iter().zip(&ww) {
                col.push(v * w.sqrt() / lw[j]);
            }
        }
        cols.push(col);
    }
    let mut x = vec![1.0 / (n as f64).sqrt(); n];
    let mut sigma_max = 0.0;
    for _ in 0..500 {
        let mut y = vec![0.0; 3 * n];
        for (j, c) in cols.iter().enumerate() {
            for (yi, ci) in y.iter_mut().zip(c) {
                *yi += ci * x[j];
            }
        }
        let z: Vec<f64> = cols.iter().map(|c| c.iter().zip(&y).map(|(a, b)| a * b).sum()).collect();
        let norm = z.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Ok(0.0);
        }
        let next = norm.sqrt();
        x = z.iter().map(|v| v / norm).collect();
        if (next - sigma_max).abs() <= 1e-12 * next {
            sigma_max = next;
            break;
        }
        sigma_max = next;
    }
    Ok(sigma_max)
}

/// Fixed-point solve of `L_C u + R u = f` with zero projected boundary data.
#[allow(clippy::too_many_arguments)]
pub fn solve_perturbed(
    cone: &ConeDescriptor,
    sigma: &SigmaWeight,
    problems: &[ModeProblem],
    perturbation: &dyn Perturbation,
    domain: Domain,
    grid: LogGrid,
    tol: f64,
    max_iter: usize,
) -> Result<(PrescribedSolution, IterationReport)> {
    check_grid(&grid, domain)?;
    if problems.iter().any(|p| p.phi != 0.0 || p.psi != 0.0) {
        return Err(ConeError::invalid("perturbed solves take zero boundary data"));
    }
    if !(tol > 0.0) || max_iter == 0 {
        return Err(ConeError::invalid("tol must be positive and max_iter >= 1"));
    }
    let k_max = problems.iter().map(|p| p.k).max().unwrap_or(0);
    if k_max == 0 || problems.iter().any(|p| p.k == 0) {
        return Err(ConeError::invalid("perturbed solve needs 1-based mode indices"));
    }
    let list = mode_list(cone, k_max)?;
    let mut a_norm: f64 = 0.0;
    for p in problems {
        a_norm = a_norm.max(solution_operator_norm(&list[p.k - 1], sigma.sigma, domain, &grid)?);
    }
    let threshold = if a_norm > 0.0 { 1.0 / a_norm } else { f64::INFINITY };
    let eps = perturbation.bound();
    if eps >= threshold {
        return Err(ConeError::PerturbationTooLarge { eps, threshold });
    }
    let r = grid.points();
    let weights = w22_weights(&grid, sigma.sigma);
    let mut current: Vec<RadialFunction> = Vec::with_capacity(problems.len());
    for p in problems {
        current.push(solve_mode(&list[p.k - 1], sigma.sigma, domain, p.f, 0.0, 0.0, &grid)?);
    }
    let mut report = IterationReport {
        iterations: 1,
        threshold,
        distances: Vec::new(),
        factors: Vec::new(),
    };
    let mut sources: Vec<Vec<f64>> = problems
        .iter()
        .map(|p| r.iter().map(|&x| p.f.map_or(0.0, |f| f(x))).collect())
        .collect();
    let mut streak = 0;
    loop {
        let applied: Vec<Vec<f64>> = problems
            .iter()
            .zip(&current)
            .map(|(p, u)| perturbation.apply(&list[p.k - 1], &r, &u.value, &u.dvalue))
            .collect();
        if report.iterations == 1 && applied.iter().all(|a| a.iter().all(|v| *v == 0.0)) {
            break;
        }
        if report.iterations >= max_iter {
            return Err(ConeError::Divergence {
                iterations: report.iterations,
                factor: report.factors.last().copied().unwrap_or(f64::NAN),
            });
        }
        let mut next = Vec::with_capacity(problems.len());
        let mut dist2 = 0.0;
        for (idx, p) in problems.iter().enumerate() {
            let md = &list[p.k - 1];
            let ru = SampledSource::new(&grid, applied[idx].clone());
            let f = p.f;
            let src = move |x: f64| f.map_or(0.0, |f| f(x)) - ru.eval(x);
            let v = solve_mode(md, sigma.sigma, domain, Some(&src), 0.0, 0.0, &grid)?;
            let diff_u: Vec<f64> = v.value.iter().zip(&current[idx].value).map(|(a, b)| a - b).collect();
            let diff_d: Vec<f64> = v.dvalue.iter().zip(&current[idx].dvalue).map(|(a, b)| a - b).collect();
            let new_src: Vec<f64> = r.iter().map(|&x| src(x)).collect();
            let diff_s: Vec<f64> = new_src.iter().zip(&sources[idx]).map(|(a, b)| a - b).collect();
            let d = w22_norm(md, &weights, &r, &diff_u, &diff_d, &diff_s);
            dist2 += d * d;
            sources[idx] = new_src;
            next.push(v);
        }
        let dist = dist2.sqrt();
        if let Some(prev) = report.distances.last() {
            let factor = if *prev > 0.0 { dist / prev } else { 0.0 };
            report.factors.push(factor);
            streak = if factor >= 1.0 { streak + 1 } else { 0 };
            if streak >= 3 {
                return Err(ConeError::Divergence {
                    iterations: report.iterations + 1,
                    factor,
                });
            }
        }
        report.distances.push(dist);
        report.iterations += 1;
        current = next;
        let scale = current
            .iter()
            .zip(problems)
            .zip(&sources)
            .map(|((u, p), s)| w22_norm(&list[p.k - 1], &weights, &r, &u.value, &u.dvalue, s))
            .fold(0.0, f64::max);
        if dist <= tol * scale.max(f64::MIN_POSITIVE) || dist == 0.0 {
            break;
        }
    }
    for u in &mut current {
        u.provenance = Provenance::Perturbed;
        u.coefficients = None;
        u.closed_form = None;
    }
    let weighted_sup = weighted_sup(&current, sigma.sigma);
    Ok((PrescribedSolution { modes: current, weighted_sup }, report))
}

/// Least-squares fit of `(c_plus, c_minus)` for a homogeneous profile.
pub fn fit_homogeneous(md: &ModeData, rf: &RadialFunction) -> Result<(f64, f64)> {
    md.require_real()?;
    let basis = |r: f64| {
        if md.resonant {
            let p = r.powf(md.gamma_plus);
            (p, p * r.ln())
        } else {
            (r.powf(md.gamma_plus), r.powf(md.gamma_minus))
        }
    };
    // Normal equations on rows scaled to unit magnitude.
    let (mut a11, mut a12, mut a22, mut b1, mut b2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (&r, &v) in rf.r.iter().zip(&rf.value) {
        let (p, m) = basis(r);
        let s = 1.0 / p.abs().max(m.abs()).max(f64::MIN_POSITIVE);
        let (p, m, v) = (p * s, m * s, v * s);
        a11 += p * p;
        a12 += p * m;
        a22 += m * m;
        b1 += p * v;
        b2 += m * v;
    }
    let det = a11 * a22 - a12 * a12;
    if det.abs() <= 1e-300 {
        return Err(ConeError::invalid("coefficient fit is singular on this grid"));
    }
    Ok(((b1 * a22 - b2 * a12) / det, (a11 * b2 - a12 * b1) / det))
}
