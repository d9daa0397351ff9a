//! Weighted window integrals, Hardy gaps, window monotonicity and asymptotic rates.

use serde::{Deserialize, Serialize};

use crate::cone::{ConeDescriptor, ConeKind};
use crate::error::{ConeError, Result};
use crate::modes::{gamma_set, mode_list, Domain, ModeData};
use crate::numeric::quadrature::{integrate, integrate_from_neg_infinity, integrate_to_infinity, QuadOptions};
use crate::radial::RadialFunction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum End {
    Tip,
    Infinity,
}

fn opts() -> QuadOptions {
    QuadOptions { epsabs: 0.0, epsrel: 1e-13, max_intervals: 400 }
}

/// `int_a^b v(t)^2 t^w dt` for one profile.
pub fn profile_square_integral(rf: &RadialFunction, a: f64, b: f64, w: f64) -> Result<f64> {
    if rf.closed_form.is_none() && (!rf.grid.contains(a) || !rf.grid.contains(b)) {
        return Err(ConeError::invalid(format!(
            "window [{a:e}, {b:e}] not covered by the profile grid [{:e}, {:e}]",
            rf.grid.r_lo, rf.grid.r_hi
        )));
    }
    let (ta, tb) = (a.ln(), b.ln());
    let e = w + 1.0;
    if let Some(terms) = &rf.closed_form {
        let f = |tau: f64| {
            let r = tau.exp();
            let v: f64 = terms.iter().map(|t| t.eval(r).0).sum();
            v * v * (e * tau).exp()
        };
        return integrate(f, ta, tb, opts());
    }
    let f = |tau: f64| {
        let v = rf.eval_log(tau).0;
        v * v * (e * tau).exp()
    };
    // Integrate cell by cell so that the piecewise-cubic interpolant is smooth on each panel.
    let mut breaks = vec![ta];
    for i in 0..rf.grid.n {
        let ti = rf.grid.t(i);
        if ti > ta && ti < tb {
            breaks.push(ti);
        }
    }
    breaks.push(tb);
    let mut acc = 0.0;
    for wdw in breaks.windows(2) {
        acc += integrate(f, wdw[0], wdw[1], opts())?;
    }
    Ok(acc)
}

/// `J^sigma_u(r, s) = sum_k mult_k int_r^s v_k(t)^2 t^{-1-2 sigma} dt`.
pub fn j_sigma(u: &[RadialFunction], sigma: f64, r: f64, s: f64) -> Result<f64> {
    if !(r > 0.0 && s > r) {
        return Err(ConeError::invalid(format!("window needs 0 < r < s, got ({r}, {s})")));
    }
    let mut acc = 0.0;
    for v in u {
        acc += v.mult as f64 * profile_square_integral(v, r, s, -1.0 - 2.0 * sigma)?;
    }
    Ok(acc)
}

/// Local power `r v' / v` at a grid end.
fn end_exponent(rf: &RadialFunction, index: usize) -> Option<f64> {
    let v = rf.value[index];
    (v != 0.0).then(|| rf.r[index] * rf.dvalue[index] / v)
}

/// `||u||_{L^2_sigma}` over the ball `(0, 1]` or the exterior `[1, inf)`.
pub fn l2_sigma_norm(u: &[RadialFunction], sigma: f64, domain: Domain) -> Result<f64> {
    let w = -1.0 - 2.0 * sigma;
    let mut total = 0.0;
    for v in u {
        if v.is_zero() && v.closed_form.is_none() {
            continue;
        }
        let tags: Vec<f64> = match &v.closed_form {
            Some(terms) => terms.iter().filter(|t| t.coef != 0.0).map(|t| t.exponent).collect(),
            None => v.exponents.clone(),
        };
        if let Some(bad) = tags.iter().find(|g| !domain.admits(**g, sigma)) {
            return Err(ConeError::Divergent { exponent: *bad, sigma });
        }
        let part = if let Some(terms) = &v.closed_form {
            let f = |tau: f64| {
                let r = tau.exp();
                let x: f64 = terms.iter().map(|t| t.eval(r).0).sum();
                x * x * ((w + 1.0) * tau).exp()
            };
            match domain {
                Domain::Ball => integrate_from_neg_infinity(f, 0.0, opts())?,
                Domain::Exterior => integrate_to_infinity(f, 0.0, opts())?,
            }
        } else {
            // Grid part plus an analytic tail from the local power at the free end.
            let (inner, edge, end_idx) = match domain {
                Domain::Ball => (v.grid.r_lo, 1.0, 0),
                Domain::Exterior => (1.0, v.grid.r_hi, v.grid.n - 1),
            };
            if !v.grid.contains(1.0) {
                return Err(ConeError::invalid("profile grid does not reach r = 1"));
            }
            let body = profile_square_integral(v, inner.min(edge), edge.max(inner), w)?;
            let tail = match end_exponent(v, end_idx) {
                None => 0.0,
                Some(beta) => {
                    if !domain.admits(beta, sigma) {
                        return Err(ConeError::Divergent { exponent: beta, sigma });
                    }
                    let r0 = v.r[end_idx];
                    v.value[end_idx].powi(2) * r0.powf(-2.0 * sigma) / (2.0 * (beta - sigma)).abs()
                }
            };
            body + tail
        };
        total += v.mult as f64 * part;
    }
    Ok(total.sqrt())
}

/// Compactly supported radial test profile `a_k(r)` for one mode.
pub struct TestProfile<'a> {
    pub k: usize,
    pub support: (f64, f64),
    /// Interior points where `a` is not smooth.
    pub breakpoints: Vec<f64>,
    /// `(a(r), a'(r))`.
    pub a: &'a (dyn Fn(f64) -> (f64, f64) + Sync),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HardyReport {
    pub gap: f64,
    /// `sum mult int a^2 r^{n-3}`, the Hardy-weighted mass.
    pub hardy_mass: f64,
    /// `sum mult int a^2 r^{n-1}`, the plain `L^2(C)` mass.
    pub l2_mass: f64,
    pub threshold: f64,
}

/// `Q_C(phi, phi) - (mu_1 + ((n-2)/2)^2) int phi^2 / r^2`, mode by mode.
pub fn hardy_gap(cone: &ConeDescriptor, profiles: &[TestProfile]) -> Result<HardyReport> {
    let k_max = profiles.iter().map(|p| p.k).max().unwrap_or(1).max(1);
    if profiles.iter().any(|p| p.k == 0) {
        return Err(ConeError::invalid("mode index is 1-based"));
    }
    let modes = mode_list(cone, k_max)?;
    let n = cone.n as f64;
    let half = (n - 2.0) / 2.0;
    let threshold = modes[0].mu + half * half;
    let mut quad = 0.0;
    let mut hardy_mass = 0.0;
    let mut l2_mass = 0.0;
    for p in profiles {
        let (lo, hi) = p.support;
        if !(lo > 0.0 && hi > lo && hi.is_finite()) {
            return Err(ConeError::invalid("test profile support must be a bounded interval in (0, inf)"));
        }
        let (a_lo, _) = (p.a)(lo);
        let (a_hi, _) = (p.a)(hi);
        let probe = (p.a)((lo * hi).sqrt()).0.abs().max(1e-300);
        if a_lo.abs() > 1e-10 * probe || a_hi.abs() > 1e-10 * probe {
            return Err(ConeError::invalid(format!(
                "test profile for mode {} is not compactly supported in [{lo}, {hi}]",
                p.k
            )));
        }
        let md = &modes[p.k - 1];
        let mult = md.mult as f64;
        let mut cuts = vec![lo.ln()];
        let mut inner: Vec<f64> = p.breakpoints.iter().filter(|b| **b > lo && **b < hi).map(|b| b.ln()).collect();
        inner.sort_by(f64::total_cmp);
        cuts.extend(inner);
        cuts.push(hi.ln());
        let mut form = 0.0;
        let mut hm = 0.0;
        let mut lm = 0.0;
        for w in cuts.windows(2) {
            // In tau = ln r: int (a'^2 + mu a^2 / r^2) r^{n-1} dr = int (r a')^2 r^{n-2} + mu a^2 r^{n-2} dtau.
            form += integrate(
                |tau: f64| {
                    let r = tau.exp();
                    let (a, da) = (p.a)(r);
                    let rd = r * da;
                    (rd * rd + md.mu * a * a) * ((n - 2.0) * tau).exp()
                },
                w[0],
                w[1],
                opts(),
            )?;
            hm += integrate(|tau: f64| (p.a)(tau.exp()).0.powi(2) * ((n - 2.0) * tau).exp(), w[0], w[1], opts())?;
            lm += integrate(|tau: f64| (p.a)(tau.exp()).0.powi(2) * (n * tau).exp(), w[0], w[1], opts())?;
        }
        quad += mult * form;
        hardy_mass += mult * hm;
        l2_mass += mult * lm;
    }
    Ok(HardyReport { gap: quad - threshold * hardy_mass, hardy_mass, l2_mass, threshold })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CertificateKind {
    Single,
    Pair,
    Log,
}

/// Per-mode evidence that windows shrink by the factor `K`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeCertificate {
    pub k: usize,
    pub kind: CertificateKind,
    /// Window-scaled exponents `g = -(gamma - sigma)` (tip) or `gamma - sigma` (infinity).
    pub exponents: Vec<f64>,
    pub k0: f64,
    /// `D12^2 - D11 D22` at the reported `K0` (or `D11` for single exponents).
    pub margin: f64,
    pub d11: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotonicityParams {
    pub sigma: f64,
    pub end: End,
    pub k0: f64,
    pub certificates: Vec<ModeCertificate>,
    /// Last mode inspected; all later modes carry at most one admissible exponent.
    pub tail_from: usize,
    pub n_windows: Option<usize>,
    pub delta0: Option<f64>,
}

/// `int_a^b u^{e-1} (ln u)^m du` for `m <= 2`.
fn log_moment(e: f64, m: u32, a: f64, b: f64) -> f64 {
    let (la, lb) = (a.ln(), b.ln());
    if e.abs() < 1e-14 {
        return (lb.powi(m as i32 + 1) - la.powi(m as i32 + 1)) / (m as f64 + 1.0);
    }
    let anti = |u: f64, l: f64| {
        let p = u.powf(e);
        match m {
            0 => p / e,
            1 => p * (l / e - 1.0 / (e * e)),
            _ => p * (l * l / e - 2.0 * l / (e * e) + 2.0 / (e * e * e)),
        }
    };
    anti(b, lb) - anti(a, la)
}

/// Quadratic form `D(K)` of `J(K, K^2) - J(1, K)` in the window-scaled coefficients.
pub fn window_form(kind: CertificateKind, g: &[f64], kk: f64) -> [[f64; 2]; 2] {
    let k2 = kk * kk;
    match kind {
        CertificateKind::Single => {
            let e = 2.0 * g[0];
            let d = log_moment(e, 0, kk, k2) - log_moment(e, 0, 1.0, kk);
            [[d, 0.0], [0.0, 0.0]]
        }
        CertificateKind::Pair => {
            let mut d = [[0.0; 2]; 2];
            for i in 0..2 {
                for j in 0..2 {
                    let e = g[i] + g[j];
                    d[i][j] = log_moment(e, 0, kk, k2) - log_moment(e, 0, 1.0, kk);
                }
            }
            d
        }
        CertificateKind::Log => {
            let e = 2.0 * g[0];
            let m = |p: u32| log_moment(e, p, kk, k2) - log_moment(e, p, 1.0, kk);
            [[m(0), m(1)], [m(1), m(2)]]
        }
    }
}

fn negative_definite(kind: CertificateKind, g: &[f64], kk: f64) -> (bool, f64, f64) {
    let d = window_form(kind, g, kk);
    if kind == CertificateKind::Single {
        return (d[0][0] < 0.0, d[0][0], d[0][0]);
    }
    let disc = d[0][1] * d[0][1] - d[0][0] * d[1][1];
    (d[0][0] < 0.0 && disc < 0.0, disc, d[0][0])
}

const K_CAP: f64 = 1e4;

fn mode_k0(kind: CertificateKind, g: &[f64]) -> Result<f64> {
    if kind == CertificateKind::Single {
        return if g[0] < 0.0 { Ok(2.0) } else { Err(ConeError::invalid("exponent not admissible")) };
    }
    let holds_beyond = |kk: f64| {
        let mut x = kk;
        while x <= K_CAP {
            if !negative_definite(kind, g, x).0 {
                return false;
            }
            x *= 1.05;
        }
        negative_definite(kind, g, K_CAP).0
    };
    let mut k = 2.0;
    while k <= K_CAP {
        if negative_definite(kind, g, k).0 && holds_beyond(k) {
            break;
        }
        k += 1.0;
    }
    if k > K_CAP {
        return Err(ConeError::NoCertificate(format!(
            "no window ratio below {K_CAP} makes the form negative definite"
        )));
    }
    if k == 2.0 {
        return Ok(2.0);
    }
    let (mut lo, mut hi) = ((k - 1.0).max(2.0), k);
    while hi - lo > 1e-3 {
        let mid = 0.5 * (lo + hi);
        if negative_definite(kind, g, mid).0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

fn admissible_at(end: End, gamma: f64, sigma: f64) -> bool {
    match end {
        End::Tip => gamma > sigma,
        End::Infinity => gamma < sigma,
    }
}

fn scaled(end: End, gamma: f64, sigma: f64) -> f64 {
    match end {
        End::Tip => -(gamma - sigma),
        End::Infinity => gamma - sigma,
    }
}

fn certificate(md: &ModeData, sigma: f64, end: End) -> Result<Option<(CertificateKind, Vec<f64>)>> {
    if md.complex {
        return Err(ConeError::Unsupported(format!(
            "mode {} has complex indicial roots; window monotonicity is not certified",
            md.k
        )));
    }
    let mut g = Vec::new();
    if md.resonant {
        if admissible_at(end, md.gamma_plus, sigma) {
            return Ok(Some((CertificateKind::Log, vec![scaled(end, md.gamma_plus, sigma)])));
        }
        return Ok(None);
    }
    for gamma in [md.gamma_plus, md.gamma_minus] {
        if admissible_at(end, gamma, sigma) {
            g.push(scaled(end, gamma, sigma));
        }
    }
    Ok(match g.len() {
        0 => None,
        1 => Some((CertificateKind::Single, g)),
        _ => Some((CertificateKind::Pair, g)),
    })
}

/// Smallest window ratio `K0 >= 2` making every retained mode's window form
/// negative definite, with a certified tail beyond `k_max`.
pub fn find_k0(cone: &ConeDescriptor, sigma: f64, k_max: usize, end: End) -> Result<MonotonicityParams> {
    if k_max == 0 {
        return Err(ConeError::invalid("k_max must be >= 1"));
    }
    let modes = mode_list(cone, k_max)?;
    crate::modes::SigmaWeight::new(cone, sigma)?;
    let last = modes.last().unwrap();
    let both = |m: &ModeData| {
        !m.complex && admissible_at(end, m.gamma_plus, sigma) && admissible_at(end, m.gamma_minus, sigma)
    };
    if both(last) || last.complex {
        return Err(ConeError::NoCertificate(format!(
            "mode {} still has two admissible exponents; raise k_max",
            last.k
        )));
    }
    let mut certificates = Vec::new();
    let mut k0: f64 = 2.0;
    for m in &modes {
        if let Some((kind, g)) = certificate(m, sigma, end)? {
            let kk = mode_k0(kind, &g)?;
            k0 = k0.max(kk);
            certificates.push(ModeCertificate { k: m.k, kind, exponents: g, k0: kk, margin: 0.0, d11: 0.0 });
        }
    }
    for c in &mut certificates {
        let (ok, margin, d11) = negative_definite(c.kind, &c.exponents, k0);
        debug_assert!(ok);
        c.margin = margin;
        c.d11 = d11;
    }
    Ok(MonotonicityParams {
        sigma,
        end,
        k0,
        certificates,
        tail_from: last.k,
        n_windows: None,
        delta0: None,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindowSeries {
    pub sigma: f64,
    pub end: End,
    pub boundaries: Vec<f64>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotonicityVerdict {
    pub monotone: bool,
    /// Index `j` of the first window with `J_{j+1} >= J_j`.
    pub first_violation: Option<usize>,
    pub series: WindowSeries,
}

/// Dyadic-style window series `J^sigma_u(r_j, r_{j+1})` with `r_j = r_start K^{+-j}`.
pub fn window_series(u: &[RadialFunction], sigma: f64, kk: f64, r_start: f64, count: usize, end: End) -> Result<WindowSeries> {
    if !(kk > 1.0) || !(r_start > 0.0) {
        return Err(ConeError::invalid("window ratio must exceed 1 and r_start be positive"));
    }
    let step = match end {
        End::Infinity => kk,
        End::Tip => 1.0 / kk,
    };
    let boundaries: Vec<f64> = (0..=count).map(|j| r_start * step.powi(j as i32)).collect();
    let mut values = Vec::with_capacity(count);
    for w in boundaries.windows(2) {
        let (a, b) = if w[0] < w[1] { (w[0], w[1]) } else { (w[1], w[0]) };
        values.push(j_sigma(u, sigma, a, b)?);
    }
    Ok(WindowSeries { sigma, end, boundaries, values })
}

/// Checks `J(K r, K^2 r) < J(r, K r)` along `count` consecutive windows.
pub fn check_window_monotonicity(u: &[RadialFunction], sigma: f64, kk: f64, r_start: f64, count: usize, end: End) -> Result<MonotonicityVerdict> {
    let series = window_series(u, sigma, kk, r_start, count, end)?;
    let first_violation = series
        .values
        .windows(2)
        .position(|w| w[1] >= w[0] && !(w[0] == 0.0 && w[1] == 0.0));
    Ok(MonotonicityVerdict { monotone: first_violation.is_none(), first_violation, series })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateOptions {
    pub snap_tolerance: f64,
    pub robust: bool,
}

impl Default for RateOptions {
    fn default() -> Self {
        Self { snap_tolerance: 0.1, robust: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateReport {
    pub end: End,
    pub raw_exponent: f64,
    pub snapped: Option<f64>,
    pub residual: f64,
    pub window_range: (f64, f64),
    pub windows: usize,
    pub t: Vec<f64>,
    pub half_log_m: Vec<f64>,
}

/// Nearest indicial exponent of the cone within `tol` of `x`.
pub fn snap_to_gamma(cone: &ConeDescriptor, x: f64, tol: f64) -> Option<f64> {
    let set = match &cone.kind {
        ConeKind::Simons { .. } => gamma_set(cone, x - tol, x + tol).ok()?,
        ConeKind::Custom { modes } => {
            let all = mode_list(cone, modes.len()).ok()?;
            let mut entries = Vec::new();
            for m in all.iter().filter(|m| !m.complex) {
                for g in [m.gamma_plus, m.gamma_minus] {
                    if (g - x).abs() <= tol {
                        entries.push(g);
                    }
                }
            }
            return entries.into_iter().min_by(|a, b| (a - x).abs().total_cmp(&(b - x).abs()));
        }
    };
    set.nearest(x).filter(|g| (g - x).abs() <= tol)
}

/// Fits `1/2 log m(t)` against `log t`, `m(t) = sum mult int_t^{2t} v^2 s^{-1} ds`,
/// over dyadic windows starting at the given `t` values.
pub fn estimate_asymptotic_rate(
    u: &[RadialFunction],
    cone: &ConeDescriptor,
    end: End,
    window_starts: &[f64],
    options: RateOptions,
) -> Result<RateReport> {
    if window_starts.len() < 4 {
        return Err(ConeError::InsufficientWindows { found: window_starts.len(), needed: 4 });
    }
    let moments = window_starts
        .iter()
        .map(|&t| j_sigma(u, 0.0, t, 2.0 * t))
        .collect::<Result<Vec<f64>>>()?;
    fit_window_moments(cone, end, window_starts, &moments, options)
}

/// Rate fit from precomputed second moments `m(t_j)` over `[t_j, 2 t_j]`.
pub fn fit_window_moments(
    cone: &ConeDescriptor,
    end: End,
    window_starts: &[f64],
    moments: &[f64],
    options: RateOptions,
) -> Result<RateReport> {
    if window_starts.len() < 4 {
        return Err(ConeError::InsufficientWindows { found: window_starts.len(), needed: 4 });
    }
    let mut xs = Vec::with_capacity(window_starts.len());
    let mut ys = Vec::with_capacity(window_starts.len());
    for (&t, &m) in window_starts.iter().zip(moments) {
        if m <= 0.0 {
            continue;
        }
        xs.push(t.ln());
        ys.push(0.5 * m.ln());
    }
    if xs.is_empty() {
        return Err(ConeError::ZeroFunction);
    }
    if xs.len() < 4 {
        return Err(ConeError::InsufficientWindows { found: xs.len(), needed: 4 });
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let ls_slope = sxy / sxx;
    let slope = if options.robust {
        let mut order: Vec<usize> = (0..xs.len()).collect();
        order.sort_by(|a, b| xs[*a].total_cmp(&xs[*b]));
        let mut s: Vec<f64> = order.windows(2).map(|w| (ys[w[1]] - ys[w[0]]) / (xs[w[1]] - xs[w[0]])).collect();
        s.sort_by(f64::total_cmp);
        let h = s.len() / 2;
        if s.len() % 2 == 1 { s[h] } else { 0.5 * (s[h - 1] + s[h]) }
    } else {
        ls_slope
    };
    let intercept = my - slope * mx;
    let residual = (xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum::<f64>() / n).sqrt();
    let lo = window_starts.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = window_starts.iter().cloned().fold(0.0, f64::max) * 2.0;
    Ok(RateReport {
        end,
        raw_exponent: slope,
        snapped: snap_to_gamma(cone, slope, options.snap_tolerance),
        residual,
        window_range: (lo, hi),
        windows: xs.len(),
        t: xs.iter().map(|x| x.exp()).collect(),
        half_log_m: ys,
    })
}

/// `count` dyadic window starts moving toward `end` from `t0`.
pub fn dyadic_starts(t0: f64, count: usize, end: End) -> Vec<f64> {
    (0..count)
        .map(|j| match end {
            End::Infinity => t0 * 2f64.powi(j as i32),
            End::Tip => t0 * 2f64.powi(-(j as i32)),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cone::{make_simons_cone, CustomMode};
    use crate::numeric::grid::LogGrid;
    use crate::radial::{PowerTerm, Provenance};

    fn power(g: f64, grid: LogGrid) -> RadialFunction {
        RadialFunction::from_terms(1, 1, grid, vec![PowerTerm::new(1.0, g, 0)], Provenance::Synthetic)
    }

    #[test]
    fn j_sigma_examples() {
        let g = LogGrid::new(1e-3, 1e3, 10).unwrap();
        let v = power(-2.0, g);
        for r in [1e-2, 1.0, 37.0] {
            let j = j_sigma(std::slice::from_ref(&v), -2.0, r, 2.0 * r).unwrap();
            assert!((j - 2f64.ln()).abs() < 1e-14);
        }
        let v = power(-3.0, g);
        let j = j_sigma(&[v], -2.5, 1.0, 2.0).unwrap();
        assert!((j - 0.5).abs() < 1e-14);
    }

    #[test]
    fn sampled_profiles_integrate_accurately() {
        let g = LogGrid::new(0.5, 4.0, 400).unwrap();
        let mut v = power(-3.0, g);
        v.closed_form = None;
        let j = j_sigma(&[v], -2.5, 1.0, 2.0).unwrap();
        assert!((j - 0.5).abs() < 1e-9);
    }

    #[test]
    fn l2_membership() {
        let ball = LogGrid::new(1e-3, 1.0, 50).unwrap();
        let ext = LogGrid::new(1.0, 1e3, 50).unwrap();
        let v = l2_sigma_norm(&[power(-2.0, ball)], -2.5, Domain::Ball).unwrap();
        assert!((v * v - 1.0).abs() < 1e-12);
        let e = l2_sigma_norm(&[power(-3.0, ball)], -2.5, Domain::Ball).unwrap_err();
        assert_eq!(e, ConeError::Divergent { exponent: -3.0, sigma: -2.5 });
        let v = l2_sigma_norm(&[power(-3.0, ext)], -2.5, Domain::Exterior).unwrap();
        assert!((v * v - 1.0).abs() < 1e-12);
        let mut sampled = power(-2.0, LogGrid::new(1e-3, 1.0, 600).unwrap());
        sampled.closed_form = None;
        let v = l2_sigma_norm(&[sampled], -2.5, Domain::Ball).unwrap();
        assert!((v * v - 1.0).abs() < 1e-8, "{}", v * v - 1.0);
    }

    #[test]
    fn hardy_examples() {
        let c = make_simons_cone(3, 3).unwrap();
        let zero = |_: f64| (0.0, 0.0);
        let rep = hardy_gap(&c, &[TestProfile { k: 1, support: (1.0, 3.0), breakpoints: vec![], a: &zero }]).unwrap();
        assert_eq!(rep.gap, 0.0);
        let bump = |r: f64| ((1.0 - (r - 2.0).powi(2)).max(0.0), if (r - 2.0).abs() < 1.0 { -2.0 * (r - 2.0) } else { 0.0 });
        let rep = hardy_gap(&c, &[TestProfile { k: 1, support: (1.0, 3.0), breakpoints: vec![], a: &bump }]).unwrap();
        assert!(rep.gap > 0.0);
        let bad = |r: f64| (r, 1.0);
        assert!(hardy_gap(&c, &[TestProfile { k: 1, support: (1.0, 3.0), breakpoints: vec![], a: &bad }]).is_err());
    }

    #[test]
    fn extremal_family_gap_closed_form() {
        let c = make_simons_cone(3, 3).unwrap();
        for j in [10.0f64, 100.0, 1000.0] {
            let l = j.ln();
            let a = move |r: f64| {
                let tau = r.ln();
                let w = (std::f64::consts::PI * tau / (2.0 * l)).cos();
                let dw = -(std::f64::consts::PI / (2.0 * l)) * (std::f64::consts::PI * tau / l).sin();
                let p = r.powf(-2.5);
                (p * w * w, p / r * (-2.5 * w * w + dw))
            };
            let rep = hardy_gap(&c, &[TestProfile { k: 1, support: (1.0 / j, j), breakpoints: vec![], a: &a }]).unwrap();
            let exact = std::f64::consts::PI.powi(2) / (4.0 * l);
            assert!((rep.gap - exact).abs() < 1e-9 * rep.hardy_mass.max(1.0), "{j}");
        }
    }

    #[test]
    fn single_exponent_k0_is_two() {
        assert_eq!(mode_k0(CertificateKind::Single, &[-0.5]).unwrap(), 2.0);
    }

    #[test]
    fn k0_simons_examples() {
        let c = make_simons_cone(3, 3).unwrap();
        let p = find_k0(&c, -2.5, 4, End::Infinity).unwrap();
        assert_eq!(p.k0, 2.0);
        let p = find_k0(&c, -1.2, 4, End::Infinity).unwrap();
        assert!(p.k0 >= 2.0);
        let pair = p.certificates.iter().find(|c| c.kind == CertificateKind::Pair).unwrap();
        assert_eq!(pair.k, 1);
        assert!(p.certificates.iter().all(|c| c.margin < 0.0));
    }

    #[test]
    fn k0_resonant_log_case() {
        let c = ConeDescriptor::custom(4, vec![CustomMode { mu: -1.0, mult: 1 }, CustomMode { mu: 3.0, mult: 4 }]).unwrap();
        let p = find_k0(&c, -0.5, 2, End::Infinity).unwrap();
        assert_eq!(p.certificates[0].kind, CertificateKind::Log);
        assert!(p.k0 > 2.0);
    }

    #[test]
    fn k0_requires_tail() {
        let c = make_simons_cone(3, 3).unwrap();
        assert!(matches!(find_k0(&c, -1.2, 1, End::Infinity), Err(ConeError::NoCertificate(_))));
    }

    #[test]
    fn window_monotonicity_examples() {
        let ext = LogGrid::new(1.0, 1e6, 10).unwrap();
        let v = check_window_monotonicity(&[power(-3.0, ext)], -2.5, 2.0, 1.0, 6, End::Infinity).unwrap();
        assert!(v.monotone);
        let v = check_window_monotonicity(&[power(-2.0, ext)], -2.5, 2.0, 1.0, 6, End::Infinity).unwrap();
        assert_eq!(v.first_violation, Some(0));
        let z = RadialFunction::from_terms(1, 1, ext, vec![], Provenance::Synthetic);
        assert!(check_window_monotonicity(&[z], -2.5, 2.0, 1.0, 6, End::Infinity).unwrap().monotone);
    }

    #[test]
    fn rate_examples() {
        let c = make_simons_cone(3, 3).unwrap();
        let g = LogGrid::new(1e-7, 1.0, 10).unwrap();
        let rep = estimate_asymptotic_rate(&[power(-2.0, g)], &c, End::Tip, &dyadic_starts(0.25, 8, End::Tip), RateOptions::default()).unwrap();
        assert!((rep.raw_exponent + 2.0).abs() < 1e-10);
        assert_eq!(rep.snapped, Some(-2.0));
        let two = RadialFunction::from_terms(
            1,
            1,
            g,
            vec![PowerTerm::new(1.0, -2.0, 0), PowerTerm::new(0.3, -3.0, 0)],
            Provenance::Synthetic,
        );
        let starts: Vec<f64> = (0..10).map(|j| 1e-6 * 2f64.powi(j)).collect();
        let rep = estimate_asymptotic_rate(&[two], &c, End::Tip, &starts, RateOptions::default()).unwrap();
        assert_eq!(rep.snapped, Some(-3.0));
        assert!(estimate_asymptotic_rate(&[power(-2.0, g)], &c, End::Tip, &starts[..3], RateOptions::default()).is_err());
        let z = RadialFunction::from_terms(1, 1, g, vec![], Provenance::Synthetic);
        assert_eq!(estimate_asymptotic_rate(&[z], &c, End::Tip, &starts, RateOptions::default()).unwrap_err(), ConeError::ZeroFunction);
    }
}
