//! Acceptance suite: one line per criterion, non-zero exit on any failure.

#![allow(clippy::type_complexity, clippy::neg_cmp_op_on_partial_ord)]

use std::time::Instant;

use conelab_cli::sampling::{random_bumps, rng};
use conelab_core::cone::{classify_stability, make_simons_cone, Stability};
use conelab_core::foliation::{
    count_cone_crossings, fit_leaf_rate, leaf_graph_over_cone, leaf_window_energy, shoot_leaf, RateLabel,
};
use conelab_core::modes::{
    active_conditions, gamma_set, homogeneous_mode, indicial_roots, mode_list, mode_residual, solve_prescribed, Domain,
    ModeData, ModeProblem, SigmaWeight,
};
use conelab_core::numeric::grid::LogGrid;
use conelab_core::radial::RadialFunction;
use conelab_core::spectral::{
    boundary_one_solution, green_closed_form, greens_function, mode_eigen, Potential, TipGrid,
};
use conelab_core::weighted::{
    check_window_monotonicity, dyadic_starts, estimate_asymptotic_rate, find_k0, hardy_gap, CertificateKind, End,
    RateOptions, TestProfile,
};
use rand::Rng;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn ok<T, E: std::fmt::Display>(r: Result<T, E>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

// ---------------------------------------------------------------- oracles

/// Composite Simpson rule on `[a, b]` with `n` (even) panels.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

/// `J_nu(x) * Gamma(nu + 1) / (x/2)^nu` by its power series; same positive zeros as `J_nu`.
fn bessel_reduced(nu: f64, x: f64) -> f64 {
    let z = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for m in 0..200 {
        let m = m as f64;
        term *= -z / ((m + 1.0) * (m + 1.0 + nu));
        sum += term;
        if term.abs() < 1e-18 * sum.abs().max(1e-300) && m > 5.0 {
            break;
        }
    }
    sum
}

fn first_bessel_zero(nu: f64) -> f64 {
    let mut a = 0.5;
    let mut b = a;
    while bessel_reduced(nu, b).signum() == bessel_reduced(nu, a).signum() {
        a = b;
        b += 0.05;
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if bessel_reduced(nu, m).signum() == bessel_reduced(nu, a).signum() {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Indicial exponents of Simons(p, q) in `[lo, hi]` by direct lattice enumeration.
fn lattice_gammas(p: u32, q: u32, lo: f64, hi: f64) -> Vec<f64> {
    let (pf, qf) = (p as f64, q as f64);
    let n = pf + qf + 1.0;
    let half = (n - 2.0) / 2.0;
    let mut out: Vec<f64> = Vec::new();
    for l in 0..40u32 {
        for m in 0..40u32 {
            let (lf, mf) = (l as f64, m as f64);
            let mu = (pf + qf) * (lf * (lf + pf - 1.0) / pf + mf * (mf + qf - 1.0) / qf - 1.0);
            let d = half * half + mu;
            if d < 0.0 {
                continue;
            }
            for g in [-half + d.sqrt(), -half - d.sqrt()] {
                if g >= lo && g <= hi && !out.iter().any(|x| (x - g).abs() < 1e-9) {
                    out.push(g);
                }
            }
        }
    }
    out.sort_by(f64::total_cmp);
    out
}

/// `int_r^s u(t)^2 t^{-1-2 sigma} dt` for a sum of pure powers, by Simpson in `ln t`.
fn window(terms: &[(f64, f64)], sigma: f64, r: f64, s: f64) -> f64 {
    let f = |tau: f64| {
        let t = tau.exp();
        let u: f64 = terms.iter().map(|(c, g)| c * t.powf(*g)).sum();
        u * u * t.powf(-2.0 * sigma)
    };
    simpson(f, r.ln(), s.ln(), 2000)
}

// ---------------------------------------------------------------- criteria

fn c1_stability_table() -> Outcome {
    let mut rows = 0;
    for p in 1..=12u32 {
        for q in p..=12 {
            let cone = ok(make_simons_cone(p, q))?;
            let n = (p + q + 1) as i64;
            // mu_1 = -(n - 1) exceeds -((n - 2)/2)^2 exactly when (n - 2)^2 > 4 (n - 1).
            let strict = (n - 2) * (n - 2) > 4 * (n - 1);
            let got = classify_stability(&cone);
            ensure!(strict == (p + q >= 6), "integer oracle disagrees with p+q>=6 at ({p},{q})");
            let want = if strict { Stability::StrictlyStable } else { Stability::Unstable };
            ensure!(got == want, "Simons({p},{q}) classified {got}, expected {want}");
            rows += 1;
        }
    }
    Ok(format!("{rows} cones, StrictlyStable iff p+q>=6"))
}

fn c2_indicial_roots() -> Outcome {
    for (p, q) in [(3, 3), (5, 1)] {
        let cone = ok(make_simons_cone(p, q))?;
        let md = ok(indicial_roots(&cone, 1))?;
        ensure!(md.gamma_plus == -2.0 && md.gamma_minus == -3.0, "Simons({p},{q}): ({}, {})", md.gamma_plus, md.gamma_minus);
    }
    let cone = ok(make_simons_cone(3, 3))?;
    let set = ok(gamma_set(&cone, -5.0, 1.5))?.values();
    let want = [-5.0, -3.0, -2.0, 0.0, 1.0];
    ensure!(set == want, "Gamma_C on [-5, 1.5] = {set:?}");
    let oracle = lattice_gammas(3, 3, -5.0, 1.5);
    ensure!(oracle.len() == set.len() && oracle.iter().zip(&set).all(|(a, b)| (a - b).abs() < 1e-12), "lattice oracle {oracle:?}");
    Ok(format!("gamma_1 = (-2, -3) on Simons(3,3) and Simons(5,1); Gamma_C on [-5, 1.5] = {set:?}"))
}

struct Instance {
    k: usize,
    domain: Domain,
    sigma: f64,
    phi: f64,
    psi: f64,
    src: Option<(f64, f64)>,
}

fn random_instance(g: &mut rand_chacha::ChaCha8Rng, modes: &[ModeData], cone: &conelab_core::cone::ConeDescriptor) -> Instance {
    loop {
        let k = g.gen_range(1..=modes.len());
        let domain = if g.gen_bool(0.5) { Domain::Ball } else { Domain::Exterior };
        let sigma: f64 = g.gen_range(-6.5..1.5);
        if SigmaWeight::new(cone, sigma).map(|w| w.margin < 0.1).unwrap_or(true) {
            continue;
        }
        let md = &modes[k - 1];
        let (d, n) = active_conditions(md, sigma, domain);
        let (phi, psi) = if d || n { (g.gen_range(-2.0..2.0), g.gen_range(-2.0..2.0)) } else { (0.0, 0.0) };
        let src = if g.gen_bool(0.7) {
            // Source c r^e inside L^2_{sigma-2} on the chosen side.
            let e = match domain {
                Domain::Ball => sigma - 2.0 + g.gen_range(0.2..2.0),
                Domain::Exterior => sigma - 2.0 - g.gen_range(0.2..2.0),
            };
            Some((g.gen_range(-3.0..3.0), e))
        } else {
            None
        };
        return Instance { k, domain, sigma, phi, psi, src };
    }
}

fn solve_one(
    cone: &conelab_core::cone::ConeDescriptor,
    inst: &Instance,
    src: &[(f64, f64)],
    phi: f64,
    psi: f64,
    grid: LogGrid,
) -> Result<RadialFunction, String> {
    let f = |r: f64| src.iter().map(|(c, e)| c * r.powf(*e)).sum::<f64>();
    let sw = ok(SigmaWeight::new(cone, inst.sigma))?;
    let fref: &(dyn Fn(f64) -> f64 + Sync) = &f;
    let prob = ModeProblem { k: inst.k, f: (!src.is_empty()).then_some(fref), phi, psi };
    let sol = ok(solve_prescribed(cone, &sw, &[prob], inst.domain, grid))?;
    Ok(sol.modes.into_iter().next().unwrap())
}

fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let scale = a.iter().chain(b).fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())) / scale
}

fn c3_mode_solver() -> Outcome {
    let cone = ok(make_simons_cone(3, 3))?;
    let modes = ok(mode_list(&cone, 4))?;
    let mut g = rng(20_240_731);
    let per_octave = 64;
    let octaves = 10;
    let ball = ok(LogGrid::dyadic(2f64.powi(-(octaves as i32)), octaves, per_octave))?;
    let ext = ok(LogGrid::dyadic(1.0, octaves, per_octave))?;
    let (mut worst_res, mut worst_lin, mut worst_scale) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..50 {
        let inst = random_instance(&mut g, &modes, &cone);
        let md = &modes[inst.k - 1];
        let grid = if inst.domain == Domain::Ball { ball } else { ext };
        let src: Vec<(f64, f64)> = inst.src.into_iter().collect();
        let u = solve_one(&cone, &inst, &src, inst.phi, inst.psi, grid)?;
        let f = |r: f64| src.iter().map(|(c, e)| c * r.powf(*e)).sum::<f64>();
        let fref: &(dyn Fn(f64) -> f64 + Sync) = &f;
        let res = mode_residual(md, &u, (!src.is_empty()).then_some(fref), None);
        worst_res = worst_res.max(res);

        // Linearity: a second data set, solved separately and jointly.
        let e2 = match inst.domain {
            Domain::Ball => inst.sigma - 2.0 + 0.7,
            Domain::Exterior => inst.sigma - 2.0 - 0.7,
        };
        let src2 = vec![(1.3, e2)];
        let (phi2, psi2) = if inst.phi != 0.0 || inst.psi != 0.0 { (0.4, -1.1) } else { (0.0, 0.0) };
        let v = solve_one(&cone, &inst, &src2, phi2, psi2, grid)?;
        let both: Vec<(f64, f64)> = src.iter().chain(&src2).copied().collect();
        let w = solve_one(&cone, &inst, &both, inst.phi + phi2, inst.psi + psi2, grid)?;
        let sum: Vec<f64> = u.value.iter().zip(&v.value).map(|(a, b)| a + b).collect();
        worst_lin = worst_lin.max(rel_diff(&w.value, &sum));

        // Scaling covariance: u(lambda r) solves the problem with source lambda^2 f(lambda r).
        let lambda: f64 = if inst.domain == Domain::Ball { 0.5 } else { 2.0 };
        let (ul, dul) = u.node_data(lambda)?;
        let src_l: Vec<(f64, f64)> = src.iter().map(|(c, e)| (c * lambda.powf(e + 2.0), *e)).collect();
        let (d, n) = active_conditions(md, inst.sigma, inst.domain);
        let (phi_l, psi_l) = if d || n { (ul, dul) } else { (0.0, 0.0) };
        let scaled = solve_one(&cone, &inst, &src_l, phi_l, psi_l, grid)?;
        let shift = per_octave;
        let (a, b): (Vec<f64>, Vec<f64>) = match inst.domain {
            Domain::Ball => (scaled.value[shift..].to_vec(), u.value[..u.value.len() - shift].to_vec()),
            Domain::Exterior => (scaled.value[..scaled.value.len() - shift].to_vec(), u.value[shift..].to_vec()),
        };
        worst_scale = worst_scale.max(rel_diff(&a, &b));
    }
    ensure!(worst_res < 1e-9, "max residual {worst_res:e}");
    ensure!(worst_lin < 1e-10, "linearity defect {worst_lin:e}");
    ensure!(worst_scale < 1e-10, "scaling defect {worst_scale:e}");
    Ok(format!("50 instances: residual {worst_res:.2e}, linearity {worst_lin:.2e}, scaling {worst_scale:.2e}"))
}

trait NodeData {
    fn node_data(&self, r: f64) -> Result<(f64, f64), String>;
}

impl NodeData for RadialFunction {
    /// `(u(r), r u'(r))` read off the grid node at `r`.
    fn node_data(&self, r: f64) -> Result<(f64, f64), String> {
        let i = self
            .r
            .iter()
            .position(|x| (x / r - 1.0).abs() < 1e-13)
            .ok_or_else(|| format!("r = {r} is not a grid node"))?;
        Ok((self.value[i], self.dvalue[i] * self.r[i]))
    }
}

fn c4_eigen_oracle() -> Outcome {
    let cone = ok(make_simons_cone(3, 3))?;
    let e1 = ok(mode_eigen(&cone, 1, 1, 2000))?;
    let md1 = ok(indicial_roots(&cone, 1))?;
    let z1 = first_bessel_zero(md1.b);
    let rel1 = (e1.lambdas[0] / (z1 * z1) - 1.0).abs();
    ensure!(rel1 < 1e-3, "mode 1: {} vs {}", e1.lambdas[0], z1 * z1);
    ensure!((z1 - std::f64::consts::PI).abs() < 1e-12, "J_1/2 zero {z1}");
    let k0 = ok(mode_list(&cone, 4))?.iter().position(|m| m.mu == 0.0).ok_or("no mu = 0 mode")? + 1;
    let md0 = ok(indicial_roots(&cone, k0))?;
    let e0 = ok(mode_eigen(&cone, k0, 1, 2000))?;
    let z0 = first_bessel_zero(md0.b);
    let rel0 = (e0.lambdas[0] / (z0 * z0) - 1.0).abs();
    ensure!((md0.b - 2.5).abs() < 1e-15, "mu = 0 mode has order {}", md0.b);
    ensure!(rel0 < 1e-3, "mu = 0 mode: {} vs {}", e0.lambdas[0], z0 * z0);
    Ok(format!(
        "lambda_1 = {:.8} (pi^2 rel {rel1:.1e}); mu=0 mode {:.6} vs j_(5/2,1)^2 = {:.6} (rel {rel0:.1e})",
        e1.lambdas[0],
        e0.lambdas[0],
        z0 * z0
    ))
}

fn c5_green() -> Outcome {
    let cone = ok(make_simons_cone(3, 3))?;
    let tip = TipGrid::default();
    let g = ok(greens_function(&cone, &Potential::zero(), 1.0, tip))?;
    let md = ok(indicial_roots(&cone, 1))?;
    let closed = green_closed_form(&md, 1.0);
    let mut worst = 0.0f64;
    for (r, v) in g.profile.r.iter().zip(&g.profile.value) {
        let c: f64 = closed.iter().map(|t| t.eval(*r).0).sum();
        worst = worst.max(((v - c) / c).abs());
    }
    ensure!(worst < 1e-10, "Green vs closed form: {worst:e}");
    let r_lo = g.profile.grid.r_lo;
    let starts = dyadic_starts(r_lo * 2f64.powi(9), 8, End::Tip);
    let rate_g = ok(estimate_asymptotic_rate(std::slice::from_ref(&g.profile), &cone, End::Tip, &starts, RateOptions::default()))?;
    let xi = ok(boundary_one_solution(&cone, &Potential::zero(), 1.0, tip))?;
    let rate_x = ok(estimate_asymptotic_rate(&[xi], &cone, End::Tip, &starts, RateOptions::default()))?;
    ensure!(rate_g.snapped == Some(-3.0), "G snapped {:?} (raw {})", rate_g.snapped, rate_g.raw_exponent);
    ensure!(rate_x.snapped == Some(-2.0), "xi snapped {:?} (raw {})", rate_x.snapped, rate_x.raw_exponent);
    ensure!((rate_g.raw_exponent / -3.0 - 1.0).abs() < 0.02, "G raw {}", rate_g.raw_exponent);
    ensure!((rate_x.raw_exponent / -2.0 - 1.0).abs() < 0.02, "xi raw {}", rate_x.raw_exponent);
    Ok(format!(
        "closed form to {worst:.1e}; AR(G) raw {:.5} -> -3, AR(xi) raw {:.5} -> -2",
        rate_g.raw_exponent, rate_x.raw_exponent
    ))
}

fn c6_hardy() -> Outcome {
    let mut worst = f64::INFINITY;
    for (p, q) in [(3u32, 3u32), (5, 1), (3, 4)] {
        let cone = ok(make_simons_cone(p, q))?;
        let mut g = rng(1000 + 10 * p as u64 + q as u64);
        for _ in 0..1000 {
            let bumps = random_bumps(&mut g, 4);
            let fns: Vec<Box<dyn Fn(f64) -> (f64, f64) + Sync>> =
                bumps.iter().map(|b| Box::new(move |r| b.eval(r)) as Box<dyn Fn(f64) -> (f64, f64) + Sync>).collect();
            let profiles: Vec<TestProfile> = bumps
                .iter()
                .zip(&fns)
                .map(|(b, f)| TestProfile { k: b.k, support: (b.lo, b.hi), breakpoints: vec![], a: f.as_ref() })
                .collect();
            let rep = ok(hardy_gap(&cone, &profiles))?;
            ensure!(rep.gap >= -1e-8 * rep.l2_mass, "Simons({p},{q}): gap {} with |phi|^2 {}", rep.gap, rep.l2_mass);
            worst = worst.min(rep.gap / rep.l2_mass);
        }
    }
    let cone = ok(make_simons_cone(3, 3))?;
    let n = cone.n as f64;
    let j = 1000.0f64;
    let l = j.ln();
    let pi = std::f64::consts::PI;
    let a = move |r: f64| {
        let tau = r.ln();
        let w = (pi * tau / (2.0 * l)).cos().powi(2);
        let dw = -(pi / (2.0 * l)) * (pi * tau / l).sin();
        let p = r.powf(-(n - 2.0) / 2.0);
        (p * w, p / r * (-(n - 2.0) / 2.0 * w + dw))
    };
    let rep = ok(hardy_gap(&cone, &[TestProfile { k: 1, support: (1.0 / j, j), breakpoints: vec![], a: &a }]))?;
    let ratio = rep.gap / rep.l2_mass;
    ensure!((0.0..1e-2).contains(&ratio), "extremal ratio {ratio:e}");
    Ok(format!(
        "3000 profiles, min gap/|phi|^2 = {worst:.3e}; extremal j=1000: gap {:.4e}, gap/|phi|^2 = {ratio:.2e}, gap/int(phi^2/r^2) = {:.2e}",
        rep.gap,
        rep.gap / rep.hardy_mass
    ))
}

fn c7_monotonicity() -> Outcome {
    let cone = ok(make_simons_cone(3, 3))?;
    let mut g = rng(77);
    let mut checked = 0usize;
    for sigma in [-2.5, -1.2] {
        let params = ok(find_k0(&cone, sigma, 8, End::Infinity))?;
        let modes = ok(mode_list(&cone, 8))?;
        for cert in &params.certificates {
            ensure!(cert.margin < 0.0, "mode {} margin {}", cert.k, cert.margin);
            let md = &modes[cert.k - 1];
            let gammas: Vec<f64> = [md.gamma_plus, md.gamma_minus].into_iter().filter(|x| *x < sigma).collect();
            ensure!(gammas.len() == cert.exponents.len(), "mode {}: exponent count", cert.k);
            // Inequality holds for the certified ratio and beyond, for random data.
            let mut ks = vec![params.k0, cert.k0];
            ks.extend((0..12).map(|_| g.gen_range(params.k0..50.0)));
            for &kk in &ks {
                for _ in 0..40 {
                    let r = 10f64.powf(g.gen_range(-1.0..2.0));
                    let terms: Vec<(f64, f64)> = gammas.iter().map(|gm| (g.gen_range(-1.0..1.0), *gm)).collect();
                    let inner = window(&terms, sigma, r, kk * r);
                    let outer = window(&terms, sigma, kk * r, kk * kk * r);
                    ensure!(outer < inner, "sigma {sigma}, mode {}, K {kk}: {outer} >= {inner}", cert.k);
                }
            }
            if cert.kind == CertificateKind::Pair && cert.k0 > 2.05 {
                // Just below the certified ratio some direction must fail.
                let kk = cert.k0 - 0.05;
                let fails = (0..4000).any(|i| {
                    let th = std::f64::consts::PI * i as f64 / 4000.0;
                    let terms = [(th.cos(), gammas[0]), (th.sin(), gammas[1])];
                    window(&terms, sigma, kk, kk * kk) >= window(&terms, sigma, 1.0, kk)
                });
                ensure!(fails, "sigma {sigma}, mode {}: no violation found below K0 = {}", cert.k, cert.k0);
            }
            checked += 1;
        }
        // Admissible exterior solutions: combinations of decaying branches on several modes.
        let grid = ok(LogGrid::new(1.0, params.k0.powi(7) * 2.0, 2000))?;
        let mut u = Vec::new();
        for md in modes.iter().take(4) {
            let cp = if md.gamma_plus < sigma { g.gen_range(-1.0..1.0) } else { 0.0 };
            let cm = if md.gamma_minus < sigma { g.gen_range(-1.0..1.0) } else { 0.0 };
            u.push(ok(homogeneous_mode(&cone, md.k, cp, cm, grid))?);
        }
        let v = ok(check_window_monotonicity(&u, sigma, params.k0, 1.0, 6, End::Infinity))?;
        ensure!(v.monotone, "sigma {sigma}: violation at window {:?}", v.first_violation);
        let sw = ok(SigmaWeight::new(&cone, sigma))?;
        let probs: Vec<ModeProblem> = (1..=3).map(|k| ModeProblem { k, f: None, phi: 1.0 / k as f64, psi: -0.5 }).collect();
        let sol = ok(solve_prescribed(&cone, &sw, &probs, Domain::Exterior, grid))?;
        let v = ok(check_window_monotonicity(&sol.modes, sigma, params.k0, 1.0, 6, End::Infinity))?;
        ensure!(v.monotone, "sigma {sigma}: solved family violates at {:?}", v.first_violation);
    }
    Ok(format!("{checked} certificates confirmed by quadrature; 6-window monotonicity holds for sigma in {{-2.5, -1.2}}"))
}

/// Recorded regression floor for the window quantity on the Simons(3,3) leaf through x0 = 1.
const WINDOW_FLOOR: f64 = 4.0e4;

fn c8_foliation() -> Outcome {
    let cone = ok(make_simons_cone(3, 3))?;
    let leaf = ok(shoot_leaf(3, 3, 1.0, 1e4, 1e-10))?;
    let cr = count_cone_crossings(&leaf);
    ensure!(cr.count == 0, "Simons(3,3) leaf crosses {} times", cr.count);
    let graph = ok(leaf_graph_over_cone(&leaf))?;
    ensure!(graph.decades() >= 3.0, "tail spans {} decades", graph.decades());
    let fit = ok(fit_leaf_rate(&graph, &cone))?;
    ensure!(fit.rate.snapped == Some(-2.0) && fit.label == Some(RateLabel::StrictRate), "rate {:?}", fit.rate.snapped);
    ensure!((fit.rate.raw_exponent / -2.0 - 1.0).abs() < 0.02, "raw {}", fit.rate.raw_exponent);
    let energy = ok(leaf_window_energy(&graph, &cone, 3.0))?;
    ensure!(energy.minimum > WINDOW_FLOOR, "window minimum {}", energy.minimum);

    let osc = ok(shoot_leaf(1, 1, 1.0, 1e4, 1e-10))?;
    let c = count_cone_crossings(&osc);
    ensure!(c.count >= 3, "Simons(1,1) crossings {}", c.count);
    let target = (std::f64::consts::PI / 1.75f64.sqrt()).exp();
    let ratios = c.ratios();
    for r in &ratios {
        ensure!((r / target - 1.0).abs() < 0.05, "crossing ratio {r} vs {target}");
    }
    Ok(format!(
        "Simons(3,3): 0 crossings, raw rate {:.5} -> -2 over {:.2} decades, window min {:.4e} > {WINDOW_FLOOR:e}; Simons(1,1): {} crossings, ratios {:?}",
        fit.rate.raw_exponent,
        graph.decades(),
        energy.minimum,
        c.count,
        ratios.iter().map(|r| format!("{r:.4}")).collect::<Vec<_>>()
    ))
}

fn c9_determinism() -> Outcome {
    let exe = env!("CARGO_BIN_EXE_conelab");
    let runs: [&[&str]; 5] = [
        &["hardy", "--cone", "simons:3,4", "--samples", "40", "--seed", "42"],
        &["foliate", "--cone", "simons:2,4", "--x0", "1", "--smax", "1e3"],
        &["solve", "--cone", "simons:3,3", "--sigma", "-2.5", "--domain", "ball", "--mode", "1,1,0", "--mode", "2,0.5,0.25,1,-1.5"],
        &["green", "--cone", "simons:3,3", "--r2", "1"],
        &["eigen", "--cone", "simons:3,3", "--k", "1", "--count", "2", "--grid", "400"],
    ];
    let tmp = ok(tempfile::tempdir())?;
    let mut files = 0;
    for (i, args) in runs.iter().enumerate() {
        let mut outputs = Vec::new();
        for rep in 0..2 {
            let dir = tmp.path().join(format!("run{i}_{rep}"));
            let status = ok(std::process::Command::new(exe).args(*args).arg("--out").arg(&dir).output())?;
            ensure!(status.status.success(), "{args:?}: {}", String::from_utf8_lossy(&status.stderr));
            let mut names: Vec<_> = ok(std::fs::read_dir(&dir))?.map(|e| e.unwrap().file_name()).collect();
            names.sort();
            let contents: Vec<(std::ffi::OsString, Vec<u8>)> =
                names.into_iter().map(|n| (n.clone(), std::fs::read(dir.join(&n)).unwrap())).collect();
            outputs.push(contents);
        }
        ensure!(outputs[0] == outputs[1], "{args:?}: artifacts differ between runs");
        files += outputs[0].len();
    }
    Ok(format!("{} commands, {files} artifacts byte-identical across repeated runs", runs.len()))
}

fn main() {
    let criteria: [(&str, f64, fn() -> Outcome); 9] = [
        ("stability table", 1.0, c1_stability_table),
        ("indicial roots", 1.0, c2_indicial_roots),
        ("mode-solver residuals", 10.0, c3_mode_solver),
        ("eigen oracle", 5.0, c4_eigen_oracle),
        ("Green asymptotics", 5.0, c5_green),
        ("Hardy suite", 30.0, c6_hardy),
        ("growth monotonicity", 30.0, c7_monotonicity),
        ("foliation dichotomy and rates", 60.0, c8_foliation),
        ("determinism", f64::INFINITY, c9_determinism),
    ];
    let mut failed = 0;
    for (i, (name, budget, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let result = f();
        let secs = t.elapsed().as_secs_f64();
        let result = match result {
            Ok(m) if secs > *budget => Err(format!("{m}; took {secs:.2} s, budget {budget} s")),
            other => other,
        };
        match result {
            Ok(m) => println!("PASS  [{}] {name} ({secs:.2} s): {m}", i + 1),
            Err(m) => {
                failed += 1;
                println!("FAIL  [{}] {name} ({secs:.2} s): {m}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
