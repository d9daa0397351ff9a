//! Subcommand implementations.

#![allow(clippy::type_complexity)]

use std::fs;
use std::io::Read;

use conelab_core::cone::{classify_stability, cross_section_spectrum, make_simons_cone, ConeDescriptor, ConeKind};
use conelab_core::foliation::{
    count_cone_crossings, fit_leaf_rate_with, foliation_disjointness, leaf_graph_over_cone, shoot_leaf, ProfileCurve,
};
use conelab_core::io::{self as cio, fmt_f64, RadialSidecar};
use conelab_core::modes::{
    indicial_roots, mode_list, mode_residual, solve_perturbed, solve_prescribed, Domain, InverseSquare, ModeData,
    ModeProblem, SigmaWeight,
};
use conelab_core::numeric::grid::LogGrid;
use conelab_core::radial::{PowerTerm, Provenance, RadialFunction};
use conelab_core::spectral::{boundary_one_solution, greens_function, mode_eigen_with_cutoff, Potential, TipGrid, DEFAULT_R_MIN};
use conelab_core::weighted::{
    check_window_monotonicity, dyadic_starts, estimate_asymptotic_rate, find_k0, hardy_gap, j_sigma, End, RateOptions,
    TestProfile,
};
use rayon::prelude::*;
use serde_json::json;

use crate::output::Artifacts;
use crate::sampling::{random_bumps, rng, Bump};
use crate::{CliError, CliResult, Command, Common, DomainArg, EndArg, FunctionArgs, GridArgs};

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

/// Parses `simons:p,q` or `file:<path>`.
pub fn parse_cone(spec: &str) -> CliResult<ConeDescriptor> {
    if let Some(rest) = spec.strip_prefix("simons:") {
        let parts: Vec<&str> = rest.split(',').collect();
        if parts.len() != 2 {
            return Err(invalid(format!("cone {spec:?}: expected simons:p,q")));
        }
        let p: u32 = parts[0].trim().parse().map_err(|_| invalid(format!("cone {spec:?}: p is not a positive integer")))?;
        let q: u32 = parts[1].trim().parse().map_err(|_| invalid(format!("cone {spec:?}: q is not a positive integer")))?;
        return Ok(make_simons_cone(p, q)?);
    }
    if let Some(path) = spec.strip_prefix("file:") {
        let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{path}: {e}")))?;
        return serde_json::from_str(&text).map_err(|e| invalid(format!("cone document {path}: {e}")));
    }
    Err(invalid(format!("cone {spec:?}: expected simons:p,q or file:<path>")))
}

fn require_cone(c: &Common) -> CliResult<ConeDescriptor> {
    match &c.cone {
        Some(s) => parse_cone(s),
        None => Err(invalid("--cone is required")),
    }
}

fn simons_pq(cone: &ConeDescriptor) -> CliResult<(u32, u32)> {
    match cone.kind {
        ConeKind::Simons { p, q } => Ok((p, q)),
        _ => Err(invalid("foliation leaves need a Simons cone")),
    }
}

fn float_list(s: &str, what: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| invalid(format!("{what}: {t:?} is not a number"))))
        .collect()
}

fn require_positive(v: f64, what: &str) -> CliResult<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{what} must be positive and finite, got {v}")))
    }
}

fn make_grid(g: &GridArgs, lo: f64, hi: f64) -> CliResult<LogGrid> {
    Ok(LogGrid::new(g.r_lo.unwrap_or(lo), g.r_hi.unwrap_or(hi), g.points)?)
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> conelab_core::Result<()>) -> CliResult<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

fn read_input(path: &str) -> CliResult<Vec<u8>> {
    if path == "-" {
        let mut buf = Vec::new();
        std::io::stdin().read_to_end(&mut buf)?;
        Ok(buf)
    } else {
        fs::read(path).map_err(|e| CliError::Io(format!("{path}: {e}")))
    }
}

/// Loads `--profile` files (with sidecars) and `--power` terms.
fn load_functions(f: &FunctionArgs) -> CliResult<Vec<RadialFunction>> {
    let mut out = Vec::new();
    for path in &f.profile {
        let side_path = path.with_extension("json");
        let side_text = fs::read_to_string(&side_path).map_err(|e| CliError::Io(format!("{}: {e}", side_path.display())))?;
        let side: RadialSidecar =
            serde_json::from_str(&side_text).map_err(|e| invalid(format!("{}: {e}", side_path.display())))?;
        let bytes = fs::read(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        out.push(cio::read_radial(&bytes[..], &side)?);
    }
    if !f.power.is_empty() {
        let mut terms = Vec::new();
        for s in &f.power {
            let v = float_list(s, "--power")?;
            if v.len() != 2 {
                return Err(invalid(format!("--power {s:?}: expected c,e")));
            }
            terms.push(PowerTerm::new(v[0], v[1], 0));
        }
        let grid = make_grid(&f.grid, 1e-6, 1e6)?;
        out.push(RadialFunction::from_terms(1, 1, grid, terms, Provenance::Synthetic));
    }
    if out.is_empty() {
        return Err(invalid("no function given: use --profile or --power"));
    }
    Ok(out)
}

fn end(e: EndArg) -> End {
    match e {
        EndArg::Tip => End::Tip,
        EndArg::Infinity => End::Infinity,
    }
}

fn root_text(md: &ModeData, g: f64) -> String {
    if md.exact {
        format!("{g}")
    } else {
        fmt_f64(g)
    }
}

fn load_profile(path: &str, p: u32, q: u32) -> CliResult<ProfileCurve> {
    let bytes = read_input(path)?;
    Ok(cio::read_profile(&bytes[..], p, q)?)
}

pub fn dispatch(cmd: Command) -> CliResult<()> {
    match cmd {
        Command::Spectrum { common, kmax } => {
            let cone = require_cone(&common)?;
            let s = cross_section_spectrum(&cone, kmax)?;
            println!("k,mu,mult");
            for (i, m) in s.modes.iter().enumerate() {
                let mu = m.mu_exact.map(|r| r.to_string()).unwrap_or_else(|| fmt_f64(m.mu));
                println!("{},{mu},{}", i + 1, m.mult);
            }
            let mut a = Artifacts::new(common.out.clone(), "spectrum", Some(cone), common.seed, json!({ "kmax": kmax }));
            a.add_json("spectrum.json", &s)?;
            a.commit()
        }
        Command::Indicial { common, k } => {
            let cone = require_cone(&common)?;
            let md = indicial_roots(&cone, k)?;
            if md.complex {
                let (re, im) = (md.gamma_plus, md.b);
                println!("γ± = {} ± {}i", fmt_f64(re), fmt_f64(im));
            } else {
                println!("γ⁺ = {}, γ⁻ = {}", root_text(&md, md.gamma_plus), root_text(&md, md.gamma_minus));
            }
            let mut a = Artifacts::new(common.out.clone(), "indicial", Some(cone), common.seed, json!({ "k": k }));
            a.add_json("indicial.json", &md)?;
            a.commit()
        }
        Command::Classify { common } => {
            let cone = require_cone(&common)?;
            let st = classify_stability(&cone);
            println!("{st}");
            let mut a = Artifacts::new(common.out.clone(), "classify", Some(cone), common.seed, json!({}));
            a.add_json("classify.json", &json!({ "stability": st.to_string() }))?;
            a.commit()
        }
        Command::Modes { common, kmax } => {
            let cone = require_cone(&common)?;
            let list = mode_list(&cone, kmax)?;
            println!("k,mu,mult,gamma_plus,gamma_minus,complex,resonant");
            for m in &list {
                println!(
                    "{},{},{},{},{},{},{}",
                    m.k,
                    fmt_f64(m.mu),
                    m.mult,
                    fmt_f64(m.gamma_plus),
                    fmt_f64(m.gamma_minus),
                    m.complex,
                    m.resonant
                );
            }
            let mut a = Artifacts::new(common.out.clone(), "modes", Some(cone), common.seed, json!({ "kmax": kmax }));
            a.add_json("modes.json", &list)?;
            a.commit()
        }
        Command::Solve { common, sigma, domain, modes, eps, tol, max_iter, grid } => {
            let cone = require_cone(&common)?;
            let sw = SigmaWeight::new(&cone, sigma)?;
            let dom = match domain {
                DomainArg::Ball => Domain::Ball,
                DomainArg::Exterior => Domain::Exterior,
            };
            let g = match dom {
                Domain::Ball => make_grid(&grid, 1e-3, 1.0)?,
                Domain::Exterior => make_grid(&grid, 1.0, 1e3)?,
            };
            let mut specs = Vec::new();
            for m in &modes {
                let v = float_list(m, "--mode")?;
                if v.len() != 3 && v.len() != 5 {
                    return Err(invalid(format!("--mode {m:?}: expected k,phi,psi[,c,e]")));
                }
                if v[0] < 1.0 || v[0].fract() != 0.0 {
                    return Err(invalid(format!("--mode {m:?}: k must be a positive integer")));
                }
                let src = (v.len() == 5).then(|| (v[3], v[4]));
                specs.push((v[0] as usize, v[1], v[2], src));
            }
            let sources: Vec<Option<Box<dyn Fn(f64) -> f64 + Sync>>> = specs
                .iter()
                .map(|s| s.3.map(|(c, e)| Box::new(move |r: f64| c * r.powf(e)) as Box<dyn Fn(f64) -> f64 + Sync>))
                .collect();
            let problems: Vec<ModeProblem> = specs
                .iter()
                .zip(&sources)
                .map(|(s, f)| ModeProblem { k: s.0, f: f.as_deref(), phi: s.1, psi: s.2 })
                .collect();
            let (sol, report) = match eps {
                Some(e) => {
                    let (s, r) = solve_perturbed(&cone, &sw, &problems, &InverseSquare { eps: e }, dom, g, tol, max_iter)?;
                    (s, Some(r))
                }
                None => (solve_prescribed(&cone, &sw, &problems, dom, g)?, None),
            };
            let list = mode_list(&cone, specs.iter().map(|s| s.0).max().unwrap_or(1))?;
            let mut a = Artifacts::new(
                common.out.clone(),
                "solve",
                Some(cone),
                common.seed,
                json!({ "sigma": sigma, "domain": format!("{domain:?}").to_lowercase(), "modes": modes, "eps": eps, "grid": g }),
            );
            let mut residuals = Vec::new();
            println!("mode,c_plus,c_minus,residual");
            for (i, rf) in sol.modes.iter().enumerate() {
                let md = &list[rf.mode - 1];
                let extra = eps.map(|e| rf.value.iter().map(|u| e * u).collect::<Vec<f64>>());
                let res = mode_residual(md, rf, problems[i].f, extra.as_deref());
                residuals.push(res);
                let (cp, cm) = rf.coefficients.unwrap_or((f64::NAN, f64::NAN));
                println!("{},{},{},{}", rf.mode, fmt_f64(cp), fmt_f64(cm), fmt_f64(res));
                a.add(format!("mode_{}_{}.csv", i + 1, rf.mode), csv_bytes(|b| cio::write_radial(b, rf))?);
                a.add_json(format!("mode_{}_{}.json", i + 1, rf.mode), &RadialSidecar::from(rf))?;
            }
            a.add_json(
                "solution.json",
                &json!({ "weighted_sup": sol.weighted_sup, "residuals": residuals, "iteration": report }),
            )?;
            a.commit()
        }
        Command::Eigen { common, k, count, grid, r_min } => {
            let cone = require_cone(&common)?;
            let rm = r_min.unwrap_or(DEFAULT_R_MIN);
            let e = mode_eigen_with_cutoff(&cone, k, count, grid, rm)?;
            for (j, l) in e.lambdas.iter().enumerate() {
                println!("lambda_{} = {}", j + 1, fmt_f64(*l));
            }
            println!("extrapolation_error = {}", fmt_f64(e.extrapolation_error));
            let mut a = Artifacts::new(
                common.out.clone(),
                "eigen",
                Some(cone),
                common.seed,
                json!({ "k": k, "count": count, "grid": grid, "r_min": rm }),
            );
            a.add_json("eigen.json", &e)?;
            for (j, f) in e.eigenfunctions.iter().enumerate() {
                a.add(format!("eigen_{}.csv", j + 1), csv_bytes(|b| cio::write_radial(b, f))?);
            }
            a.commit()
        }
        Command::Green { common, r2, h, octaves, per_octave } => {
            let cone = require_cone(&common)?;
            require_positive(r2, "--r2")?;
            let pot = if h == 0.0 { Potential::zero() } else { Potential::constant(h) };
            let tip = TipGrid { octaves, per_octave, ..TipGrid::default() };
            let g = greens_function(&cone, &pot, r2, tip)?;
            let xi = boundary_one_solution(&cone, &pot, r2, tip)?;
            println!("normalization G({}) = {}", fmt_f64(g.normalization_point), fmt_f64(g.normalization_value));
            println!("gamma_minus = {}", fmt_f64(g.gamma_minus));
            println!("residual = {}", fmt_f64(g.residual));
            let mut a = Artifacts::new(
                common.out.clone(),
                "green",
                Some(cone),
                common.seed,
                json!({ "r2": r2, "h": h, "octaves": octaves, "per_octave": per_octave }),
            );
            a.add("green.csv", csv_bytes(|b| cio::write_radial(b, &g.profile))?);
            a.add_json("green.json", &RadialSidecar::from(&g.profile))?;
            a.add("xi.csv", csv_bytes(|b| cio::write_radial(b, &xi))?);
            a.add_json("xi.json", &RadialSidecar::from(&xi))?;
            a.add_json("green_report.json", &g)?;
            a.commit()
        }
        Command::Jsigma { common, function, sigma, r, s } => {
            let u = load_functions(&function)?;
            let j = j_sigma(&u, sigma, r, s)?;
            println!("{}", fmt_f64(j));
            let cone = common.cone.as_deref().map(parse_cone).transpose()?;
            let mut a = Artifacts::new(common.out.clone(), "jsigma", cone, common.seed, json!({ "sigma": sigma, "r": r, "s": s }));
            a.add_json("jsigma.json", &json!({ "value": j }))?;
            a.commit()
        }
        Command::Hardy { common, samples, kmax } => {
            let cone = require_cone(&common)?;
            let draws: Vec<Vec<Bump>> = {
                let mut g = rng(common.seed);
                (0..samples).map(|_| random_bumps(&mut g, kmax)).collect()
            };
            let rows = draws
                .par_iter()
                .map(|bumps| {
                    let fns: Vec<Box<dyn Fn(f64) -> (f64, f64) + Sync>> =
                        bumps.iter().map(|b| Box::new(move |r| b.eval(r)) as Box<dyn Fn(f64) -> (f64, f64) + Sync>).collect();
                    let profiles: Vec<TestProfile> = bumps
                        .iter()
                        .zip(&fns)
                        .map(|(b, f)| TestProfile { k: b.k, support: (b.lo, b.hi), breakpoints: vec![], a: f.as_ref() })
                        .collect();
                    hardy_gap(&cone, &profiles)
                })
                .collect::<conelab_core::Result<Vec<_>>>()?;
            let gaps: Vec<f64> = rows.iter().map(|r| r.gap).collect();
            let l2: Vec<f64> = rows.iter().map(|r| r.l2_mass).collect();
            let ratios: Vec<f64> = rows.iter().map(|r| r.gap / r.l2_mass).collect();
            let idx: Vec<f64> = (0..rows.len()).map(|i| i as f64).collect();
            let worst = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
            println!("samples = {}", rows.len());
            println!("min gap/|phi|^2 = {}", fmt_f64(worst));
            let mut a = Artifacts::new(
                common.out.clone(),
                "hardy",
                Some(cone),
                common.seed,
                json!({ "samples": samples, "kmax": kmax }),
            );
            a.add("hardy.csv", csv_bytes(|b| cio::write_table(b, &["sample", "gap", "l2_mass"], &[&idx, &gaps, &l2]))?);
            a.commit()
        }
        Command::K0 { common, sigma, kmax, end: e } => {
            let cone = require_cone(&common)?;
            let p = find_k0(&cone, sigma, kmax, end(e))?;
            println!("K0 = {}", fmt_f64(p.k0));
            for c in &p.certificates {
                println!("mode {}: {:?} K0 = {} margin = {}", c.k, c.kind, fmt_f64(c.k0), fmt_f64(c.margin));
            }
            let mut a = Artifacts::new(common.out.clone(), "k0", Some(cone), common.seed, json!({ "sigma": sigma, "kmax": kmax, "end": p.end }));
            a.add_json("k0.json", &p)?;
            a.commit()
        }
        Command::Monotone { common, function, sigma, ratio, r_start, count, end: e } => {
            let u = load_functions(&function)?;
            let v = check_window_monotonicity(&u, sigma, ratio, r_start, count, end(e))?;
            println!("monotone = {}", v.monotone);
            if let Some(i) = v.first_violation {
                println!("first_violation = {i}");
            }
            let cone = common.cone.as_deref().map(parse_cone).transpose()?;
            let mut a = Artifacts::new(
                common.out.clone(),
                "monotone",
                cone,
                common.seed,
                json!({ "sigma": sigma, "ratio": ratio, "r_start": r_start, "count": count }),
            );
            a.add("windows.csv", csv_bytes(|b| cio::write_windows(b, &v.series))?);
            a.add_json("monotone.json", &v)?;
            a.commit()
        }
        Command::Rate { common, function, end: e, t0, windows, snap_tol, robust } => {
            let cone = require_cone(&common)?;
            let u = load_functions(&function)?;
            let starts = dyadic_starts(t0, windows, end(e));
            let rep = estimate_asymptotic_rate(&u, &cone, end(e), &starts, RateOptions { snap_tolerance: snap_tol, robust })?;
            println!("raw_exponent = {}", fmt_f64(rep.raw_exponent));
            println!("snapped = {}", rep.snapped.map(|g| format!("{g}")).unwrap_or_else(|| "none".into()));
            let mut a = Artifacts::new(
                common.out.clone(),
                "rate",
                Some(cone),
                common.seed,
                json!({ "end": rep.end, "t0": t0, "windows": windows, "snap_tol": snap_tol, "robust": robust }),
            );
            a.add("rate.csv", csv_bytes(|b| cio::write_rate(b, &rep))?);
            a.add_json("rate.json", &rep)?;
            a.commit()
        }
        Command::Foliate { common, x0, smax, tol, reflect } => {
            let cone = require_cone(&common)?;
            let (p, q) = simons_pq(&cone)?;
            let leaf = if reflect { shoot_leaf(q, p, x0, smax, tol)?.exchange_axes() } else { shoot_leaf(p, q, x0, smax, tol)? };
            let bytes = csv_bytes(|b| cio::write_profile(b, &leaf))?;
            let mut a = Artifacts::new(
                common.out.clone(),
                "foliate",
                Some(cone),
                common.seed,
                json!({ "x0": x0, "smax": smax, "tol": tol, "reflect": reflect }),
            );
            if a.has_dir() {
                println!("samples = {}", leaf.len());
                a.add("profile.csv", bytes);
                if let Ok(g) = leaf_graph_over_cone(&leaf) {
                    a.add("graph.csv", csv_bytes(|b| cio::write_graph(b, &g))?);
                }
                a.add_json("profile.json", &json!({ "stats": leaf.stats, "termination": leaf.termination, "side": leaf.tail_side() }))?;
            } else {
                use std::io::Write;
                std::io::stdout().write_all(&bytes)?;
            }
            a.commit()
        }
        Command::Crossings { common, profile } => {
            let cone = require_cone(&common)?;
            let (p, q) = simons_pq(&cone)?;
            let leaf = load_profile(&profile, p, q)?;
            let c = count_cone_crossings(&leaf);
            println!("crossings = {}", c.count);
            for r in &c.radii {
                println!("{}", fmt_f64(*r));
            }
            let mut a = Artifacts::new(common.out.clone(), "crossings", Some(cone), common.seed, json!({ "profile": profile }));
            a.add_json("crossings.json", &c)?;
            a.commit()
        }
        Command::Leafrate { common, profile, x0, smax, decades } => {
            let cone = require_cone(&common)?;
            let (p, q) = simons_pq(&cone)?;
            let leaf = match &profile {
                Some(path) => load_profile(path, p, q)?,
                None => shoot_leaf(p, q, x0, smax, 1e-10)?,
            };
            let g = leaf_graph_over_cone(&leaf)?;
            let fit = fit_leaf_rate_with(&g, &cone, decades, RateOptions::default())?;
            println!("raw_exponent = {}", fmt_f64(fit.rate.raw_exponent));
            println!("snapped = {}", fit.rate.snapped.map(|g| format!("{g}")).unwrap_or_else(|| "none".into()));
            println!(
                "label = {}",
                match fit.label {
                    Some(conelab_core::foliation::RateLabel::StrictRate) => "strict-rate",
                    Some(conelab_core::foliation::RateLabel::SlowRate) => "slow-rate",
                    None => "none",
                }
            );
            let mut a = Artifacts::new(
                common.out.clone(),
                "leafrate",
                Some(cone),
                common.seed,
                json!({ "profile": profile, "x0": x0, "smax": smax, "decades": decades }),
            );
            a.add("graph.csv", csv_bytes(|b| cio::write_graph(b, &g))?);
            a.add_json("leafrate.json", &fit)?;
            a.commit()
        }
        Command::Disjoint { common, profile, x0, smax, scales } => {
            let cone = require_cone(&common)?;
            let (p, q) = simons_pq(&cone)?;
            let leaf = match &profile {
                Some(path) => load_profile(path, p, q)?,
                None => shoot_leaf(p, q, x0, smax, 1e-10)?,
            };
            let d = foliation_disjointness(&leaf, &scales)?;
            println!("separation = {}", fmt_f64(d.separation));
            let mut a = Artifacts::new(
                common.out.clone(),
                "disjoint",
                Some(cone),
                common.seed,
                json!({ "profile": profile, "x0": x0, "smax": smax, "scales": scales }),
            );
            a.add_json("disjoint.json", &d)?;
            a.commit()
        }
    }
}
