//! Browser bindings: each export returns a JSON document or throws a message.

use conelab_core::cone::{classify_stability, make_simons_cone};
use conelab_core::foliation::{cone_angle, count_cone_crossings, fit_leaf_rate, leaf_graph_over_cone, shoot_leaf};
use conelab_core::modes::mode_list;
use conelab_core::spectral::mode_eigen;
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

fn finish(v: conelab_core::Result<Value>) -> Result<String, JsError> {
    v.map(|v| v.to_string()).map_err(|e| JsError::new(&e.to_string()))
}

/// Spectrum table and stability class of Simons(p, q).
pub fn spectrum_json(p: u32, q: u32, kmax: usize) -> conelab_core::Result<Value> {
    let cone = make_simons_cone(p, q)?;
    let modes: Vec<Value> = mode_list(&cone, kmax)?
        .iter()
        .map(|m| {
            json!({
                "k": m.k, "mu": m.mu, "mult": m.mult,
                "gamma_plus": m.gamma_plus, "gamma_minus": m.gamma_minus, "complex": m.complex,
            })
        })
        .collect();
    Ok(json!({ "cone": cone.label(), "n": cone.n, "stability": classify_stability(&cone).to_string(), "modes": modes }))
}

/// Leaf profile through `(x0, 0)` with crossings and, when one-sided, its tail rate.
pub fn leaf_json(p: u32, q: u32, x0: f64, smax: f64) -> conelab_core::Result<Value> {
    let leaf = shoot_leaf(p, q, x0, smax, 1e-10)?;
    let c = count_cone_crossings(&leaf);
    let rate = if c.count == 0 {
        let cone = make_simons_cone(p, q)?;
        leaf_graph_over_cone(&leaf)
            .and_then(|g| fit_leaf_rate(&g, &cone))
            .map(|r| json!({ "raw": r.rate.raw_exponent, "snapped": r.rate.snapped }))
            .unwrap_or(Value::Null)
    } else {
        Value::Null
    };
    Ok(json!({
        "x": leaf.x, "y": leaf.y, "cone_angle": cone_angle(p, q),
        "crossings": c.count, "crossing_radii": c.radii, "ratios": c.ratios(), "rate": rate,
    }))
}

/// Lowest Dirichlet eigenvalues of mode `k` on the unit truncated cone.
pub fn eigen_json(p: u32, q: u32, k: usize, count: usize) -> conelab_core::Result<Value> {
    let cone = make_simons_cone(p, q)?;
    let e = mode_eigen(&cone, k, count, 1200)?;
    Ok(json!({ "k": k, "lambdas": e.lambdas }))
}

#[wasm_bindgen]
pub fn spectrum(p: u32, q: u32, kmax: usize) -> Result<String, JsError> {
    finish(spectrum_json(p, q, kmax))
}

#[wasm_bindgen]
pub fn leaf(p: u32, q: u32, x0: f64, smax: f64) -> Result<String, JsError> {
    finish(leaf_json(p, q, x0, smax))
}

#[wasm_bindgen]
pub fn eigen(p: u32, q: u32, k: usize, count: usize) -> Result<String, JsError> {
    finish(eigen_json(p, q, k, count))
}
