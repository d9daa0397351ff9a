#![allow(clippy::too_many_arguments)]

use conelab_core::cone::make_simons_cone;
use conelab_core::foliation::{
    count_cone_crossings, fit_leaf_rate, leaf_graph_over_cone, shoot_leaf, shoot_leaf_with, LeafOptions, ProfileCurve,
};
use conelab_core::io::{read_profile, write_profile};
use conelab_core::modes::indicial_roots;

/// Weighted length `sum w(mid) |segment|`, `w = x^p y^q`, of a polyline.
fn weighted_length(p: u32, q: u32, x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xs, ys)| {
            let (mx, my) = (0.5 * (xs[0] + xs[1]), 0.5 * (ys[0] + ys[1]));
            mx.powi(p as i32) * my.powi(q as i32) * (xs[1] - xs[0]).hypot(ys[1] - ys[0])
        })
        .sum()
}

/// Central-difference first variation along the normal field `eta`, relative to `int |eta| w ds`.
fn first_variation(p: u32, q: u32, x: &[f64], y: &[f64], theta: &[f64], s: &[f64], lo: f64, hi: f64) -> f64 {
    let eta: Vec<f64> = s
        .iter()
        .map(|&t| if t > lo && t < hi { ((t - lo) * (hi - t)).powi(3) } else { 0.0 })
        .collect();
    let moved = |e: f64| {
        let xs: Vec<f64> = x.iter().zip(theta).zip(&eta).map(|((x, th), n)| x - e * n * th.sin()).collect();
        let ys: Vec<f64> = y.iter().zip(theta).zip(&eta).map(|((y, th), n)| y + e * n * th.cos()).collect();
        weighted_length(p, q, &xs, &ys)
    };
    let h = 1e-4;
    let dl = (moved(h) - moved(-h)) / (2.0 * h);
    let norm: f64 = (1..s.len())
        .map(|i| eta[i].abs() * x[i].powi(p as i32) * y[i].powi(q as i32) * (s[i] - s[i - 1]))
        .sum();
    dl / norm
}

#[test]
fn leaves_are_critical_for_the_weighted_length() {
    let opts = LeafOptions { arc_spacing: 1.0 / 2048.0, ..LeafOptions::default() };
    for (p, q) in [(1, 1), (3, 3), (2, 5)] {
        let leaf = shoot_leaf_with(p, q, 1.0, 3.0, &opts).unwrap();
        let switch = leaf.stats.switch_s.unwrap_or(f64::INFINITY);
        assert!(switch > 0.9);
        let rel = first_variation(p, q, &leaf.x, &leaf.y, &leaf.theta, &leaf.s, 0.2, 0.9);
        assert!(rel.abs() < 1e-4, "({p},{q}): {rel:e}");
        // A non-minimal comparison curve: the vertical segment x = 1.
        let s: Vec<f64> = (0..2000).map(|i| 0.001 + i as f64 * 5e-4).collect();
        let wrong = first_variation(p, q, &vec![1.0; s.len()], &s, &vec![std::f64::consts::FRAC_PI_2; s.len()], &s, 0.2, 0.9);
        assert!(wrong.abs() > 0.1, "({p},{q}): comparison {wrong}");
    }
}

#[test]
fn samples_have_unit_speed() {
    let opts = LeafOptions { arc_spacing: 1.0 / 512.0, ..LeafOptions::default() };
    let leaf = shoot_leaf_with(3, 3, 1.0, 2.0, &opts).unwrap();
    let switch = leaf.stats.switch_s.unwrap_or(f64::INFINITY);
    for i in 1..leaf.len() - 1 {
        if leaf.s[i + 1] >= switch {
            break;
        }
        let ds = leaf.s[i + 1] - leaf.s[i - 1];
        let speed = (leaf.x[i + 1] - leaf.x[i - 1]).hypot(leaf.y[i + 1] - leaf.y[i - 1]) / ds;
        assert!((speed - 1.0).abs() < 1e-5, "i = {i}: speed {speed}");
        let dir = (leaf.y[i + 1] - leaf.y[i - 1]).atan2(leaf.x[i + 1] - leaf.x[i - 1]);
        assert!((dir - leaf.theta[i]).abs() < 1e-5);
    }
}

#[test]
fn shooting_commutes_with_dilation() {
    let base = shoot_leaf(3, 3, 1.0, 1e3, 1e-12).unwrap();
    for lambda in [0.5, 2.0] {
        let direct = shoot_leaf(3, 3, lambda, lambda * 1e3, 1e-12).unwrap();
        let scaled = base.scaled(lambda);
        let n = direct.len().min(scaled.len());
        assert!(n > 100);
        for i in 0..n {
            let r = scaled.radius(i);
            assert!((direct.s[i] - scaled.s[i]).abs() < 1e-8 * scaled.s[i].max(r), "s at {i}");
            assert!((direct.x[i] - scaled.x[i]).abs() < 1e-8 * r, "x at {i}");
            assert!((direct.y[i] - scaled.y[i]).abs() < 1e-8 * r, "y at {i}");
            assert!((direct.theta[i] - scaled.theta[i]).abs() < 1e-8, "theta at {i}");
        }
    }
}

#[test]
fn crossing_dichotomy_table() {
    for p in 1..=9u32 {
        for q in p..=(10 - p) {
            let leaf = shoot_leaf(p, q, 1.0, 1e4, 1e-10).unwrap();
            let c = count_cone_crossings(&leaf);
            if p + q >= 6 {
                assert_eq!(c.count, 0, "Simons({p},{q})");
                let cone = make_simons_cone(p, q).unwrap();
                let rate = fit_leaf_rate(&leaf_graph_over_cone(&leaf).unwrap(), &cone).unwrap();
                let gm = indicial_roots(&cone, 1).unwrap().gamma_minus;
                assert!(rate.rate.raw_exponent >= gm - 0.05, "Simons({p},{q}): {} < {gm}", rate.rate.raw_exponent);
            } else {
                assert!(c.count >= 1, "Simons({p},{q}) never crosses");
            }
        }
    }
}

#[test]
fn profile_csv_round_trip() {
    let leaf = shoot_leaf(2, 4, 1.0, 50.0, 1e-10).unwrap();
    let mut buf = Vec::new();
    write_profile(&mut buf, &leaf).unwrap();
    let back: ProfileCurve = read_profile(buf.as_slice(), 2, 4).unwrap();
    assert_eq!(back.s, leaf.s);
    assert_eq!(back.x, leaf.x);
    assert_eq!(back.y, leaf.y);
    assert_eq!(back.theta, leaf.theta);
    assert_eq!(count_cone_crossings(&back).count, count_cone_crossings(&leaf).count);
}
