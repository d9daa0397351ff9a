//! Sampled one-mode radial profiles.

use serde::{Deserialize, Serialize};

use crate::error::{ConeError, Result};
use crate::numeric::grid::LogGrid;
use crate::numeric::interp;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Homogeneous,
    Particular,
    BoundaryValue,
    Perturbed,
    Green,
    BoundaryOne,
    Eigen,
    Synthetic,
}

/// `coef * r^exponent * (ln r)^log_power`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerTerm {
    pub coef: f64,
    pub exponent: f64,
    pub log_power: u32,
}

impl PowerTerm {
    pub fn new(coef: f64, exponent: f64, log_power: u32) -> Self {
        Self { coef, exponent, log_power }
    }

    pub fn eval(&self, r: f64) -> (f64, f64) {
        let p = r.powf(self.exponent);
        let l = r.ln();
        match self.log_power {
            0 => (self.coef * p, self.coef * self.exponent * p / r),
            k => {
                let lk = l.powi(k as i32);
                let lk1 = l.powi(k as i32 - 1);
                (
                    self.coef * p * lk,
                    self.coef * p / r * (self.exponent * lk + k as f64 * lk1),
                )
            }
        }
    }
}

/// A radial profile `v_k(r)` on a log-uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialFunction {
    pub mode: usize,
    pub mult: u64,
    pub grid: LogGrid,
    pub r: Vec<f64>,
    pub value: Vec<f64>,
    pub dvalue: Vec<f64>,
    pub provenance: Provenance,
    /// Homogeneous coefficients `(c_plus, c_minus)` relative to the standard
    /// particular solution, when known.
    pub coefficients: Option<(f64, f64)>,
    /// Exact representation, when the profile is a finite sum of power terms.
    pub closed_form: Option<Vec<PowerTerm>>,
    /// Exponents whose branches are present in the profile.
    pub exponents: Vec<f64>,
}

impl RadialFunction {
    pub fn from_samples(
        mode: usize,
        mult: u64,
        grid: LogGrid,
        value: Vec<f64>,
        dvalue: Vec<f64>,
        provenance: Provenance,
    ) -> Result<Self> {
        if value.len() != grid.n || dvalue.len() != grid.n {
            return Err(ConeError::invalid("sample count does not match grid"));
        }
        Ok(Self {
            mode,
            mult,
            r: grid.points(),
            grid,
            value,
            dvalue,
            provenance,
            coefficients: None,
            closed_form: None,
            exponents: Vec::new(),
        })
    }

    /// Samples a closed form on `grid`.
    pub fn from_terms(mode: usize, mult: u64, grid: LogGrid, terms: Vec<PowerTerm>, provenance: Provenance) -> Self {
        let r = grid.points();
        let mut value = vec![0.0; grid.n];
        let mut dvalue = vec![0.0; grid.n];
        for (i, &ri) in r.iter().enumerate() {
            for t in &terms {
                let (v, d) = t.eval(ri);
                value[i] += v;
                dvalue[i] += d;
            }
        }
        let mut exponents: Vec<f64> = terms.iter().filter(|t| t.coef != 0.0).map(|t| t.exponent).collect();
        exponents.sort_by(f64::total_cmp);
        exponents.dedup();
        Self {
            mode,
            mult,
            grid,
            r,
            value,
            dvalue,
            provenance,
            coefficients: None,
            closed_form: Some(terms),
            exponents,
        }
    }

    /// Value and derivative at `r`; exact for closed forms, otherwise cubic
    /// Hermite in `ln r` inside the grid.
    pub fn eval(&self, r: f64) -> Result<(f64, f64)> {
        if let Some(terms) = &self.closed_form {
            let mut acc = (0.0, 0.0);
            for t in terms {
                let (v, d) = t.eval(r);
                acc.0 += v;
                acc.1 += d;
            }
            return Ok(acc);
        }
        if !self.grid.contains(r) {
            return Err(ConeError::invalid(format!(
                "r = {r:e} outside profile grid [{:e}, {:e}]",
                self.grid.r_lo, self.grid.r_hi
            )));
        }
        let (v, dt) = self.eval_log(r.ln());
        Ok((v, dt / r))
    }

    /// Hermite interpolation in `t = ln r` on the samples, returning `(v, dv/dt)`.
    pub fn eval_log(&self, t: f64) -> (f64, f64) {
        let n = self.grid.n;
        let h = self.grid.step();
        let pos = (t - self.grid.t(0)) / h;
        let i = (pos.floor().max(0.0) as usize).min(n - 2);
        let ts = [self.grid.t(i), self.grid.t(i + 1)];
        let vs = [self.value[i], self.value[i + 1]];
        let ds = [self.r[i] * self.dvalue[i], self.r[i + 1] * self.dvalue[i + 1]];
        interp::hermite(&ts, &vs, &ds, t)
    }

    pub fn is_zero(&self) -> bool {
        self.value.iter().all(|v| *v == 0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.value.iter().fold(0.0, |a, v| a.max(v.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_term_derivative() {
        let t = PowerTerm::new(2.0, -1.5, 1);
        let r = 1.7;
        let h = 1e-6;
        let fd = (t.eval(r + h).0 - t.eval(r - h).0) / (2.0 * h);
        assert!((fd - t.eval(r).1).abs() < 1e-8);
    }

    #[test]
    fn sampled_interpolation_matches_closed_form() {
        let g = LogGrid::new(0.1, 1.0, 200).unwrap();
        let exact = RadialFunction::from_terms(1, 1, g, vec![PowerTerm::new(1.0, -2.0, 0)], Provenance::Homogeneous);
        let mut sampled = exact.clone();
        sampled.closed_form = None;
        let (v, d) = sampled.eval(0.333).unwrap();
        assert!((v - 0.333f64.powi(-2)).abs() < 1e-8);
        assert!((d + 2.0 * 0.333f64.powi(-3)).abs() < 1e-5);
        assert!(sampled.eval(2.0).is_err());
    }
}
