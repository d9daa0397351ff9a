use serde::{Deserialize, Serialize};

use crate::error::{ConeError, Result};

/// Grid uniform in `ln r` over `[r_lo, r_hi]`, endpoints included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogGrid {
    pub r_lo: f64,
    pub r_hi: f64,
    pub n: usize,
}

impl LogGrid {
    pub fn new(r_lo: f64, r_hi: f64, n: usize) -> Result<Self> {
        if !(r_lo > 0.0 && r_lo.is_finite() && r_hi.is_finite() && r_hi > r_lo) {
            return Err(ConeError::invalid(format!(
                "log grid needs 0 < r_lo < r_hi, got [{r_lo}, {r_hi}]"
            )));
        }
        if n < 2 {
            return Err(ConeError::invalid("log grid needs at least two nodes"));
        }
        Ok(Self { r_lo, r_hi, n })
    }

    /// Grid whose log-spacing divides `ln 2` exactly, `per_octave` nodes per doubling.
    pub fn dyadic(r_lo: f64, octaves: usize, per_octave: usize) -> Result<Self> {
        let n = octaves * per_octave + 1;
        Self::new(r_lo, r_lo * 2f64.powi(octaves as i32), n)
    }

    pub fn step(&self) -> f64 {
        (self.r_hi / self.r_lo).ln() / (self.n - 1) as f64
    }

    pub fn t(&self, i: usize) -> f64 {
        if i + 1 == self.n {
            self.r_hi.ln()
        } else {
            self.r_lo.ln() + i as f64 * self.step()
        }
    }

    pub fn r(&self, i: usize) -> f64 {
        if i == 0 {
            self.r_lo
        } else if i + 1 == self.n {
            self.r_hi
        } else {
            self.t(i).exp()
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.r(i)).collect()
    }

    pub fn contains(&self, r: f64) -> bool {
        r >= self.r_lo * (1.0 - 1e-14) && r <= self.r_hi * (1.0 + 1e-14)
    }
}
