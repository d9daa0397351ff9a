//! Seeded random test data.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `amp * (xi (1 - xi))^2 * (1 + c1 xi + c2 xi^2)` on `[lo, hi]`, `xi = (r - lo)/(hi - lo)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bump {
    pub k: usize,
    pub lo: f64,
    pub hi: f64,
    pub amp: f64,
    pub c1: f64,
    pub c2: f64,
}

impl Bump {
    pub fn eval(&self, r: f64) -> (f64, f64) {
        if r <= self.lo || r >= self.hi {
            return (0.0, 0.0);
        }
        let w = self.hi - self.lo;
        let xi = (r - self.lo) / w;
        let e = xi * (1.0 - xi);
        let b = e * e;
        let db = 2.0 * e * (1.0 - 2.0 * xi);
        let p = 1.0 + self.c1 * xi + self.c2 * xi * xi;
        let dp = self.c1 + 2.0 * self.c2 * xi;
        (self.amp * b * p, self.amp * (db * p + b * dp) / w)
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// One random multi-mode test function: one to three bumps on modes `1..=k_max`.
pub fn random_bumps(rng: &mut ChaCha8Rng, k_max: usize) -> Vec<Bump> {
    let count = rng.gen_range(1..=3);
    (0..count)
        .map(|_| {
            let lo = 10f64.powf(rng.gen_range(-2.0..0.5));
            let hi = lo * rng.gen_range(1.2..30.0);
            Bump {
                k: rng.gen_range(1..=k_max),
                lo,
                hi,
                amp: rng.gen_range(-3.0..3.0),
                c1: rng.gen_range(-0.9..0.9),
                c2: rng.gen_range(-0.9..0.9),
            }
        })
        .collect()
}
