//! Cone descriptors, cross-section spectra and stability classification.

use std::collections::BTreeMap;
use std::fmt;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{ConeError, Result};

pub type Rational = Ratio<i64>;

/// One entry of a user-supplied spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CustomMode {
    pub mu: f64,
    pub mult: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConeKind {
    Simons { p: u32, q: u32 },
    Custom { modes: Vec<CustomMode> },
}

/// A regular minimal hypercone of dimension `n` in `R^{n+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeDescriptor {
    pub n: u32,
    pub kind: ConeKind,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
enum ConeDocument {
    Simons { p: u32, q: u32 },
    Custom { n: u32, modes: Vec<CustomMode> },
}

impl Serialize for ConeDescriptor {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let doc = match &self.kind {
            ConeKind::Simons { p, q } => ConeDocument::Simons { p: *p, q: *q },
            ConeKind::Custom { modes } => ConeDocument::Custom {
                n: self.n,
                modes: modes.clone(),
            },
        };
        doc.serialize(s)
    }
}

impl<'de> Deserialize<'de> for ConeDescriptor {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let doc = ConeDocument::deserialize(d)?;
        let cone = match doc {
            ConeDocument::Simons { p, q } => make_simons_cone(p, q),
            ConeDocument::Custom { n, modes } => ConeDescriptor::custom(n, modes),
        };
        cone.map_err(serde::de::Error::custom)
    }
}

/// Builds the Simons cone over `S^p(a) x S^q(b)`.
pub fn make_simons_cone(p: u32, q: u32) -> Result<ConeDescriptor> {
    if p < 1 || q < 1 {
        return Err(ConeError::invalid(format!(
            "simons cone needs p, q >= 1, got ({p}, {q})"
        )));
    }
    if p + q > 1000 {
        return Err(ConeError::invalid("simons cone dimension too large"));
    }
    Ok(ConeDescriptor {
        n: p + q + 1,
        kind: ConeKind::Simons { p, q },
    })
}

impl ConeDescriptor {
    pub fn custom(n: u32, modes: Vec<CustomMode>) -> Result<Self> {
        if n < 3 {
            return Err(ConeError::invalid(format!("cone dimension must be >= 3, got {n}")));
        }
        if modes.is_empty() {
            return Err(ConeError::invalid("custom spectrum is empty"));
        }
        for (i, m) in modes.iter().enumerate() {
            if !m.mu.is_finite() {
                return Err(ConeError::invalid(format!("mode {} has non-finite mu", i + 1)));
            }
            if m.mult == 0 {
                return Err(ConeError::invalid(format!("mode {} has zero multiplicity", i + 1)));
            }
            if i > 0 && modes[i - 1].mu >= m.mu {
                return Err(ConeError::invalid(format!(
                    "custom spectrum must be strictly increasing (entry {})",
                    i + 1
                )));
            }
        }
        Ok(Self {
            n,
            kind: ConeKind::Custom { modes },
        })
    }

    /// Squared radii `(a^2, b^2)` of the sphere factors, for Simons cones.
    pub fn radii_squared(&self) -> Option<(Rational, Rational)> {
        match self.kind {
            ConeKind::Simons { p, q } => {
                let s = (p + q) as i64;
                Some((Rational::new(p as i64, s), Rational::new(q as i64, s)))
            }
            ConeKind::Custom { .. } => None,
        }
    }

    pub fn radii(&self) -> Option<(f64, f64)> {
        self.radii_squared()
            .map(|(a2, b2)| (to_f64(a2).sqrt(), to_f64(b2).sqrt()))
    }

    /// `|A_S|^2` of the cross-section, for Simons cones.
    pub fn second_fundamental_form_sq(&self) -> Option<u32> {
        match self.kind {
            ConeKind::Simons { p, q } => Some(p + q),
            ConeKind::Custom { .. } => None,
        }
    }

    /// `(n - 2) / 2`.
    pub fn half_gap(&self) -> f64 {
        (self.n as f64 - 2.0) / 2.0
    }

    /// Hardy threshold `-((n-2)/2)^2`, exactly.
    pub fn hardy_threshold(&self) -> Rational {
        let m = self.n as i64 - 2;
        Rational::new(-(m * m), 4)
    }

    /// Area of the cross-section `S`.
    pub fn cross_section_area(&self) -> Option<f64> {
        match self.kind {
            ConeKind::Simons { p, q } => {
                let (a, b) = self.radii()?;
                Some(sphere_area(p) * a.powi(p as i32) * sphere_area(q) * b.powi(q as i32))
            }
            ConeKind::Custom { .. } => None,
        }
    }

    pub fn label(&self) -> String {
        match &self.kind {
            ConeKind::Simons { p, q } => format!("simons:{p},{q}"),
            ConeKind::Custom { modes } => format!("custom:n={},modes={}", self.n, modes.len()),
        }
    }
}

impl fmt::Display for ConeDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Area of the unit sphere `S^k`.
pub fn sphere_area(k: u32) -> f64 {
    use std::f64::consts::PI;
    let mut even = 2.0;
    let mut odd = 2.0 * PI;
    if k == 0 {
        return even;
    }
    for j in 2..=k {
        let next = 2.0 * PI / (j as f64 - 1.0) * if j % 2 == 0 { even } else { odd };
        if j % 2 == 0 {
            even = next;
        } else {
            odd = next;
        }
    }
    if k.is_multiple_of(2) { even } else { odd }
}

pub fn to_f64(r: Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// One distinct eigenvalue of `-(Delta_S + |A_S|^2)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralMode {
    pub mu: f64,
    #[serde(skip)]
    pub mu_exact: Option<Rational>,
    pub mult: u64,
    /// Lattice labels `(l, m)` contributing to this eigenvalue (Simons cones only).
    pub origin: Vec<(u32, u32)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumSlice {
    pub modes: Vec<SpectralMode>,
    pub k_max: usize,
}

fn binomial(n: i64, k: i64) -> u64 {
    if k < 0 || n < k {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as u64
}

/// Dimension of degree-`l` spherical harmonics on `S^p`.
pub fn harmonic_dimension(p: u32, l: u32) -> u64 {
    let (p, l) = (p as i64, l as i64);
    binomial(l + p, p) - binomial(l + p - 2, p)
}

/// `mu_{l,m}` on the Simons cross-section.
pub fn simons_eigenvalue(p: u32, q: u32, l: u32, m: u32) -> Rational {
    let (p, q, l, m) = (p as i64, q as i64, l as i64, m as i64);
    let s = Rational::from_integer(p + q);
    s * (Rational::new(l * (l + p - 1), p) + Rational::new(m * (m + q - 1), q) - 1)
}

fn simons_spectrum(p: u32, q: u32, k_max: usize) -> Vec<SpectralMode> {
    let mut bound = 4u32;
    loop {
        let cap = simons_eigenvalue(p, q, bound + 1, 0).min(simons_eigenvalue(p, q, 0, bound + 1));
        let mut table: BTreeMap<Rational, (u64, Vec<(u32, u32)>)> = BTreeMap::new();
        for l in 0..=bound {
            for m in 0..=bound {
                let mu = simons_eigenvalue(p, q, l, m);
                if mu < cap {
                    let e = table.entry(mu).or_default();
                    e.0 += harmonic_dimension(p, l) * harmonic_dimension(q, m);
                    e.1.push((l, m));
                }
            }
        }
        if table.len() >= k_max {
            return table
                .into_iter()
                .take(k_max)
                .map(|(mu, (mult, origin))| SpectralMode {
                    mu: to_f64(mu),
                    mu_exact: Some(mu),
                    mult,
                    origin,
                })
                .collect();
        }
        bound *= 2;
    }
}

/// First `k_max` distinct eigenvalues with multiplicities.
pub fn cross_section_spectrum(cone: &ConeDescriptor, k_max: usize) -> Result<SpectrumSlice> {
    if k_max < 1 {
        return Err(ConeError::invalid("k_max must be >= 1"));
    }
    let modes = match &cone.kind {
        ConeKind::Simons { p, q } => simons_spectrum(*p, *q, k_max),
        ConeKind::Custom { modes } => {
            if modes.len() < k_max {
                return Err(ConeError::invalid(format!(
                    "custom spectrum has {} modes, {} requested (short by {})",
                    modes.len(),
                    k_max,
                    k_max - modes.len()
                )));
            }
            modes[..k_max]
                .iter()
                .map(|m| SpectralMode {
                    mu: m.mu,
                    mu_exact: None,
                    mult: m.mult,
                    origin: Vec::new(),
                })
                .collect()
        }
    };
    Ok(SpectrumSlice { modes, k_max })
}

/// Number of distinct eigenvalues available (unbounded for Simons cones).
pub fn available_modes(cone: &ConeDescriptor) -> Option<usize> {
    match &cone.kind {
        ConeKind::Simons { .. } => None,
        ConeKind::Custom { modes } => Some(modes.len()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stability {
    Unstable,
    BorderlineStable,
    StrictlyStable,
}

impl fmt::Display for Stability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stability::Unstable => "Unstable",
            Stability::BorderlineStable => "BorderlineStable",
            Stability::StrictlyStable => "StrictlyStable",
        })
    }
}

/// Compares `mu_1` with the Hardy threshold `-((n-2)/2)^2`.
pub fn classify_stability(cone: &ConeDescriptor) -> Stability {
    use std::cmp::Ordering;
    let threshold = cone.hardy_threshold();
    let ord = match &cone.kind {
        ConeKind::Simons { p, q } => simons_eigenvalue(*p, *q, 0, 0).cmp(&threshold),
        ConeKind::Custom { modes } => modes[0]
            .mu
            .partial_cmp(&to_f64(threshold))
            .unwrap_or(Ordering::Less),
    };
    match ord {
        Ordering::Greater => Stability::StrictlyStable,
        Ordering::Equal => Stability::BorderlineStable,
        Ordering::Less => Stability::Unstable,
    }
}
