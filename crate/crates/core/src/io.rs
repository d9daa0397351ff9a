//! Columnar text tables and JSON sidecars.
//!
//! Every float is written with 17 significant digits, which round-trips `f64`
//! exactly.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{ConeError, Result};
use crate::foliation::{LeafGraph, ProfileCurve};
use crate::numeric::grid::LogGrid;
use crate::radial::{PowerTerm, Provenance, RadialFunction};
use crate::weighted::{RateReport, WindowSeries};

pub const RADIAL_HEADER: [&str; 3] = ["r", "value", "dvalue"];
pub const PROFILE_HEADER: [&str; 4] = ["s", "x", "y", "theta"];
pub const GRAPH_HEADER: [&str; 2] = ["R", "h"];
pub const WINDOW_HEADER: [&str; 3] = ["r_lo", "r_hi", "J"];
pub const RATE_HEADER: [&str; 2] = ["t", "half_log_m"];

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_err(e: csv::Error) -> ConeError {
    ConeError::invalid(format!("csv: {e}"))
}

/// Writes equal-length columns under `header`.
pub fn write_table<W: Write>(out: W, header: &[&str], columns: &[&[f64]]) -> Result<()> {
    if header.len() != columns.len() {
        return Err(ConeError::invalid("header and column count differ"));
    }
    let rows = columns.first().map_or(0, |c| c.len());
    if columns.iter().any(|c| c.len() != rows) {
        return Err(ConeError::invalid("columns differ in length"));
    }
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(header).map_err(csv_err)?;
    for i in 0..rows {
        w.write_record(columns.iter().map(|c| fmt_f64(c[i]))).map_err(csv_err)?;
    }
    w.flush().map_err(|e| ConeError::invalid(format!("csv: {e}")))?;
    Ok(())
}

/// Reads a table, checking the header, into columns.
pub fn read_table<R: Read>(input: R, header: &[&str]) -> Result<Vec<Vec<f64>>> {
    let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let got: Vec<String> = rd.headers().map_err(csv_err)?.iter().map(str::to_owned).collect();
    if got != header {
        return Err(ConeError::invalid(format!(
            "expected header \"{}\", found \"{}\"",
            header.join(","),
            got.join(",")
        )));
    }
    let mut cols = vec![Vec::new(); header.len()];
    for (line, rec) in rd.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        if rec.len() != header.len() {
            return Err(ConeError::invalid(format!("row {} has {} fields", line + 1, rec.len())));
        }
        for (c, field) in cols.iter_mut().zip(rec.iter()) {
            let v: f64 = field
                .parse()
                .map_err(|_| ConeError::invalid(format!("row {}: not a number: {field:?}", line + 1)))?;
            c.push(v);
        }
    }
    Ok(cols)
}

pub fn write_radial<W: Write>(out: W, rf: &RadialFunction) -> Result<()> {
    write_table(out, &RADIAL_HEADER, &[&rf.r, &rf.value, &rf.dvalue])
}

pub fn write_profile<W: Write>(out: W, c: &ProfileCurve) -> Result<()> {
    write_table(out, &PROFILE_HEADER, &[&c.s, &c.x, &c.y, &c.theta])
}

pub fn read_profile<R: Read>(input: R, p: u32, q: u32) -> Result<ProfileCurve> {
    let mut cols = read_table(input, &PROFILE_HEADER)?.into_iter();
    let (s, x, y, t) = (cols.next().unwrap(), cols.next().unwrap(), cols.next().unwrap(), cols.next().unwrap());
    ProfileCurve::from_samples(p, q, s, x, y, t)
}

pub fn write_graph<W: Write>(out: W, g: &LeafGraph) -> Result<()> {
    write_table(out, &GRAPH_HEADER, &[&g.r, &g.h])
}

pub fn read_graph<R: Read>(input: R, p: u32, q: u32) -> Result<LeafGraph> {
    let mut cols = read_table(input, &GRAPH_HEADER)?.into_iter();
    LeafGraph::from_samples(p, q, cols.next().unwrap(), cols.next().unwrap())
}

pub fn write_windows<W: Write>(out: W, w: &WindowSeries) -> Result<()> {
    let (lo, hi): (Vec<f64>, Vec<f64>) = w
        .boundaries
        .windows(2)
        .map(|b| (b[0].min(b[1]), b[0].max(b[1])))
        .unzip();
    write_table(out, &WINDOW_HEADER, &[&lo, &hi, &w.values])
}

pub fn write_rate<W: Write>(out: W, r: &RateReport) -> Result<()> {
    write_table(out, &RATE_HEADER, &[&r.t, &r.half_log_m])
}

/// Mode metadata stored next to a radial CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialSidecar {
    pub mode: usize,
    pub mult: u64,
    pub grid: LogGrid,
    pub provenance: Provenance,
    pub coefficients: Option<(f64, f64)>,
    pub closed_form: Option<Vec<PowerTerm>>,
    pub exponents: Vec<f64>,
}

impl From<&RadialFunction> for RadialSidecar {
    fn from(rf: &RadialFunction) -> Self {
        Self {
            mode: rf.mode,
            mult: rf.mult,
            grid: rf.grid,
            provenance: rf.provenance,
            coefficients: rf.coefficients,
            closed_form: rf.closed_form.clone(),
            exponents: rf.exponents.clone(),
        }
    }
}

/// Reassembles a profile from its CSV and sidecar.
pub fn read_radial<R: Read>(input: R, sidecar: &RadialSidecar) -> Result<RadialFunction> {
    let mut cols = read_table(input, &RADIAL_HEADER)?.into_iter();
    let (r, v, d) = (cols.next().unwrap(), cols.next().unwrap(), cols.next().unwrap());
    let mut rf = RadialFunction::from_samples(sidecar.mode, sidecar.mult, sidecar.grid, v, d, sidecar.provenance)?;
    if r.iter().zip(&rf.r).any(|(a, b)| (a - b).abs() > 1e-14 * b.abs()) {
        return Err(ConeError::invalid("radius column does not match the sidecar grid"));
    }
    rf.coefficients = sidecar.coefficients;
    rf.closed_form = sidecar.closed_form.clone();
    rf.exponents = sidecar.exponents.clone();
    Ok(rf)
}

pub fn to_json<T: Serialize>(v: &T) -> Result<String> {
    serde_json::to_string_pretty(v).map_err(|e| ConeError::invalid(format!("json: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_round_trip_is_exact() {
        let a = [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23];
        let b = [f64::MIN_POSITIVE, 1.0, std::f64::consts::PI, -0.0];
        let mut buf = Vec::new();
        write_table(&mut buf, &["a", "b"], &[&a, &b]).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("a,b\n1.0000000000000001e-1,"));
        let cols = read_table(&buf[..], &["a", "b"]).unwrap();
        assert_eq!(cols[0], a);
        assert_eq!(cols[1].iter().map(|v| v.to_bits()).collect::<Vec<_>>(), b.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
        assert!(read_table(&buf[..], &["x", "b"]).is_err());
    }

    #[test]
    fn radial_round_trip() {
        let g = LogGrid::new(0.1, 1.0, 9).unwrap();
        let rf = RadialFunction::from_terms(2, 3, g, vec![PowerTerm::new(1.5, -2.0, 1)], Provenance::Homogeneous);
        let mut buf = Vec::new();
        write_radial(&mut buf, &rf).unwrap();
        let side: RadialSidecar = serde_json::from_str(&to_json(&RadialSidecar::from(&rf)).unwrap()).unwrap();
        assert_eq!(read_radial(&buf[..], &side).unwrap(), rf);
    }
}
