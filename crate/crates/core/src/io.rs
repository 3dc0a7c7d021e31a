//! CSV interchange formats.
//!
//! All user-facing power quantities are consumption positive; the parsers
//! convert into the internal injection convention once, here. Writers use
//! the shortest round-trip float formatting, so identical inputs always
//! produce byte-identical files.
//!
//! Formats:
//! * loads: `bus_id,P,Q` one row per load bus
//! * pattern: `bus_id,wp,wq` one row per load bus
//! * solution: `bus_id,v_re,v_im,v_mag,i_re,i_im`
//! * boundary: `angle_rad,t_star,method`
//! * scaling-grid polylines: `lambda_index,angle_rad,t_star`
//! * PV curve: `P,v_mag`
//! * per-bus limits: `bus_id,s_max`

use crate::boundary::{BoundarySample, LambdaPolyline, LoadPattern, PvCurve};
use crate::certificates::{LoadVector, Rhombus};
use crate::error::{Error, Result};
use crate::netmodel::ImpedanceMatrix;
use crate::pfsolver::PFSolution;

/// Lines of a CSV body, skipping blank lines and an optional header row
/// (any first line whose first field is not a number).
fn data_rows(text: &str) -> Vec<(usize, Vec<&str>)> {
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if rows.is_empty() && fields[0].parse::<f64>().is_err() {
            continue; // header
        }
        rows.push((lineno + 1, fields));
    }
    rows
}

fn parse_field<T: std::str::FromStr>(field: &str, lineno: usize, what: &str) -> Result<T> {
    field
        .parse()
        .map_err(|_| Error::Parse(format!("line {lineno}: cannot parse {what} from '{field}'")))
}

/// One `(bus_id, a, b)` triple per load bus, covering ids `1..=n` exactly.
fn parse_bus_triples(text: &str, n: usize, what: &str) -> Result<Vec<(f64, f64)>> {
    let rows = data_rows(text);
    if rows.len() != n {
        return Err(Error::Parse(format!(
            "expected {n} {what} rows, found {}",
            rows.len()
        )));
    }
    let mut out = vec![None; n];
    for (lineno, fields) in rows {
        if fields.len() != 3 {
            return Err(Error::Parse(format!(
                "line {lineno}: expected 3 fields (bus_id,{what}), found {}",
                fields.len()
            )));
        }
        let bus: usize = parse_field(fields[0], lineno, "bus id")?;
        if bus == 0 || bus > n {
            return Err(Error::Parse(format!(
                "line {lineno}: bus id {bus} outside 1..={n}"
            )));
        }
        if out[bus - 1].is_some() {
            return Err(Error::Parse(format!("line {lineno}: duplicate bus id {bus}")));
        }
        let a: f64 = parse_field(fields[1], lineno, what)?;
        let b: f64 = parse_field(fields[2], lineno, what)?;
        out[bus - 1] = Some((a, b));
    }
    Ok(out.into_iter().map(|x| x.unwrap()).collect())
}

/// Parses a consumption-positive load file into the internal convention.
pub fn parse_loads_csv(text: &str, n: usize) -> Result<LoadVector> {
    let pq = parse_bus_triples(text, n, "P,Q")?;
    LoadVector::from_consumption(&pq)
}

/// Parses a projection-pattern file.
pub fn parse_pattern_csv(text: &str, n: usize) -> Result<LoadPattern> {
    let w = parse_bus_triples(text, n, "wp,wq")?;
    LoadPattern::new(w.iter().map(|x| x.0).collect(), w.iter().map(|x| x.1).collect())
}

pub fn solution_csv(z: &ImpedanceMatrix, sol: &PFSolution) -> String {
    let mut out = String::from("bus_id,v_re,v_im,v_mag,i_re,i_im\n");
    for (k, &bus) in z.bus_order().iter().enumerate() {
        let v = sol.v[k];
        let i = sol.i[k];
        out.push_str(&format!(
            "{bus},{},{},{},{},{}\n",
            v.re,
            v.im,
            v.norm(),
            i.re,
            i.im
        ));
    }
    out
}

pub fn boundary_csv(samples: &[BoundarySample]) -> String {
    let mut out = String::from("angle_rad,t_star,method\n");
    for s in samples {
        out.push_str(&format!("{},{},{}\n", s.angle(), s.t_star, s.method.as_str()));
    }
    out
}

pub fn lambda_union_csv(polylines: &[LambdaPolyline]) -> String {
    let mut out = String::from("lambda_index,angle_rad,t_star\n");
    for poly in polylines {
        for s in &poly.samples {
            out.push_str(&format!("{},{},{}\n", poly.lambda_index, s.angle(), s.t_star));
        }
    }
    out
}

pub fn pv_csv(curve: &PvCurve) -> String {
    let mut out = String::from("P,v_mag\n");
    for &(p, v) in &curve.points {
        out.push_str(&format!("{p},{v}\n"));
    }
    out
}

pub fn rhombus_csv(rh: &Rhombus, bus_order: &[usize]) -> String {
    let mut out = String::from("bus_id,s_max\n");
    for (k, &bus) in bus_order.iter().enumerate() {
        out.push_str(&format!("{bus},{}\n", rh.s_max()[k]));
    }
    out
}
