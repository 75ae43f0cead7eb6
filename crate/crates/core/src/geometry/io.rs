//! Height-field exchange: nodal CSV and harmonic-coefficient JSON.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{harmonic_index, harmonic_labels, Harmonics, ReferenceSphere};

#[derive(Debug, Serialize, Deserialize)]
struct NodeRow {
    node: usize,
    colatitude: f64,
    longitude: f64,
    h: f64,
}

pub fn write_height_csv<W: Write>(sph: &ReferenceSphere, h: &[f64], out: W) -> Result<()> {
    if h.len() != sph.node_count() {
        return Err(Error::Shape(format!("{} values for {} nodes", h.len(), sph.node_count())));
    }
    let mut w = csv::Writer::from_writer(out);
    for (node, ((colatitude, longitude), &h)) in sph.nodes().into_iter().zip(h).enumerate() {
        w.serialize(NodeRow { node, colatitude, longitude, h })?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a nodal CSV; rows may come in any order but must cover every node of `sph`.
pub fn read_height_csv<R: Read>(sph: &ReferenceSphere, input: R) -> Result<Vec<f64>> {
    let nodes = sph.nodes();
    let mut h = vec![f64::NAN; nodes.len()];
    for row in csv::Reader::from_reader(input).deserialize() {
        let row: NodeRow = row?;
        let Some(&(t, p)) = nodes.get(row.node) else {
            return Err(Error::Shape(format!("node {} outside the grid", row.node)));
        };
        if (t - row.colatitude).abs() > 1e-9 || (p - row.longitude).abs() > 1e-9 {
            return Err(Error::Shape(format!("node {} coordinates do not match the grid", row.node)));
        }
        h[row.node] = row.h;
    }
    if let Some(k) = h.iter().position(|v| v.is_nan()) {
        return Err(Error::Shape(format!("node {k} missing from CSV")));
    }
    Ok(h)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CoefficientEntry {
    pub l: usize,
    pub m: i64,
    pub value: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarmonicFile {
    pub n: usize,
    pub radius: f64,
    pub l_max: usize,
    pub coefficients: Vec<CoefficientEntry>,
}

pub fn harmonics_to_json(h: &Harmonics, radius: f64) -> Result<String> {
    let coefficients = harmonic_labels(h.n, h.l_max)
        .into_iter()
        .zip(&h.coeffs)
        .map(|((l, m), &value)| CoefficientEntry { l, m, value })
        .collect();
    Ok(serde_json::to_string_pretty(&HarmonicFile { n: h.n, radius, l_max: h.l_max, coefficients })?)
}

/// Parses coefficient JSON; missing entries are zero.
pub fn harmonics_from_json(text: &str) -> Result<(Harmonics, f64)> {
    let file: HarmonicFile = serde_json::from_str(text)?;
    let mut h = Harmonics::zeros(file.n, file.l_max);
    for e in file.coefficients {
        let valid = e.l <= file.l_max && e.m.unsigned_abs() as usize <= e.l && (file.n != 2 || e.l == 0 || e.m.unsigned_abs() as usize == e.l);
        if !valid {
            return Err(Error::Shape(format!("no harmonic (l={}, m={}) for n={}", e.l, e.m, file.n)));
        }
        h.coeffs[harmonic_index(file.n, e.l, e.m)] = e.value;
    }
    Ok((h, file.radius))
}
