//! Text formats: the PPS structure format, density-table CSV, zone
//! geometry export, and stability-report CSV.
//!
//! PPS is line-oriented: a `dim d` line, a `basis` line followed by d rows
//! of d Cartesian components (one basis vector per row), and a `motif`
//! line followed by one row per point of d fractional coordinates with an
//! optional trailing label token. `#` starts a comment, blank lines are
//! ignored, numbers are whitespace-separated with dot decimals.

use crate::error::{Error, Result};
use crate::fingerprint::DensityTable;
use crate::geometry::{Lattice, PeriodicSet};
use crate::linalg::Point;
use crate::zones::ZoneComplex;

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

fn parse_number(tok: &str, line: usize) -> Result<f64> {
    let v: f64 = tok
        .parse()
        .map_err(|_| parse_err(line, format!("expected a number, got '{tok}'")))?;
    if !v.is_finite() {
        return Err(parse_err(line, format!("non-finite number '{tok}'")));
    }
    Ok(v)
}

/// Parses the PPS structure format into a canonicalized periodic set.
pub fn parse_pps(text: &str) -> Result<PeriodicSet> {
    let mut dim: Option<usize> = None;
    let mut basis: Vec<Point> = Vec::new();
    let mut motif: Vec<Point> = Vec::new();
    let mut labels: Vec<String> = Vec::new();
    let mut any_label = false;

    #[derive(PartialEq)]
    enum Section {
        Head,
        Basis,
        Motif,
    }
    let mut section = Section::Head;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        };
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.is_empty() {
            continue;
        }
        match tokens[0] {
            "dim" => {
                if dim.is_some() {
                    return Err(parse_err(line_no, "duplicate dim line"));
                }
                if tokens.len() != 2 {
                    return Err(parse_err(line_no, "dim takes exactly one value"));
                }
                let d: usize = tokens[1]
                    .parse()
                    .map_err(|_| parse_err(line_no, "dim must be an integer"))?;
                if !(1..=3).contains(&d) {
                    return Err(parse_err(line_no, "dim must be 1, 2, or 3"));
                }
                dim = Some(d);
            }
            "basis" => {
                if dim.is_none() {
                    return Err(parse_err(line_no, "basis before dim"));
                }
                section = Section::Basis;
            }
            "motif" => {
                if dim.is_none() {
                    return Err(parse_err(line_no, "motif before dim"));
                }
                section = Section::Motif;
            }
            _ => {
                let d = dim.ok_or_else(|| parse_err(line_no, "expected 'dim d' first"))?;
                match section {
                    Section::Head => {
                        return Err(parse_err(
                            line_no,
                            format!("unknown keyword '{}'", tokens[0]),
                        ));
                    }
                    Section::Basis => {
                        if tokens.len() != d {
                            return Err(parse_err(
                                line_no,
                                format!("basis row needs {d} components, got {}", tokens.len()),
                            ));
                        }
                        if basis.len() == d {
                            return Err(parse_err(line_no, "too many basis rows"));
                        }
                        let mut v = [0.0; 3];
                        for (ax, tok) in tokens.iter().enumerate() {
                            v[ax] = parse_number(tok, line_no)?;
                        }
                        basis.push(v);
                    }
                    Section::Motif => {
                        if tokens.len() != d && tokens.len() != d + 1 {
                            return Err(parse_err(
                                line_no,
                                format!(
                                    "motif row needs {d} coordinates (plus an optional label), got {} tokens",
                                    tokens.len()
                                ),
                            ));
                        }
                        let mut v = [0.0; 3];
                        for ax in 0..d {
                            v[ax] = parse_number(tokens[ax], line_no)?;
                        }
                        motif.push(v);
                        if tokens.len() == d + 1 {
                            any_label = true;
                            labels.push(tokens[d].to_string());
                        } else {
                            labels.push(String::new());
                        }
                    }
                }
            }
        }
    }

    let d = dim.ok_or_else(|| parse_err(text.lines().count().max(1), "missing dim line"))?;
    if basis.len() != d {
        return Err(parse_err(
            text.lines().count().max(1),
            format!("expected {d} basis rows, found {}", basis.len()),
        ));
    }
    if motif.is_empty() {
        return Err(Error::EmptyMotif);
    }
    let lattice = Lattice::new(d, &basis)?;
    PeriodicSet::new(lattice, motif, any_label.then_some(labels))
}

/// Serializes a set in the canonical PPS layout (shortest round-trip
/// number formatting, labels kept when present).
pub fn write_pps(set: &PeriodicSet) -> String {
    let d = set.dim();
    let mut out = String::new();
    out.push_str(&format!("dim {d}\n"));
    out.push_str("basis\n");
    for c in 0..d {
        let col = set.lattice().column(c);
        let row: Vec<String> = (0..d).map(|ax| format!("{}", col[ax])).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out.push_str("motif\n");
    for i in 0..set.motif_len() {
        let p = set.motif()[i];
        let mut row: Vec<String> = (0..d).map(|ax| format!("{}", p[ax])).collect();
        if let Some(labels) = set.labels() {
            if !labels[i].is_empty() {
                row.push(labels[i].clone());
            }
        }
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

/// Formats a value with 9 significant digits, then drops trailing zeros by
/// re-rendering the rounded value in shortest form.
fn sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    let rounded: f64 = format!("{x:.8e}").parse().unwrap_or(x);
    format!("{rounded}")
}

/// Density table CSV: header `t,psi_0..psi_K,rho_0..rho_K`, one row per
/// grid radius, 9 significant digits, dot decimals.
pub fn write_density_csv(table: &DensityTable) -> String {
    let k = table.kmax;
    let mut out = String::new();
    out.push('t');
    for j in 0..=k {
        out.push_str(&format!(",psi_{j}"));
    }
    for j in 0..=k {
        out.push_str(&format!(",rho_{j}"));
    }
    out.push('\n');
    for (ti, &t) in table.tgrid.iter().enumerate() {
        let mut fields = Vec::with_capacity(2 * (k + 1) + 1);
        fields.push(sig9(t));
        for j in 0..=k {
            fields.push(sig9(table.psi[j][ti]));
        }
        for j in 0..=k {
            fields.push(sig9(table.rho[j][ti]));
        }
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

/// Zone-complex geometry as structured text, one record per cell in the
/// complex's deterministic cell order: depth, the vertex coordinates, and
/// the facet halfspaces as `normal... offset` rows.
pub fn export_zone_geometry(zc: &ZoneComplex, dim: usize) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "zones motif_index {} kmax {} cutoff {}\n",
        zc.motif_index, zc.kmax, zc.cutoff
    ));
    out.push_str(&format!(
        "center {}\n",
        coords(&zc.center, dim)
    ));
    for (ci, cell) in zc.cells.iter().enumerate() {
        out.push_str(&format!(
            "cell {ci} depth {} volume {}\n",
            cell.depth, cell.volume
        ));
        out.push_str(&format!("vertices {}\n", cell.vertices.len()));
        for v in &cell.vertices {
            out.push_str(&coords(v, dim));
            out.push('\n');
        }
        out.push_str(&format!("halfspaces {}\n", cell.halfspaces.len()));
        for h in &cell.halfspaces {
            out.push_str(&format!("{} {}\n", coords(&h.normal, dim), h.offset));
        }
    }
    out
}

fn coords(p: &Point, dim: usize) -> String {
    (0..dim)
        .map(|ax| format!("{}", p[ax]))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Stability report CSV: one row per trial. The bound column is empty
/// outside dimension 3 where no constant is asserted.
pub fn write_stability_csv(report: &crate::compare::StabilityReport) -> String {
    let mut out = String::from("trial,d_b,d_f,ratio,bound_ok\n");
    for t in &report.trials {
        let bound = match t.bound_ok {
            Some(true) => "true",
            Some(false) => "false",
            None => "",
        };
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            t.trial,
            sig9(t.d_b),
            sig9(t.d_f),
            sig9(t.ratio),
            bound
        ));
    }
    out
}
