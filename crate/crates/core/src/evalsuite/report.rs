//! Plain-text result files: a flat `key=value` metrics file and the
//! per-conformer attention CSV. Both may start with `#` comment lines.

use std::io::{BufRead, Write};

use crate::error::{bail, Result};

pub const ATTENTION_COLUMNS: [&str; 8] = [
    "bag_id",
    "conformer_id",
    "dihedral_deg",
    "energy_kcal",
    "alpha",
    "instance_label",
    "bag_label",
    "predicted_prob",
];

#[derive(Debug, Clone, PartialEq)]
pub struct AttentionRow {
    pub bag_id: usize,
    pub conformer_id: usize,
    pub dihedral_deg: f64,
    pub energy_kcal: f64,
    pub alpha: f64,
    pub instance_label: bool,
    pub bag_label: bool,
    pub predicted_prob: f64,
}

pub fn write_attention_csv<W: Write>(mut out: W, header: &str, rows: &[AttentionRow]) -> Result<()> {
    out.write_all(header.as_bytes())?;
    writeln!(out, "{}", ATTENTION_COLUMNS.join(","))?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.bag_id,
            r.conformer_id,
            r.dihedral_deg,
            r.energy_kcal,
            r.alpha,
            u8::from(r.instance_label),
            u8::from(r.bag_label),
            r.predicted_prob
        )?;
    }
    out.flush()?;
    Ok(())
}

fn parse_field<T: std::str::FromStr>(s: &str, what: &str, line: usize) -> Result<T> {
    match s.trim().parse() {
        Ok(v) => Ok(v),
        Err(_) => bail!(Format, "line {line}: bad {what} {s:?}"),
    }
}

fn parse_flag(s: &str, what: &str, line: usize) -> Result<bool> {
    match s.trim() {
        "0" => Ok(false),
        "1" => Ok(true),
        _ => bail!(Format, "line {line}: {what} must be 0 or 1, got {s:?}"),
    }
}

/// Reads an attention CSV. An empty file (or comments only) yields no rows.
pub fn read_attention_csv<R: BufRead>(input: R) -> Result<Vec<AttentionRow>> {
    let mut rows = Vec::new();
    let mut seen_header = false;
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let n = i + 1;
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        if !seen_header {
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            if cols != ATTENTION_COLUMNS {
                bail!(Format, "line {n}: unexpected columns {line:?}");
            }
            seen_header = true;
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != ATTENTION_COLUMNS.len() {
            bail!(Format, "line {n}: expected {} fields, got {}", ATTENTION_COLUMNS.len(), f.len());
        }
        rows.push(AttentionRow {
            bag_id: parse_field(f[0], "bag_id", n)?,
            conformer_id: parse_field(f[1], "conformer_id", n)?,
            dihedral_deg: parse_field(f[2], "dihedral_deg", n)?,
            energy_kcal: parse_field(f[3], "energy_kcal", n)?,
            alpha: parse_field(f[4], "alpha", n)?,
            instance_label: parse_flag(f[5], "instance_label", n)?,
            bag_label: parse_flag(f[6], "bag_label", n)?,
            predicted_prob: parse_field(f[7], "predicted_prob", n)?,
        });
    }
    Ok(rows)
}

/// Writes `key=value` lines in the given order.
pub fn write_key_values<W: Write>(mut out: W, header: &str, pairs: &[(String, String)]) -> Result<()> {
    out.write_all(header.as_bytes())?;
    for (k, v) in pairs {
        writeln!(out, "{k}={v}")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_key_values<R: BufRead>(input: R) -> Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        match line.split_once('=') {
            Some((k, v)) => pairs.push((k.trim().to_string(), v.trim().to_string())),
            None => bail!(Format, "line {}: expected key=value", i + 1),
        }
    }
    Ok(pairs)
}
