//! CSV emission and re-parsing.
//!
//! Reals are written with 17 significant digits (`{:.16e}`) so every value
//! round-trips bit for bit. Absent values are empty fields.

use std::io::{Read, Write};

use hblab_core::restart::PolicySummary;
use hblab_core::{Event, Trajectory};

pub fn real(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt_real(v: Option<f64>) -> String {
    v.map(real).unwrap_or_default()
}

/// Writes `traj` with the given columns. `alpha`, `beta` and `L_estimate`
/// come from the parameters in force at each record.
pub fn write_trajectory<W: Write>(out: W, traj: &Trajectory, fields: &[String]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(fields)?;
    for rec in &traj.records {
        let entry = traj.params_at(rec.k);
        let row: Vec<String> = fields
            .iter()
            .map(|f| match f.as_str() {
                "k" => rec.k.to_string(),
                "x_norm" => real(rec.x_norm),
                "f" => real(rec.f),
                "V" => opt_real(rec.v),
                "grad_norm" => real(rec.grad_norm),
                "event" => rec.event.as_str().to_string(),
                "alpha" => opt_real(entry.map(|e| e.params.alpha)),
                "beta" => opt_real(entry.map(|e| e.params.beta)),
                "L_estimate" => opt_real(entry.and_then(|e| e.l_estimate)),
                other => unreachable!("unvalidated field {other}"),
            })
            .collect();
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `(k, x_k)` rows of a scalar sequence.
pub fn write_sequence<W: Write>(out: W, xs: &[f64]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["k", "x"])?;
    for (k, x) in xs.iter().enumerate() {
        w.write_record([k.to_string(), real(*x)])?;
    }
    w.flush()?;
    Ok(())
}

pub const SUMMARY_HEADER: [&str; 5] = ["policy", "iterations_to_tol", "restarts", "final_f", "diverged"];

pub fn write_summary<W: Write>(out: W, rows: &[PolicySummary]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUMMARY_HEADER)?;
    for r in rows {
        w.write_record([
            r.policy.clone(),
            r.iterations_to_tol.map(|k| k.to_string()).unwrap_or_default(),
            r.restarts.to_string(),
            real(r.final_f),
            r.diverged.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One re-parsed trajectory row; columns that were not written are `None`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParsedRecord {
    pub k: Option<usize>,
    pub x_norm: Option<f64>,
    pub f: Option<f64>,
    pub v: Option<f64>,
    pub grad_norm: Option<f64>,
    pub event: Option<Event>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub l_estimate: Option<f64>,
}

/// Parses a trajectory CSV written by [`write_trajectory`].
pub fn read_trajectory<R: Read>(input: R) -> Result<(Vec<String>, Vec<ParsedRecord>), String> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r
        .headers()
        .map_err(|e| e.to_string())?
        .iter()
        .map(str::to_string)
        .collect();
    let mut out = Vec::new();
    for (line, row) in r.records().enumerate() {
        let row = row.map_err(|e| e.to_string())?;
        let mut rec = ParsedRecord::default();
        for (name, cell) in header.iter().zip(row.iter()) {
            let bad = |e: &dyn std::fmt::Display| format!("row {}: column {name}: {e}", line + 1);
            let num = || -> Result<Option<f64>, String> {
                if cell.is_empty() {
                    Ok(None)
                } else {
                    cell.parse::<f64>().map(Some).map_err(|e| bad(&e))
                }
            };
            match name.as_str() {
                "k" => rec.k = Some(cell.parse().map_err(|e| bad(&e))?),
                "x_norm" => rec.x_norm = num()?,
                "f" => rec.f = num()?,
                "V" => rec.v = num()?,
                "grad_norm" => rec.grad_norm = num()?,
                "event" => rec.event = Some(cell.parse().map_err(|e| bad(&e))?),
                "alpha" => rec.alpha = num()?,
                "beta" => rec.beta = num()?,
                "L_estimate" => rec.l_estimate = num()?,
                other => return Err(format!("unknown column `{other}`")),
            }
        }
        out.push(rec);
    }
    Ok((header, out))
}
