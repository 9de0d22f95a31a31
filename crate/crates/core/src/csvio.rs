//! CSV serialization of traces and tables.
//!
//! Floats are written with 17 significant digits, so parsing recovers them exactly.
//! Absent values are empty cells.

use std::fs;
use std::path::Path;

use crate::engine::{Trace, TraceRecord};
use crate::error::{Result, SspgError};
use crate::montecarlo::{MeanTrace, MeanTraceRecord};

pub const TRACE_COLUMNS: [&str; 5] = [
    "k",
    "sq_dist_to_opt",
    "objective",
    "dist_to_feasible",
    "wall_time_s",
];
pub const MEAN_TRACE_COLUMNS: [&str; 4] = ["k", "mean_sq_dist", "stderr", "R"];

pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

/// Renders a header and rows as CSV text.
pub fn table_to_string<S: AsRef<str>>(header: &[S], rows: &[Vec<String>]) -> Result<String> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let csv_err = |e: csv::Error| SspgError::InvalidArgument(format!("csv: {e}"));
    w.write_record(header.iter().map(|s| s.as_ref()))
        .map_err(csv_err)?;
    for row in rows {
        w.write_record(row).map_err(csv_err)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| SspgError::InvalidArgument(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| SspgError::io(dir, e))?;
        }
    }
    fs::write(path, text).map_err(|e| SspgError::io(path, e))
}

pub fn trace_to_csv(records: &[TraceRecord]) -> Result<String> {
    let rows: Vec<Vec<String>> = records
        .iter()
        .map(|r| {
            vec![
                r.k.to_string(),
                fmt_opt(r.sq_dist_to_opt),
                fmt_opt(r.objective),
                fmt_opt(r.dist_to_feasible),
                fmt_opt(r.wall_time_s),
            ]
        })
        .collect();
    table_to_string(&TRACE_COLUMNS, &rows)
}

pub fn mean_trace_to_csv(mean: &MeanTrace) -> Result<String> {
    let rows: Vec<Vec<String>> = mean
        .records
        .iter()
        .map(|r| {
            vec![
                r.k.to_string(),
                fmt_f64(r.mean_sq_dist),
                fmt_f64(r.stderr),
                mean.runs.to_string(),
            ]
        })
        .collect();
    table_to_string(&MEAN_TRACE_COLUMNS, &rows)
}

pub fn emit_trace_csv(trace: &Trace, path: impl AsRef<Path>) -> Result<()> {
    write_text(path.as_ref(), &trace_to_csv(&trace.records)?)
}

pub fn emit_mean_trace_csv(mean: &MeanTrace, path: impl AsRef<Path>) -> Result<()> {
    write_text(path.as_ref(), &mean_trace_to_csv(mean)?)
}

fn read_rows(text: &str, header: &[&str]) -> Result<Vec<csv::StringRecord>> {
    let bad = |m: String| SspgError::InvalidArgument(format!("csv: {m}"));
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let got = r.headers().map_err(|e| bad(e.to_string()))?.clone();
    if got.iter().ne(header.iter().copied()) {
        return Err(bad(format!(
            "unexpected header {:?}",
            got.iter().collect::<Vec<_>>()
        )));
    }
    r.records()
        .map(|rec| rec.map_err(|e| bad(e.to_string())))
        .collect()
}

fn parse_cell<T: std::str::FromStr>(s: &str, line: usize) -> Result<T> {
    s.parse()
        .map_err(|_| SspgError::InvalidArgument(format!("csv: bad value {s:?} on row {line}")))
}

fn parse_opt(s: &str, line: usize) -> Result<Option<f64>> {
    if s.is_empty() {
        Ok(None)
    } else {
        parse_cell(s, line).map(Some)
    }
}

pub fn parse_trace_csv(text: &str) -> Result<Vec<TraceRecord>> {
    read_rows(text, &TRACE_COLUMNS)?
        .iter()
        .enumerate()
        .map(|(i, r)| {
            Ok(TraceRecord {
                k: parse_cell(&r[0], i + 1)?,
                sq_dist_to_opt: parse_opt(&r[1], i + 1)?,
                objective: parse_opt(&r[2], i + 1)?,
                dist_to_feasible: parse_opt(&r[3], i + 1)?,
                wall_time_s: parse_opt(&r[4], i + 1)?,
            })
        })
        .collect()
}

pub fn parse_mean_trace_csv(text: &str) -> Result<MeanTrace> {
    let rows = read_rows(text, &MEAN_TRACE_COLUMNS)?;
    let mut runs = None;
    let mut records = Vec::with_capacity(rows.len());
    for (i, r) in rows.iter().enumerate() {
        let rr: usize = parse_cell(&r[3], i + 1)?;
        if runs.replace(rr).is_some_and(|prev| prev != rr) {
            return Err(SspgError::InvalidArgument(
                "csv: inconsistent R column".into(),
            ));
        }
        records.push(MeanTraceRecord {
            k: parse_cell(&r[0], i + 1)?,
            mean_sq_dist: parse_cell(&r[1], i + 1)?,
            stderr: parse_cell(&r[2], i + 1)?,
        });
    }
    MeanTrace::from_records(runs.unwrap_or(0), records)
}
