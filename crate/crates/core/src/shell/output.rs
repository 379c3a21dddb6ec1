//! CSV tables: comma separated, header row, LF line endings, and the
//! shortest decimal form that parses back to the same `f64`.

use std::path::Path;

use super::{ShellError, ShellResult};
use crate::pareto::ParetoPoint;

pub const PARETO_HEADER: [&str; 9] = ["eta", "capacity", "g_s", "g_l", "L", "lambda", "mu", "p_out", "status"];

/// Shortest round-trip representation, switching to exponent form outside
/// `[1e-4, 1e15)`.
pub fn format_float(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-4..1e15).contains(&a) || !v.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new())
}

fn finish(w: csv::Writer<Vec<u8>>) -> String {
    let bytes = w.into_inner().expect("in-memory writer");
    String::from_utf8(bytes).expect("csv output is UTF-8")
}

pub fn pareto_csv(points: &[ParetoPoint]) -> String {
    let mut w = writer();
    w.write_record(PARETO_HEADER).expect("in-memory write");
    let opt = |v: Option<f64>| v.map(format_float).unwrap_or_default();
    for p in points {
        w.write_record([
            format_float(p.eta),
            format_float(p.capacity),
            format_float(p.g_s),
            format_float(p.g_l),
            opt(p.inductance),
            opt(p.lambda),
            format_float(p.mu),
            format_float(p.p_out),
            p.status.as_str().to_string(),
        ])
        .expect("in-memory write");
    }
    finish(w)
}

/// Two numeric columns.
pub fn columns_csv(names: [&str; 2], x: &[f64], y: &[f64]) -> String {
    let mut w = writer();
    w.write_record(names).expect("in-memory write");
    for (a, b) in x.iter().zip(y) {
        w.write_record([format_float(*a), format_float(*b)]).expect("in-memory write");
    }
    finish(w)
}

/// Parses a table written by [`pareto_csv`].
pub fn read_pareto_csv(text: &str) -> ShellResult<Vec<ParetoPoint>> {
    let mut rdr = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let header = rdr.headers().map_err(csv_error)?.clone();
    if header.iter().ne(PARETO_HEADER) {
        return Err(ShellError::Parse {
            line: 1,
            reason: format!("unexpected header `{}`", header.iter().collect::<Vec<_>>().join(",")),
        });
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_error)?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let num = |i: usize| -> ShellResult<f64> {
            rec[i].parse::<f64>().map_err(|e| ShellError::Parse {
                line,
                reason: format!("column `{}`: {e}", PARETO_HEADER[i]),
            })
        };
        let opt = |i: usize| -> ShellResult<Option<f64>> { if rec[i].is_empty() { Ok(None) } else { num(i).map(Some) } };
        out.push(ParetoPoint {
            eta: num(0)?,
            capacity: num(1)?,
            g_s: num(2)?,
            g_l: num(3)?,
            inductance: opt(4)?,
            lambda: opt(5)?,
            mu: num(6)?,
            p_out: num(7)?,
            status: rec[8].parse().map_err(|e: crate::Error| ShellError::Parse {
                line,
                reason: e.to_string(),
            })?,
        });
    }
    Ok(out)
}

pub(crate) fn csv_error(e: csv::Error) -> ShellError {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    ShellError::Parse {
        line,
        reason: e.to_string(),
    }
}

pub fn write_file(path: &Path, contents: &str) -> ShellResult<()> {
    std::fs::write(path, contents).map_err(|e| ShellError::io(path, e))
}
