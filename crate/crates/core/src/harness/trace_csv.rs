use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::{HarnessError, MeritRow, RunTrace};

pub const CSV_HEADER: [&str; 12] = [
    "k",
    "vector_rounds",
    "scalar_rounds",
    "err_rel",
    "V",
    "M_erg",
    "theta_min",
    "theta_max",
    "pi_min",
    "pi_max",
    "d_max",
    "status",
];

/// Shortest representation that parses back to the same `f64`.
pub fn fmt_float(x: f64) -> String {
    format!("{x:?}")
}

fn opt_float(x: Option<f64>) -> String {
    x.map(fmt_float).unwrap_or_default()
}

fn record(row: &MeritRow, status: &str) -> [String; 12] {
    [
        row.k.to_string(),
        row.vector_rounds.to_string(),
        row.scalar_rounds.to_string(),
        fmt_float(row.err_rel),
        opt_float(row.v),
        opt_float(row.m_erg),
        fmt_float(row.theta_min),
        fmt_float(row.theta_max),
        opt_float(row.pi_min),
        opt_float(row.pi_max),
        row.d_max.map(|d| d.to_string()).unwrap_or_default(),
        status.to_string(),
    ]
}

/// Writes `#` comment lines, the header and one line per row. Every row but
/// the last has status `running`; the last carries the final status.
pub fn write_trace<W: Write>(trace: &RunTrace, mut out: W) -> Result<(), HarnessError> {
    for c in &trace.comments {
        writeln!(out, "# {c}")?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    let n = trace.rows.len();
    for (i, row) in trace.rows.iter().enumerate() {
        let status = if i + 1 == n { trace.status.as_str() } else { "running" };
        w.write_record(record(row, status))?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_trace(trace: &RunTrace, path: impl AsRef<Path>) -> Result<(), HarnessError> {
    let path = path.as_ref();
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    write_trace(trace, BufWriter::new(File::create(path)?))
}
