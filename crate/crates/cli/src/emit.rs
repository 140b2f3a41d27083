//! CSV tables and structured records.

use std::io::Write;
use std::path::Path;

use thiserror::Error;

use crate::report::{ConvergenceReport, Record, RunReport};

pub const CSV_HEADER: [&str; 9] = [
    "experiment",
    "z_re",
    "z_im",
    "quantity_name",
    "value_re",
    "value_im",
    "residual",
    "resolution",
    "flag",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Record,
}

#[derive(Debug, Error)]
pub enum EmitError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: not a structured record: {source}")]
    Parse { path: String, source: serde_json::Error },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn num(x: f64) -> String {
    format!("{x:e}")
}

fn run_rows<W: Write>(out: &mut csv::Writer<W>, report: &RunReport) -> Result<(), csv::Error> {
    let experiment = report.experiment.label();
    for rec in &report.records {
        let r = &rec.report;
        let (z_re, z_im) = (num(r.z.re), num(r.z.im));
        let flags = r.flags.join("; ");
        let row = |name: &str, value: (String, String), residual: String, flag: &str| {
            [
                experiment.to_string(),
                z_re.clone(),
                z_im.clone(),
                name.to_string(),
                value.0,
                value.1,
                residual,
                rec.resolution.clone(),
                flag.to_string(),
            ]
        };
        if r.is_excluded() {
            out.write_record(row("", (String::new(), String::new()), String::new(), &flags))?;
            continue;
        }
        for q in &r.quantities {
            out.write_record(row(&q.name, (num(q.value.re), num(q.value.im)), String::new(), ""))?;
        }
        for res in &r.residuals {
            let flag = if report.fails(&res.name, res.value) { "fail" } else { "" };
            out.write_record(row(&res.name, (String::new(), String::new()), num(res.value), flag))?;
        }
    }
    Ok(())
}

/// One row per rung and residual, then one `order(...)` row per adjacent
/// rung pair with the order in `value_re`.
fn convergence_rows<W: Write>(out: &mut csv::Writer<W>, report: &ConvergenceReport) -> Result<(), csv::Error> {
    let experiment = report.experiment.label();
    let labels: Vec<&str> = report
        .rungs
        .iter()
        .map(|r| r.records.first().map_or("", |x| x.resolution.as_str()))
        .collect();
    for row in &report.rows {
        let (z_re, z_im) = (num(row.z.re), num(row.z.im));
        for (k, v) in row.values.iter().enumerate() {
            let (residual, flag) = match v {
                Some(v) => (num(*v), ""),
                None => (String::new(), "excluded"),
            };
            out.write_record([
                experiment,
                &z_re,
                &z_im,
                &row.residual,
                "",
                "",
                &residual,
                labels[k],
                flag,
            ])?;
        }
        for (k, o) in row.orders.iter().enumerate() {
            let flag = if row.saturated(k) { "saturated" } else { "" };
            out.write_record([
                experiment,
                &z_re,
                &z_im,
                &format!("order({})", row.residual),
                &o.map(num).unwrap_or_default(),
                "",
                "",
                &format!("{}->{}", labels[k], labels[k + 1]),
                flag,
            ])?;
        }
    }
    Ok(())
}

pub fn to_csv(record: &Record) -> Result<Vec<u8>, EmitError> {
    let mut out = csv::Writer::from_writer(Vec::new());
    out.write_record(CSV_HEADER)?;
    match record {
        Record::Run(r) => run_rows(&mut out, r)?,
        Record::Convergence(c) => convergence_rows(&mut out, c)?,
    }
    out.into_inner().map_err(|e| EmitError::Csv(e.into_error().into()))
}

pub fn to_record(record: &Record) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(record).expect("records serialize");
    bytes.push(b'\n');
    bytes
}

pub fn render(record: &Record, format: Format) -> Result<Vec<u8>, EmitError> {
    match format {
        Format::Csv => to_csv(record),
        Format::Record => Ok(to_record(record)),
    }
}

/// Writes to `path`, or to stdout when `path` is `None`.
pub fn write(bytes: &[u8], path: Option<&Path>) -> Result<(), EmitError> {
    match path {
        Some(p) => std::fs::write(p, bytes).map_err(|source| EmitError::Io {
            path: p.display().to_string(),
            source,
        }),
        None => std::io::stdout().write_all(bytes).map_err(|source| EmitError::Io {
            path: "<stdout>".into(),
            source,
        }),
    }
}

pub fn read_record(path: &Path) -> Result<Record, EmitError> {
    let text = std::fs::read(path).map_err(|source| EmitError::Io {
        path: path.display().to_string(),
        source,
    })?;
    serde_json::from_slice(&text).map_err(|source| EmitError::Parse {
        path: path.display().to_string(),
        source,
    })
}
