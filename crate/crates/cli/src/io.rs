//! Trace ingestion and artifact writers. Numbers are written with 17
//! significant digits so that every exported value reads back bit for bit.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use schottky_mem::device::IvTrace;
use schottky_mem::trace::{TimeSeriesTrace, TraceMeta, TraceRecord};

use crate::config::Format;
use crate::error::{CliError, CliResult};

pub const TRACE_COLUMNS: [&str; 3] = ["t_s", "v_V", "i_A"];
pub const IV_COLUMNS: [&str; 7] = ["t_s", "v_V", "i_A", "i_center_A", "i_edge_A", "n_center_per_m3", "n_edge_per_m3"];

/// Reads a CSV trace whose first three columns are `t_s, v_V, i_A`. Further
/// columns are ignored, so full device traces can be read back too.
pub fn ingest_trace(path: &Path) -> CliResult<TimeSeriesTrace> {
    let file = File::open(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let meta = TraceMeta {
        device_id: path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
        radius: None,
        protocol: "ingested".to_string(),
    };
    read_trace(file, meta).map_err(|e| match e {
        CliError::Input(m) => CliError::Input(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn read_trace<R: std::io::Read>(reader: R, meta: TraceMeta) -> CliResult<TimeSeriesTrace> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(reader);
    let mut rows = rdr.records();
    let header = match rows.next() {
        None => return Err(CliError::Input("empty input: no header and no records".into())),
        Some(r) => r.map_err(|e| csv_error(&e))?,
    };
    let names: Vec<&str> = header.iter().take(3).collect();
    if names != TRACE_COLUMNS {
        return Err(CliError::Input(format!("line 1: expected header starting `t_s,v_V,i_A`, found `{}`", names.join(","))));
    }
    let mut trace = TimeSeriesTrace::new(meta);
    for row in rows {
        let row = row.map_err(|e| csv_error(&e))?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        if row.len() < 3 {
            return Err(CliError::Input(format!("line {line}: expected at least 3 fields, found {}", row.len())));
        }
        let mut vals = [0.0; 3];
        for (k, v) in vals.iter_mut().enumerate() {
            let field = &row[k];
            *v = field
                .parse::<f64>()
                .map_err(|_| CliError::Input(format!("line {line}: `{}` is not a number in column {}", field, TRACE_COLUMNS[k])))?;
            if !v.is_finite() {
                return Err(CliError::Input(format!("line {line}: non-finite {} value `{field}`", TRACE_COLUMNS[k])));
            }
        }
        trace
            .push(TraceRecord { t: vals[0], v: vals[1], i: vals[2] })
            .map_err(|e| CliError::Input(format!("line {line}: {e}")))?;
    }
    if trace.is_empty() {
        return Err(CliError::Input("empty input: header but no records".into()));
    }
    Ok(trace)
}

fn csv_error(e: &csv::Error) -> CliError {
    match e.position() {
        Some(p) => CliError::Input(format!("line {}: {e}", p.line())),
        None => CliError::Input(e.to_string()),
    }
}

/// A numeric table written as CSV or as JSON `{columns, rows}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn from_trace(trace: &TimeSeriesTrace) -> Self {
        let mut t = Self::new(&TRACE_COLUMNS);
        for r in trace.records() {
            t.push(vec![r.t, r.v, r.i]);
        }
        t
    }

    pub fn from_iv(trace: &IvTrace) -> Self {
        let mut t = Self::new(&IV_COLUMNS);
        for s in &trace.samples {
            t.push(vec![s.t, s.v, s.i, s.i_center, s.i_edge, s.n_center, s.n_edge]);
        }
        t
    }

    pub fn write_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "{}", self.columns.join(","))?;
        let mut line = String::new();
        for row in &self.rows {
            line.clear();
            for (k, v) in row.iter().enumerate() {
                if k > 0 {
                    line.push(',');
                }
                line.push_str(&format!("{v:.16e}"));
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    /// Writes `<stem>.csv` or `<stem>.json` under `dir`; returns the file name.
    pub fn write(&self, dir: &Path, stem: &str, format: Format) -> CliResult<String> {
        match format {
            Format::Csv => {
                let name = format!("{stem}.csv");
                let path = dir.join(&name);
                let mut w = BufWriter::new(create(&path)?);
                self.write_csv(&mut w).and_then(|_| w.flush()).map_err(|e| io_at(&path, e))?;
                Ok(name)
            }
            Format::Json => {
                let name = format!("{stem}.json");
                write_json(&dir.join(&name), self)?;
                Ok(name)
            }
        }
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut w = BufWriter::new(create(path)?);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    w.write_all(b"\n").and_then(|_| w.flush()).map_err(|e| io_at(path, e))
}

fn create(path: &Path) -> CliResult<File> {
    File::create(path).map_err(|e| io_at(path, e))
}

pub fn io_at(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}
