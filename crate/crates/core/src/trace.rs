//! Sampled (t, V, I) records exchanged between simulator, fitter and CLI.

use serde::{Deserialize, Serialize};

use crate::error::{param, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    /// Time (s).
    pub t: f64,
    /// Applied voltage (V).
    pub v: f64,
    /// Signed current (A).
    pub i: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TraceMeta {
    pub device_id: String,
    pub radius: Option<f64>,
    pub protocol: String,
}

/// Time-ordered record list. Times strictly increase and no value is NaN or infinite.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TimeSeriesTrace {
    records: Vec<TraceRecord>,
    pub meta: TraceMeta,
}

impl TimeSeriesTrace {
    pub fn new(meta: TraceMeta) -> Self {
        Self { records: Vec::new(), meta }
    }

    pub fn from_records(records: Vec<TraceRecord>, meta: TraceMeta) -> Result<Self> {
        let mut trace = Self::new(meta);
        for r in records {
            trace.push(r)?;
        }
        Ok(trace)
    }

    pub fn push(&mut self, r: TraceRecord) -> Result<()> {
        if !(r.t.is_finite() && r.v.is_finite() && r.i.is_finite()) {
            return Err(param("record", format!("non-finite value in {r:?}")));
        }
        if let Some(last) = self.records.last() {
            if r.t <= last.t {
                return Err(param(
                    "record",
                    format!("time {} does not increase past {}", r.t, last.t),
                ));
            }
        }
        self.records.push(r);
        Ok(())
    }

    pub fn records(&self) -> &[TraceRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.t).collect()
    }

    pub fn currents(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.i).collect()
    }
}
