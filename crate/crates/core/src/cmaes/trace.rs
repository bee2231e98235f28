use super::GenerationSummary;
use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io;
use std::path::Path;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub generation: u64,
    pub best: f64,
    pub mean: f64,
    pub sigma: f64,
    pub axis_ratio: f64,
}

impl From<&GenerationSummary> for TraceRow {
    fn from(s: &GenerationSummary) -> Self {
        TraceRow { generation: s.generation, best: s.best, mean: s.mean, sigma: s.sigma, axis_ratio: s.axis_ratio }
    }
}

/// Appends one CSV row per generation, flushing after each.
pub struct TraceWriter {
    inner: csv::Writer<File>,
}

impl TraceWriter {
    pub fn create(path: &Path) -> io::Result<Self> {
        Ok(TraceWriter { inner: csv::Writer::from_path(path)? })
    }

    pub fn write(&mut self, row: &TraceRow) -> io::Result<()> {
        self.inner.serialize(row)?;
        self.inner.flush()
    }
}

pub fn write_trace(path: &Path, rows: &[TraceRow]) -> io::Result<()> {
    let mut w = TraceWriter::create(path)?;
    for r in rows {
        w.write(r)?;
    }
    Ok(())
}
