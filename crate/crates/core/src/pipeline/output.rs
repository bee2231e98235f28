use super::{Checkpoint, LedgerRow, PipelineError, RunLedger, TimingRow};
use crate::cmaes::TraceRow;
use std::fs::{File, OpenOptions};
use std::path::{Path, PathBuf};

/// Receives run artifacts as they are produced.
pub trait RunObserver {
    fn ledger_row(&mut self, _row: &LedgerRow) -> Result<(), PipelineError> {
        Ok(())
    }

    fn timing(&mut self, _row: &TimingRow) -> Result<(), PipelineError> {
        Ok(())
    }

    /// CMA-ES trace row of the attention search (stage 1) or weight search (stage 2).
    fn trace(&mut self, _stage: u8, _row: &TraceRow) -> Result<(), PipelineError> {
        Ok(())
    }

    /// `improved` is set when the best-so-far fitness rose since the last checkpoint.
    fn checkpoint(&mut self, _checkpoint: &Checkpoint, _improved: bool) -> Result<(), PipelineError> {
        Ok(())
    }
}

/// Discards everything.
pub struct NullObserver;

impl RunObserver for NullObserver {}

/// Writes artifacts into a run directory:
///
/// - `ledger.csv`, `timings.csv`
/// - `trace-attention.csv`, `trace-tune.csv`
/// - `checkpoints/s<stage>-g<generation>.json` (most recent few) and `checkpoints/best.json`
pub struct RunOutput {
    dir: PathBuf,
    keep: usize,
    ledger: csv::Writer<File>,
    timings: csv::Writer<File>,
    traces: [Option<csv::Writer<File>>; 2],
}

fn appender(path: &Path) -> Result<csv::Writer<File>, PipelineError> {
    let fresh = std::fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    let file = OpenOptions::new().create(true).append(true).open(path)?;
    Ok(csv::WriterBuilder::new().has_headers(fresh).from_writer(file))
}

impl RunOutput {
    /// Opens `dir`, creating it. The ledger file is rewritten from `ledger`
    /// (the rows of a resumed run, or empty).
    pub fn create(dir: &Path, keep: usize, ledger: &RunLedger) -> Result<Self, PipelineError> {
        std::fs::create_dir_all(dir.join("checkpoints"))?;
        let ledger_path = dir.join("ledger.csv");
        ledger.write_csv(&ledger_path)?;
        if ledger.rows().is_empty() {
            // A fresh run starts fresh traces.
            for name in ["trace-attention.csv", "trace-tune.csv", "timings.csv"] {
                let _ = std::fs::remove_file(dir.join(name));
            }
        }
        Ok(RunOutput {
            dir: dir.to_path_buf(),
            keep: keep.max(1),
            ledger: appender(&ledger_path)?,
            timings: appender(&dir.join("timings.csv"))?,
            traces: [None, None],
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn rotate(&self) -> Result<(), PipelineError> {
        let mut files: Vec<PathBuf> = std::fs::read_dir(self.dir.join("checkpoints"))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.starts_with('s') && n.ends_with(".json")))
            .collect();
        files.sort();
        let excess = files.len().saturating_sub(self.keep);
        for old in &files[..excess] {
            std::fs::remove_file(old)?;
        }
        Ok(())
    }
}

impl RunObserver for RunOutput {
    fn ledger_row(&mut self, row: &LedgerRow) -> Result<(), PipelineError> {
        self.ledger.serialize(row)?;
        self.ledger.flush()?;
        Ok(())
    }

    fn timing(&mut self, row: &TimingRow) -> Result<(), PipelineError> {
        self.timings.serialize(row)?;
        self.timings.flush()?;
        Ok(())
    }

    fn trace(&mut self, stage: u8, row: &TraceRow) -> Result<(), PipelineError> {
        let slot = usize::from(stage.clamp(1, 2) - 1);
        if self.traces[slot].is_none() {
            let name = if slot == 0 { "trace-attention.csv" } else { "trace-tune.csv" };
            self.traces[slot] = Some(appender(&self.dir.join(name))?);
        }
        let w = self.traces[slot].as_mut().expect("opened above");
        w.serialize(row)?;
        w.flush()?;
        Ok(())
    }

    fn checkpoint(&mut self, checkpoint: &Checkpoint, improved: bool) -> Result<(), PipelineError> {
        let dir = self.dir.join("checkpoints");
        let path = dir.join(format!("s{}-g{:05}.json", checkpoint.stage(), checkpoint.generation()));
        checkpoint.save(&path)?;
        if improved {
            std::fs::copy(&path, dir.join("best.json"))?;
        }
        self.rotate()
    }
}
