use super::PipelineError;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    /// Evaluation of a starting point before any search step.
    Init,
    /// Stage 1: attention candidates evaluated with the frozen best network.
    Attention,
    /// Stage 1: the NEAT population evaluated with the frozen best attention.
    Neat,
    /// Stage 2: weight candidates.
    Tune,
}

/// Fitness statistics of one phase of one generation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LedgerRow {
    pub stage: u8,
    pub generation: u64,
    pub phase: Phase,
    pub best: f64,
    pub mean: f64,
    pub std: f64,
    pub episodes: u64,
}

impl LedgerRow {
    /// Population statistics (std with divisor n) of `fitness`.
    pub fn from_fitness(stage: u8, generation: u64, phase: Phase, fitness: &[f64], trials: usize) -> Self {
        let n = fitness.len() as f64;
        let mean = fitness.iter().sum::<f64>() / n;
        let var = fitness.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / n;
        let best = fitness.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        LedgerRow { stage, generation, phase, best, mean, std: var.sqrt(), episodes: (fitness.len() * trials) as u64 }
    }
}

/// Wall-clock duration of a phase; kept apart from the ledger so ledgers
/// stay reproducible.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub stage: u8,
    pub generation: u64,
    pub phase: Phase,
    pub seconds: f64,
}

/// Append-only record of a run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunLedger {
    rows: Vec<LedgerRow>,
}

impl RunLedger {
    pub fn new() -> Self {
        RunLedger::default()
    }

    pub fn rows(&self) -> &[LedgerRow] {
        &self.rows
    }

    /// Appends a row; generations within a stage may not go backwards and
    /// stages may not go backwards.
    pub fn push(&mut self, row: LedgerRow) -> Result<(), PipelineError> {
        if let Some(last) = self.rows.last() {
            if row.stage < last.stage || (row.stage == last.stage && row.generation < last.generation) {
                return Err(PipelineError::Format(format!(
                    "ledger row for stage {} generation {} follows stage {} generation {}",
                    row.stage, row.generation, last.stage, last.generation
                )));
            }
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn episodes(&self, stage: u8) -> u64 {
        self.rows.iter().filter(|r| r.stage == stage).map(|r| r.episodes).sum()
    }

    /// Running maximum of `best` over the rows of `stage`.
    pub fn best_so_far(&self, stage: u8) -> Vec<f64> {
        let mut acc = f64::NEG_INFINITY;
        self.rows
            .iter()
            .filter(|r| r.stage == stage)
            .map(|r| {
                acc = acc.max(r.best);
                acc
            })
            .collect()
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), PipelineError> {
        let mut w = csv::Writer::from_path(path)?;
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Parses a ledger file. Fails on an empty ledger.
pub fn read_ledger(path: &Path) -> Result<RunLedger, PipelineError> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut ledger = RunLedger::new();
    for (i, row) in reader.deserialize::<LedgerRow>().enumerate() {
        let row = row.map_err(|e| PipelineError::Format(format!("{}: row {}: {e}", path.display(), i + 1)))?;
        ledger.push(row)?;
    }
    if ledger.rows.is_empty() {
        return Err(PipelineError::Format(format!("{}: ledger has no rows", path.display())));
    }
    Ok(ledger)
}
