use super::{PipelineError, SeesawState, TuneState};
use crate::config::RunConfig;
use serde::{Deserialize, Serialize};
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

pub const CHECKPOINT_FORMAT: &str = "seesaw-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Resumable state at a generation boundary. Random streams are derived
/// from the root seed and generation number, so no generator state is stored.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "stage", rename_all = "snake_case")]
pub enum Checkpoint {
    Stage1 { config: RunConfig, state: Box<SeesawState> },
    Stage2 { config: RunConfig, state: Box<TuneState> },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CheckpointFile {
    format: String,
    version: u32,
    checkpoint: Checkpoint,
}

impl Checkpoint {
    pub fn config(&self) -> &RunConfig {
        match self {
            Checkpoint::Stage1 { config, .. } | Checkpoint::Stage2 { config, .. } => config,
        }
    }

    pub fn stage(&self) -> u8 {
        match self {
            Checkpoint::Stage1 { .. } => 1,
            Checkpoint::Stage2 { .. } => 2,
        }
    }

    /// Completed generations of the checkpointed stage.
    pub fn generation(&self) -> u64 {
        match self {
            Checkpoint::Stage1 { state, .. } => state.generation,
            Checkpoint::Stage2 { state, .. } => state.generation,
        }
    }

    pub fn save(&self, path: &Path) -> Result<(), PipelineError> {
        let file = std::fs::File::create(path).map_err(|e| PipelineError::Io(format!("{}: {e}", path.display())))?;
        let mut w = BufWriter::new(file);
        let record = CheckpointFileRef { format: CHECKPOINT_FORMAT, version: CHECKPOINT_VERSION, checkpoint: self };
        serde_json::to_writer(&mut w, &record).map_err(|e| PipelineError::Io(e.to_string()))?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let file = std::fs::File::open(path).map_err(|e| PipelineError::Io(format!("{}: {e}", path.display())))?;
        let record: CheckpointFile = serde_json::from_reader(BufReader::new(file))
            .map_err(|e| PipelineError::Format(format!("{}: {e}", path.display())))?;
        if record.format != CHECKPOINT_FORMAT {
            return Err(PipelineError::Format(format!("{}: not a checkpoint", path.display())));
        }
        if record.version != CHECKPOINT_VERSION {
            return Err(PipelineError::Format(format!("{}: unsupported checkpoint version {}", path.display(), record.version)));
        }
        record.checkpoint.config().validate()?;
        Ok(record.checkpoint)
    }
}

#[derive(Serialize)]
struct CheckpointFileRef<'a> {
    format: &'a str,
    version: u32,
    checkpoint: &'a Checkpoint,
}
