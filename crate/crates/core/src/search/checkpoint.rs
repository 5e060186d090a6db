//! Versioned on-disk snapshot of a suspended search.
//!
//! Candidate masks are not stored; they are rebuilt by replaying the chosen
//! codes, and the root walk that splits a plan into tasks is recomputed, so
//! a snapshot stays small and cannot disagree with the engine.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::engine::{Tally, WalkState};
use super::ConfigEcho;
use crate::error::{CapError, Result};

pub const CHECKPOINT_VERSION: u32 = 1;

/// A task suspended mid-walk.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuspendedTask {
    pub task: usize,
    pub state: WalkState,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub config: ConfigEcho,
    /// Index of the plan root being searched.
    pub root: usize,
    /// Merged result of all earlier roots.
    pub prior: Tally,
    pub task_total: usize,
    /// Finished tasks of the current root, as half-open index ranges.
    pub completed: Vec<(usize, usize)>,
    /// Merged result of the finished tasks.
    pub completed_tally: Tally,
    /// Incumbent size entering the first unfinished chunk of tasks.
    pub carry: usize,
    pub suspended: Vec<SuspendedTask>,
}

impl Checkpoint {
    pub fn is_completed(&self, task: usize) -> bool {
        self.completed.iter().any(|&(a, b)| (a..b).contains(&task))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("checkpoint serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)
            .map_err(|e| CapError::Checkpoint(format!("corrupt checkpoint: {e}")))?;
        match value.get("version").and_then(|v| v.as_u64()) {
            Some(v) if v == u64::from(CHECKPOINT_VERSION) => {}
            Some(v) => {
                return Err(CapError::Checkpoint(format!(
                    "checkpoint format version {v} is not supported (expected {CHECKPOINT_VERSION})"
                )))
            }
            None => {
                return Err(CapError::Checkpoint(
                    "checkpoint has no version field".into(),
                ))
            }
        }
        serde_json::from_value(value)
            .map_err(|e| CapError::Checkpoint(format!("corrupt checkpoint: {e}")))
    }

    /// Writes through a temporary sibling so a crash never leaves a torn file.
    pub fn save(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("tmp");
        let io = |e: std::io::Error| CapError::Checkpoint(format!("{}: {e}", path.display()));
        fs::write(&tmp, self.to_json()).map_err(io)?;
        fs::rename(&tmp, path).map_err(io)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| CapError::Checkpoint(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}

/// Collapses sorted task indices into half-open ranges.
pub(crate) fn to_ranges(indices: impl IntoIterator<Item = usize>) -> Vec<(usize, usize)> {
    let mut out: Vec<(usize, usize)> = Vec::new();
    for i in indices {
        match out.last_mut() {
            Some(last) if last.1 == i => last.1 = i + 1,
            _ => out.push((i, i + 1)),
        }
    }
    out
}
