//! Long-input handling and dynamic-compression planning.

mod chunk;
mod sampler;

pub use chunk::{chunk_and_encode, compress_to_window, EncoderHook, IdentityHook, ProjectionHook};
pub use sampler::{
    dct_batch_plan, dynamic_compression_objective, read_plan, sample_target_length, write_plan, PlanEntry,
};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Target lengths swept during dynamic-compression training.
pub const DEFAULT_TARGET_LENGTHS: [usize; 7] = [750, 400, 200, 100, 50, 25, 12];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WindowConfig {
    /// Longest sequence the downstream model accepts (750 = 30 s at 25 Hz).
    pub window_frames: usize,
    pub chunk_frames: usize,
    /// Candidate target lengths, largest first.
    pub target_lengths: Vec<usize>,
}

impl Default for WindowConfig {
    fn default() -> Self {
        Self {
            window_frames: 750,
            chunk_frames: 750,
            target_lengths: DEFAULT_TARGET_LENGTHS.to_vec(),
        }
    }
}

impl WindowConfig {
    pub fn validate(&self) -> Result<()> {
        if self.target_lengths.is_empty() {
            return Err(Error::Config("target length set is empty".into()));
        }
        if self.target_lengths.contains(&0) {
            return Err(Error::Config("target lengths must be at least 1".into()));
        }
        if self.chunk_frames == 0 {
            return Err(Error::Config("chunk_frames must be at least 1".into()));
        }
        let max = *self.target_lengths.iter().max().unwrap();
        if self.window_frames < max {
            return Err(Error::Config(format!(
                "window_frames {} is below the largest target length {max}",
                self.window_frames
            )));
        }
        Ok(())
    }
}
