use std::fs;
use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::frameio::write_fseq;
use crate::{DensityVector, Error, FrameSequence, Result, Scalar};

/// Fusion output: `L` frames, the input interval each one summarizes, and
/// the density each one carries.
#[derive(Debug, Clone, PartialEq)]
pub struct CondensedSequence<S> {
    pub frames: FrameSequence<S>,
    pub provenance: Vec<Range<usize>>,
    pub carried_density: DensityVector<S>,
}

impl<S: Scalar> CondensedSequence<S> {
    pub fn identity(seq: &FrameSequence<S>, density: &DensityVector<S>) -> Self {
        Self {
            frames: seq.clone(),
            provenance: (0..seq.len()).map(|j| j..j + 1).collect(),
            carried_density: density.clone(),
        }
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Provenance intervals are non-empty, ordered and disjoint.
    pub fn provenance_is_ordered(&self) -> bool {
        self.provenance.iter().all(|r| r.start < r.end)
            && self.provenance.windows(2).all(|w| w[0].end <= w[1].start)
    }
}

/// JSON companion of a condensed `FSQ1` file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub input_frames: usize,
    pub output_frames: usize,
    pub provenance: Vec<[usize; 2]>,
    pub carried_density: Vec<f64>,
}

impl Sidecar {
    pub fn from_condensed<S: Scalar>(cs: &CondensedSequence<S>, input_frames: usize) -> Self {
        Self {
            input_frames,
            output_frames: cs.len(),
            provenance: cs.provenance.iter().map(|r| [r.start, r.end]).collect(),
            carried_density: cs.carried_density.0.iter().map(|v| v.as_f64()).collect(),
        }
    }
}

/// Writes the frames as `FSQ1` and the provenance sidecar as JSON.
pub fn write_condensed<S: Scalar>(
    cs: &CondensedSequence<S>,
    input_frames: usize,
    fsq_path: impl AsRef<Path>,
    sidecar_path: impl AsRef<Path>,
) -> Result<()> {
    write_fseq(&cs.frames.cast::<f32>(), fsq_path)?;
    let path = sidecar_path.as_ref();
    let text = serde_json::to_string_pretty(&Sidecar::from_condensed(cs, input_frames))
        .expect("sidecar serializes");
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub fn read_sidecar(path: impl AsRef<Path>) -> Result<Sidecar> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })
}
