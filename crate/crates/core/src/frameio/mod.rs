//! Frame sequences, labels, on-disk formats and the synthetic data generator.

mod fseq;
mod manifest;
mod synth;

pub use fseq::{decode_fseq, encode_fseq, read_fseq, write_fseq, FSQ_MAGIC};
pub use manifest::{
    read_labels, write_labels, write_vocab, Dataset, DatasetManifest, Example, LabelRecord,
    ManifestEntry,
};
pub use synth::{anchor_embedding, generate_synthetic, SynthTrace, SyntheticData, SyntheticSpec};

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::{Error, Result, Scalar};

/// Default frame rate of encoder outputs, in Hz.
pub const DEFAULT_FRAME_RATE_HZ: u32 = 25;

/// A `T x D` row-major matrix of frame embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSequence<S> {
    data: Vec<S>,
    len: usize,
    dim: usize,
    pub frame_rate_hz: Ratio<u32>,
    pub id: String,
}

impl<S: Scalar> FrameSequence<S> {
    /// Builds a sequence from row-major data, rejecting non-finite values.
    pub fn new(data: Vec<S>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("embedding dimension must be at least 1".into()));
        }
        if !data.len().is_multiple_of(dim) {
            return Err(Error::DimensionMismatch {
                what: "row-major data length is not a multiple of dim",
                expected: dim * (data.len() / dim + 1),
                actual: data.len(),
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / dim,
                col: pos % dim,
            });
        }
        Ok(Self {
            len: data.len() / dim,
            data,
            dim,
            frame_rate_hz: Ratio::from_integer(DEFAULT_FRAME_RATE_HZ),
            id: String::new(),
        })
    }

    pub fn from_rows<R: AsRef<[S]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut data = Vec::with_capacity(rows.len() * dim);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != dim {
                return Err(Error::DimensionMismatch {
                    what: "ragged rows",
                    expected: dim,
                    actual: r.len(),
                });
            }
            if let Some(c) = r.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite { row: i, col: c });
            }
            data.extend_from_slice(r);
        }
        Self::new(data, dim)
    }

    /// Builds an empty-or-not sequence without validation. Callers guarantee
    /// finiteness and shape.
    pub(crate) fn from_parts(data: Vec<S>, dim: usize) -> Self {
        debug_assert!(dim > 0 && data.len().is_multiple_of(dim));
        Self {
            len: data.len() / dim,
            data,
            dim,
            frame_rate_hz: Ratio::from_integer(DEFAULT_FRAME_RATE_HZ),
            id: String::new(),
        }
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn with_frame_rate(mut self, hz: Ratio<u32>) -> Self {
        self.frame_rate_hz = hz;
        self
    }

    /// Number of frames `T`.
    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Embedding dimension `D`.
    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn row(&self, j: usize) -> &[S] {
        &self.data[j * self.dim..(j + 1) * self.dim]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, S> {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[S] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<S> {
        self.data
    }

    /// Copies frames `[start, end)` into a new sequence sharing metadata.
    pub fn slice(&self, start: usize, end: usize) -> Self {
        Self {
            data: self.data[start * self.dim..end * self.dim].to_vec(),
            len: end - start,
            dim: self.dim,
            frame_rate_hz: self.frame_rate_hz,
            id: self.id.clone(),
        }
    }

    /// Converts to another scalar type.
    pub fn cast<U: Scalar>(&self) -> FrameSequence<U> {
        FrameSequence {
            data: self.data.iter().map(|&v| U::of(v.as_f64())).collect(),
            len: self.len,
            dim: self.dim,
            frame_rate_hz: self.frame_rate_hz,
            id: self.id.clone(),
        }
    }

    /// Duration in seconds at the stored frame rate.
    pub fn duration_secs(&self) -> f64 {
        let hz = *self.frame_rate_hz.numer() as f64 / *self.frame_rate_hz.denom() as f64;
        self.len as f64 / hz
    }
}

/// A transcript of token ids in `[1, V]`; id 0 is reserved for the blank.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LabelSequence(pub Vec<u32>);

impl LabelSequence {
    pub fn new(tokens: Vec<u32>) -> Self {
        Self(tokens)
    }

    pub fn tokens(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Checks that every token is a non-blank id no larger than `vocab`.
    pub fn validate(&self, vocab: usize) -> Result<()> {
        match self.0.iter().find(|&&t| t == 0 || t as usize > vocab) {
            Some(&token) => Err(Error::TokenOutOfRange { token, vocab }),
            None => Ok(()),
        }
    }
}

impl From<Vec<u32>> for LabelSequence {
    fn from(v: Vec<u32>) -> Self {
        Self(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_nan_and_zero_dim() {
        assert!(matches!(
            FrameSequence::<f32>::new(vec![0.0, f32::NAN], 2),
            Err(Error::NonFinite { row: 0, col: 1 })
        ));
        assert!(FrameSequence::<f32>::new(vec![], 0).is_err());
        assert!(FrameSequence::<f32>::new(vec![1.0, 2.0, 3.0], 2).is_err());
    }

    #[test]
    fn rows_and_duration() {
        let s = FrameSequence::<f64>::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.row(1), &[3.0, 4.0]);
        assert!((s.duration_secs() - 0.08).abs() < 1e-12);
        assert_eq!(s.slice(1, 2).as_slice(), &[3.0, 4.0]);
    }

    #[test]
    fn label_validation() {
        assert!(LabelSequence::new(vec![1, 4]).validate(4).is_ok());
        assert!(LabelSequence::new(vec![0]).validate(4).is_err());
        assert!(LabelSequence::new(vec![5]).validate(4).is_err());
    }
}
