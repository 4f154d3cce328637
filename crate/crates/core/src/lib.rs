//! Compression of long frame-embedding sequences.
//!
//! The stack has five layers:
//!
//! * [`frameio`]: the frame-sequence model, the `FSQ1` binary format, JSONL
//!   manifests and a seeded synthetic ASR-proxy generator.
//! * [`ctc`]: CTC loss and gradients in log space, an exhaustive alignment
//!   oracle, greedy decoding, a one-hidden-layer decoder head and its trainer,
//!   and per-frame content density.
//! * [`fusion`]: adjacent-frame cosine similarity, the halving schedule, top-r
//!   pair selection, span grouping, density-weighted merging, the iterative
//!   fusion loop and the baseline fusers.
//! * [`pipeline`]: chunked encoding of long inputs, window compression and the
//!   target-length sampler used for dynamic-compression plans.
//! * [`bench`]: edit distance, decode-retention measurement, the cost proxy
//!   and the experiment grid.
//!
//! All numerical code is generic over [`Scalar`] (`f32` or `f64`). The file
//! formats are `f32`; the aliases below name the common instantiations.

pub mod bench;
pub mod ctc;
pub mod error;
pub mod frameio;
pub mod fusion;
pub mod oracle;
pub mod pipeline;
mod scalar;
pub mod seed;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub use ctc::{Alignment, CtcDecoder, DensityVector, PosteriorGrid};
pub use frameio::{DatasetManifest, FrameSequence, LabelSequence, SyntheticSpec};
pub use fusion::{CondensedSequence, FusionSchedule, Fuser, SimilarityVector, SpanPartition};
pub use pipeline::WindowConfig;

/// Frame sequence in the on-disk precision.
pub type Frames32 = FrameSequence<f32>;
/// Frame sequence in double precision, used by the oracles.
pub type Frames64 = FrameSequence<f64>;
pub type Grid32 = PosteriorGrid<f32>;
pub type Grid64 = PosteriorGrid<f64>;
pub type Density32 = DensityVector<f32>;
pub type Density64 = DensityVector<f64>;
pub type Decoder32 = CtcDecoder<f32>;
pub type Decoder64 = CtcDecoder<f64>;
pub type Condensed32 = CondensedSequence<f32>;
pub type Condensed64 = CondensedSequence<f64>;
