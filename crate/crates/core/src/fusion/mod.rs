//! Similarity-driven span fusion and the baseline fusers.
//!
//! One fusion iteration scores every adjacent pair by cosine similarity,
//! picks the `r` most similar pairs, joins chained pairs into spans and
//! collapses each span into one frame. The halving schedule decides `r` per
//! iteration so the last iteration lands exactly on the target length.

mod baselines;
mod condensed;
mod iterative;
mod schedule;
mod similarity;
mod spans;

pub use baselines::{baseline_avgpool, baseline_random};
pub use condensed::{read_sidecar, write_condensed, CondensedSequence, Sidecar};
pub use iterative::{baseline_mostsim, iterative_fusion, single_shot_fusion, DensityFn, FusionOptions};
pub use schedule::{build_schedule, FusionSchedule, ScheduleStep};
pub use similarity::{adjacent_similarity, SimilarityVector, NORM_EPS};
pub use spans::{group_spans, merge_spans, select_pairs, SpanPartition, WEIGHT_EPS};

use std::fmt;
use std::str::FromStr;

use crate::seed::derive_seed;
use crate::{DensityVector, Error, FrameSequence, Result, Scalar};

/// Selectable compression strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Fuser {
    /// Density-weighted iterative fusion.
    Density,
    /// One-pass fusion without the halving loop.
    SingleShot,
    /// Iterative fusion with uniform weights.
    MostSim,
    AvgPool,
    Random,
    /// Pass-through, for reference rows.
    Identity,
}

impl Fuser {
    pub const ALL: [Fuser; 6] = [
        Fuser::Density,
        Fuser::SingleShot,
        Fuser::MostSim,
        Fuser::AvgPool,
        Fuser::Random,
        Fuser::Identity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Fuser::Density => "density",
            Fuser::SingleShot => "single-shot",
            Fuser::MostSim => "mostsim",
            Fuser::AvgPool => "avgpool",
            Fuser::Random => "random",
            Fuser::Identity => "identity",
        }
    }

    /// Compresses `seq` to `min(T, target)` frames. Inputs no longer than the
    /// target come back unchanged for every strategy.
    ///
    /// `seed` only affects [`Fuser::Random`]; it is mixed with the sequence id
    /// and target so each call gets its own stream.
    pub fn apply<S: Scalar>(
        self,
        seq: &FrameSequence<S>,
        density: &DensityVector<S>,
        target: usize,
        seed: u64,
    ) -> Result<CondensedSequence<S>> {
        if target == 0 {
            return Err(Error::Config("target length must be at least 1".into()));
        }
        if seq.len() <= target || self == Fuser::Identity {
            if density.len() != seq.len() {
                return Err(Error::DimensionMismatch {
                    what: "density length",
                    expected: seq.len(),
                    actual: density.len(),
                });
            }
            return Ok(CondensedSequence::identity(seq, density));
        }
        match self {
            Fuser::Density => iterative_fusion(seq, density, target, &FusionOptions::default()),
            Fuser::SingleShot => single_shot_fusion(seq, density, target),
            Fuser::MostSim => baseline_mostsim(seq, target),
            Fuser::AvgPool => baseline_avgpool(seq, target),
            Fuser::Random => {
                let stream = format!("random/{}/{}", seq.id, target);
                baseline_random(seq, target, derive_seed(seed, &stream))
            }
            Fuser::Identity => unreachable!(),
        }
    }
}

impl fmt::Display for Fuser {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Fuser {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Fuser::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown fuser {s:?}")))
    }
}
