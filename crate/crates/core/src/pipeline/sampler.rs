use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::WindowConfig;
use crate::fusion::{iterative_fusion, CondensedSequence, FusionOptions};
use crate::seed::derive_seed;
use crate::{DensityVector, Error, FrameSequence, Result, Scalar};

/// Draws one target length uniformly from `cfg.target_lengths`.
pub fn sample_target_length<R: Rng + ?Sized>(cfg: &WindowConfig, rng: &mut R) -> Result<usize> {
    if cfg.target_lengths.is_empty() {
        return Err(Error::Config("target length set is empty".into()));
    }
    Ok(cfg.target_lengths[rng.random_range(0..cfg.target_lengths.len())])
}

/// One planned compression: sequence `id` is fused to `target` in `epoch`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanEntry {
    pub id: String,
    #[serde(rename = "L")]
    pub target: usize,
    pub epoch: usize,
    pub seed: u64,
}

/// Assigns one sampled target length per sequence per epoch. The plan depends
/// only on the ids, the length set, `seed` and `epochs`.
pub fn dct_batch_plan<I: AsRef<str>>(
    ids: &[I],
    cfg: &WindowConfig,
    seed: u64,
    epochs: usize,
) -> Result<Vec<PlanEntry>> {
    if ids.is_empty() {
        return Err(Error::Config("cannot plan over an empty manifest".into()));
    }
    if cfg.target_lengths.is_empty() {
        return Err(Error::Config("target length set is empty".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "sampler"));
    let mut plan = Vec::with_capacity(ids.len() * epochs);
    for epoch in 0..epochs {
        for id in ids {
            plan.push(PlanEntry {
                id: id.as_ref().to_string(),
                target: sample_target_length(cfg, &mut rng)?,
                epoch,
                seed,
            });
        }
    }
    Ok(plan)
}

pub fn write_plan(plan: &[PlanEntry], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    for e in plan {
        out.push_str(&serde_json::to_string(e).expect("plan entry serializes"));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_plan(path: impl AsRef<Path>) -> Result<Vec<PlanEntry>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            serde_json::from_str(l).map_err(|source| Error::Json {
                path: path.to_path_buf(),
                source,
            })
        })
        .collect()
}

/// Sums `downstream_loss(entry, IF(h, L))` over a plan, where `lookup`
/// resolves a plan id to its frames and densities.
pub fn dynamic_compression_objective<'a, S, G, F>(plan: &[PlanEntry], lookup: G, mut downstream_loss: F) -> Result<f64>
where
    S: Scalar,
    G: Fn(&str) -> Option<(&'a FrameSequence<S>, &'a DensityVector<S>)>,
    F: FnMut(&PlanEntry, &CondensedSequence<S>) -> Result<f64>,
{
    let mut total = 0.0;
    for entry in plan {
        let (seq, density) =
            lookup(&entry.id).ok_or_else(|| Error::Config(format!("plan references unknown id {:?}", entry.id)))?;
        let condensed = iterative_fusion(seq, density, entry.target, &FusionOptions::default())?;
        total += downstream_loss(entry, &condensed)?;
    }
    Ok(total)
}
