//! Seeded synthetic ASR proxy.
//!
//! Each token id `v` owns a fixed unit-norm anchor `e_v`. A token emits `k`
//! consecutive frames `e_v + N(0, sigma^2)`, and silence runs of 1-3
//! near-zero frames may separate tokens. The generator trace records the
//! emission and silence counts so frame totals can be checked exactly.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use super::manifest::{DatasetManifest, LabelRecord, ManifestEntry};
use super::{FrameSequence, LabelSequence};
use crate::{Error, Result};

const ANCHOR_SALT: u64 = 0x616e_6368_6f72_7321;
const SEQUENCE_SALT: u64 = 0x7365_7175_656e_6365;
/// Standard deviation of the frames inside a silence run.
pub const SILENCE_STDDEV: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSpec {
    pub vocab_size: usize,
    pub embed_dim: usize,
    /// Inclusive `[k_min, k_max]` frames emitted per token.
    pub frames_per_token: (usize, usize),
    pub noise_stddev: f64,
    pub silence_prob: f64,
    pub num_sequences: usize,
    /// Inclusive range of transcript lengths.
    pub tokens_per_sequence: (usize, usize),
    pub seed: u64,
    /// Permit the same token twice in a row. Off by default: a framewise
    /// decoder cannot separate back-to-back repeats without a silence gap.
    pub allow_repeats: bool,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            vocab_size: 8,
            embed_dim: 16,
            frames_per_token: (1, 3),
            noise_stddev: 0.1,
            silence_prob: 0.2,
            num_sequences: 200,
            tokens_per_sequence: (5, 20),
            seed: 42,
            allow_repeats: false,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.vocab_size == 0 {
            return bad("vocab_size must be at least 1");
        }
        if self.vocab_size >= u32::MAX as usize {
            return bad("vocab_size must fit in u32");
        }
        if self.embed_dim == 0 {
            return bad("embed_dim must be at least 1");
        }
        let (kmin, kmax) = self.frames_per_token;
        if kmin == 0 || kmin > kmax {
            return bad("frames_per_token must satisfy 1 <= k_min <= k_max");
        }
        if !(self.noise_stddev >= 0.0 && self.noise_stddev.is_finite()) {
            return bad("noise_stddev must be finite and >= 0");
        }
        if !(0.0..1.0).contains(&self.silence_prob) {
            return bad("silence_prob must lie in [0, 1)");
        }
        let (tmin, tmax) = self.tokens_per_sequence;
        if tmin > tmax {
            return bad("tokens_per_sequence must satisfy min <= max");
        }
        Ok(())
    }
}

/// Per-sequence record of what the generator emitted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynthTrace {
    /// Frames emitted by each token.
    pub emissions: Vec<usize>,
    /// Silence frames inserted after each token (0 for the last).
    pub silences: Vec<usize>,
}

impl SynthTrace {
    pub fn total_frames(&self) -> usize {
        self.emissions.iter().sum::<usize>() + self.silences.iter().sum::<usize>()
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub manifest: DatasetManifest,
    pub sequences: Vec<FrameSequence<f32>>,
    pub labels: Vec<LabelRecord>,
}

/// Unit-norm anchor for token `v`; depends only on `v` and `seed`.
pub fn anchor_embedding(v: u32, dim: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ANCHOR_SALT);
    rng.set_stream(v as u64);
    loop {
        let e: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
        let norm = e.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return e.into_iter().map(|x| x / norm).collect();
        }
    }
}

pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<SyntheticData> {
    spec.validate()?;
    let dim = spec.embed_dim;
    let anchors: Vec<Vec<f64>> = (1..=spec.vocab_size as u32)
        .map(|v| anchor_embedding(v, dim, spec.seed))
        .collect();
    // sigma >= 0 was validated, so these cannot fail.
    let noise = Normal::new(0.0, spec.noise_stddev).unwrap();
    let silence = Normal::new(0.0, SILENCE_STDDEV).unwrap();

    let mut sequences = Vec::with_capacity(spec.num_sequences);
    let mut labels = Vec::with_capacity(spec.num_sequences);
    let mut entries = Vec::with_capacity(spec.num_sequences);

    for i in 0..spec.num_sequences {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ SEQUENCE_SALT);
        rng.set_stream(i as u64);

        let n_tokens = rng.random_range(spec.tokens_per_sequence.0..=spec.tokens_per_sequence.1);
        let mut tokens = Vec::with_capacity(n_tokens);
        for _ in 0..n_tokens {
            let prev = tokens.last().copied();
            let tok = match prev {
                Some(p) if !spec.allow_repeats && spec.vocab_size > 1 => {
                    // Uniform over the other V-1 ids.
                    let t = rng.random_range(1..spec.vocab_size as u32);
                    if t >= p {
                        t + 1
                    } else {
                        t
                    }
                }
                _ => rng.random_range(1..=spec.vocab_size as u32),
            };
            tokens.push(tok);
        }

        let mut data: Vec<f32> = Vec::new();
        let mut trace = SynthTrace {
            emissions: Vec::with_capacity(n_tokens),
            silences: Vec::with_capacity(n_tokens),
        };
        for (pos, &tok) in tokens.iter().enumerate() {
            let k = rng.random_range(spec.frames_per_token.0..=spec.frames_per_token.1);
            let anchor = &anchors[tok as usize - 1];
            for _ in 0..k {
                data.extend(anchor.iter().map(|&a| (a + noise.sample(&mut rng)) as f32));
            }
            trace.emissions.push(k);

            let mut gap = 0;
            if pos + 1 < n_tokens && rng.random_bool(spec.silence_prob) {
                gap = rng.random_range(1..=3);
                for _ in 0..gap * dim {
                    data.push(silence.sample(&mut rng) as f32);
                }
            }
            trace.silences.push(gap);
        }

        let id = format!("seq_{i:05}");
        let seq = FrameSequence::from_parts(data, dim).with_id(id.clone());
        entries.push(ManifestEntry {
            id: id.clone(),
            sequence: format!("{id}.fsq").into(),
            labels: format!("{id}.labels.jsonl").into(),
            duration_frames: seq.len(),
        });
        sequences.push(seq);
        labels.push(LabelRecord {
            id,
            tokens: LabelSequence::new(tokens),
            trace: Some(trace),
        });
    }

    Ok(SyntheticData {
        manifest: DatasetManifest {
            vocab_size: spec.vocab_size,
            embed_dim: dim,
            seed: spec.seed,
            entries,
        },
        sequences,
        labels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn noiseless(tokens: (usize, usize)) -> SyntheticSpec {
        SyntheticSpec {
            vocab_size: 8,
            embed_dim: 4,
            frames_per_token: (1, 1),
            noise_stddev: 0.0,
            silence_prob: 0.0,
            num_sequences: 10,
            tokens_per_sequence: tokens,
            seed: 11,
            allow_repeats: false,
        }
    }

    #[test]
    fn noiseless_frames_are_the_anchors() {
        let data = generate_synthetic(&noiseless((2, 6))).unwrap();
        for (seq, lab) in data.sequences.iter().zip(&data.labels) {
            assert_eq!(seq.len(), lab.tokens.len());
            for (row, &tok) in seq.rows().zip(lab.tokens.tokens()) {
                let e: Vec<f32> = anchor_embedding(tok, 4, 11)
                    .into_iter()
                    .map(|x| x as f32)
                    .collect();
                assert_eq!(row, e.as_slice());
            }
        }
    }

    #[test]
    fn anchors_are_unit_norm_and_seed_dependent() {
        let a = anchor_embedding(3, 16, 1);
        let n: f64 = a.iter().map(|x| x * x).sum();
        assert!((n - 1.0).abs() < 1e-12);
        assert_ne!(a, anchor_embedding(3, 16, 2));
        assert_ne!(a, anchor_embedding(4, 16, 1));
        assert_eq!(a, anchor_embedding(3, 16, 1));
    }

    #[test]
    fn frame_count_matches_trace_and_bounds() {
        let spec = SyntheticSpec {
            vocab_size: 8,
            embed_dim: 16,
            frames_per_token: (1, 3),
            noise_stddev: 0.1,
            silence_prob: 0.3,
            num_sequences: 200,
            tokens_per_sequence: (4, 12),
            seed: 42,
            allow_repeats: false,
        };
        let data = generate_synthetic(&spec).unwrap();
        assert_eq!(data.manifest.entries.len(), 200);
        for ((seq, lab), entry) in data.sequences.iter().zip(&data.labels).zip(&data.manifest.entries) {
            let trace = lab.trace.as_ref().unwrap();
            assert_eq!(seq.len(), trace.total_frames());
            assert_eq!(entry.duration_frames, seq.len());
            let n = lab.tokens.len();
            assert!((4..=12).contains(&n));
            let silence: usize = trace.silences.iter().sum();
            assert!(seq.len() >= n && seq.len() <= 3 * n + silence);
            assert!(silence <= 3 * n.saturating_sub(1));
            assert!(lab.tokens.tokens().windows(2).all(|w| w[0] != w[1]));
        }
    }

    #[test]
    fn invalid_specs() {
        let base = SyntheticSpec::default();
        for spec in [
            SyntheticSpec { vocab_size: 0, ..base.clone() },
            SyntheticSpec { embed_dim: 0, ..base.clone() },
            SyntheticSpec { frames_per_token: (0, 2), ..base.clone() },
            SyntheticSpec { frames_per_token: (3, 2), ..base.clone() },
            SyntheticSpec { noise_stddev: -1.0, ..base.clone() },
            SyntheticSpec { silence_prob: 1.0, ..base.clone() },
        ] {
            assert!(matches!(generate_synthetic(&spec), Err(Error::Config(_))));
        }
    }
}
