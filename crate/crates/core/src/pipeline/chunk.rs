use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::WindowConfig;
use crate::fusion::{iterative_fusion, CondensedSequence, FusionOptions};
use crate::{DensityVector, Error, FrameSequence, Result, Scalar};

/// A per-chunk frame transform. Implementations must keep the frame count.
pub trait EncoderHook<S>: Sync {
    fn encode(&self, chunk: &FrameSequence<S>) -> Result<FrameSequence<S>>;
}

pub struct IdentityHook;

impl<S: Scalar> EncoderHook<S> for IdentityHook {
    fn encode(&self, chunk: &FrameSequence<S>) -> Result<FrameSequence<S>> {
        Ok(chunk.clone())
    }
}

/// Fixed Gaussian projection `D_in -> D_out`, scaled by `1 / sqrt(D_in)`.
pub struct ProjectionHook<S> {
    in_dim: usize,
    out_dim: usize,
    matrix: Vec<S>,
}

impl<S: Scalar> ProjectionHook<S> {
    pub fn seeded(in_dim: usize, out_dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scale = 1.0 / (in_dim.max(1) as f64).sqrt();
        let matrix = (0..in_dim * out_dim)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                S::of(z * scale)
            })
            .collect();
        Self {
            in_dim,
            out_dim,
            matrix,
        }
    }
}

impl<S: Scalar> EncoderHook<S> for ProjectionHook<S> {
    fn encode(&self, chunk: &FrameSequence<S>) -> Result<FrameSequence<S>> {
        if chunk.dim() != self.in_dim {
            return Err(Error::DimensionMismatch {
                what: "projection input dimension",
                expected: self.in_dim,
                actual: chunk.dim(),
            });
        }
        let mut out = vec![S::zero(); chunk.len() * self.out_dim];
        for (row, o) in chunk.rows().zip(out.chunks_exact_mut(self.out_dim)) {
            for (i, &x) in row.iter().enumerate() {
                let w = &self.matrix[i * self.out_dim..(i + 1) * self.out_dim];
                for (ov, &wv) in o.iter_mut().zip(w) {
                    *ov += x * wv;
                }
            }
        }
        FrameSequence::new(out, self.out_dim)
    }
}

/// Splits into consecutive chunks of `cfg.chunk_frames` (the last may be
/// shorter), encodes each, and concatenates the results in order.
pub fn chunk_and_encode<S: Scalar, H: EncoderHook<S> + ?Sized>(
    seq: &FrameSequence<S>,
    cfg: &WindowConfig,
    hook: &H,
) -> Result<FrameSequence<S>> {
    if seq.is_empty() {
        return Err(Error::TooShort { needed: 1, actual: 0 });
    }
    if cfg.chunk_frames == 0 {
        return Err(Error::Config("chunk_frames must be at least 1".into()));
    }
    let bounds: Vec<(usize, usize)> = (0..seq.len())
        .step_by(cfg.chunk_frames)
        .map(|s| (s, (s + cfg.chunk_frames).min(seq.len())))
        .collect();
    let encoded: Vec<Result<FrameSequence<S>>> = bounds
        .par_iter()
        .map(|&(s, e)| hook.encode(&seq.slice(s, e)))
        .collect();

    let mut data = Vec::new();
    let mut dim = None;
    for (i, (enc, &(s, e))) in encoded.into_iter().zip(&bounds).enumerate() {
        let enc = enc?;
        if enc.len() != e - s {
            return Err(Error::HookContract {
                chunk: i,
                expected: e - s,
                actual: enc.len(),
            });
        }
        match dim {
            None => dim = Some(enc.dim()),
            Some(d) if d != enc.dim() => {
                return Err(Error::DimensionMismatch {
                    what: "encoded chunk dimension",
                    expected: d,
                    actual: enc.dim(),
                })
            }
            _ => {}
        }
        data.extend(enc.into_vec());
    }
    let out = FrameSequence::new(data, dim.unwrap())?;
    Ok(out.with_id(seq.id.clone()).with_frame_rate(seq.frame_rate_hz))
}

/// Fits a sequence into the downstream window with density-guided fusion.
pub fn compress_to_window<S: Scalar>(
    seq: &FrameSequence<S>,
    density: &DensityVector<S>,
    cfg: &WindowConfig,
) -> Result<CondensedSequence<S>> {
    iterative_fusion(seq, density, cfg.window_frames, &FusionOptions::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fusion::build_schedule;

    fn ramp(len: usize, dim: usize) -> FrameSequence<f32> {
        FrameSequence::new((0..len * dim).map(|v| (v % 97) as f32 + 1.0).collect(), dim).unwrap()
    }

    struct Counting(std::sync::Mutex<Vec<usize>>);

    impl EncoderHook<f32> for Counting {
        fn encode(&self, chunk: &FrameSequence<f32>) -> Result<FrameSequence<f32>> {
            self.0.lock().unwrap().push(chunk.len());
            Ok(chunk.clone())
        }
    }

    struct Dropper;

    impl EncoderHook<f32> for Dropper {
        fn encode(&self, chunk: &FrameSequence<f32>) -> Result<FrameSequence<f32>> {
            Ok(chunk.slice(0, chunk.len() - 1))
        }
    }

    #[test]
    fn chunk_sizes_and_identity() {
        let seq = ramp(1600, 2);
        let hook = Counting(Default::default());
        let out = chunk_and_encode(&seq, &WindowConfig::default(), &hook).unwrap();
        let mut sizes = hook.0.into_inner().unwrap();
        sizes.sort();
        assert_eq!(sizes, vec![100, 750, 750]);
        assert_eq!(out, seq);

        let short = ramp(100, 2);
        assert_eq!(chunk_and_encode(&short, &WindowConfig::default(), &IdentityHook).unwrap().len(), 100);
    }

    #[test]
    fn projection_keeps_length_and_is_chunk_invariant() {
        let seq = ramp(1600, 4).cast::<f64>();
        let hook = ProjectionHook::<f64>::seeded(4, 3, 9);
        let chunked = chunk_and_encode(&seq, &WindowConfig::default(), &hook).unwrap();
        let whole = hook.encode(&seq).unwrap();
        assert_eq!(chunked.len(), 1600);
        assert_eq!(chunked.dim(), 3);
        assert_eq!(chunked.as_slice(), whole.as_slice());
    }

    #[test]
    fn hook_contract_violation() {
        let seq = ramp(10, 1);
        let cfg = WindowConfig {
            chunk_frames: 4,
            ..WindowConfig::default()
        };
        assert!(matches!(
            chunk_and_encode(&seq, &cfg, &Dropper),
            Err(Error::HookContract { chunk: 0, .. })
        ));
    }

    #[test]
    fn window_compression_lengths() {
        let cfg = WindowConfig::default();
        for (len, expect) in [(3319, 750), (500, 500), (25000, 750)] {
            let seq = ramp(len, 2);
            let d = DensityVector(vec![0.5; len]);
            let out = compress_to_window(&seq, &d, &cfg).unwrap();
            assert_eq!(out.len(), expect);
        }
        assert!(build_schedule(25000, 750).unwrap().len() <= 7);
    }
}
