use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::CondensedSequence;
use crate::{DensityVector, Error, FrameSequence, Result, Scalar};

fn check<S: Scalar>(seq: &FrameSequence<S>, target: usize) -> Result<()> {
    if target == 0 {
        return Err(Error::Config("target length must be at least 1".into()));
    }
    if target > seq.len() {
        return Err(Error::TargetTooLong {
            target,
            frames: seq.len(),
        });
    }
    Ok(())
}

/// Keeps `target` distinct frames drawn uniformly without replacement, in
/// their original order.
pub fn baseline_random<S: Scalar>(seq: &FrameSequence<S>, target: usize, seed: u64) -> Result<CondensedSequence<S>> {
    check(seq, target)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keep = rand::seq::index::sample(&mut rng, seq.len(), target).into_vec();
    keep.sort_unstable();
    let mut data = Vec::with_capacity(target * seq.dim());
    for &j in &keep {
        data.extend_from_slice(seq.row(j));
    }
    let mut frames = FrameSequence::from_parts(data, seq.dim());
    frames.id = seq.id.clone();
    frames.frame_rate_hz = seq.frame_rate_hz;
    Ok(CondensedSequence {
        frames,
        provenance: keep.iter().map(|&j| j..j + 1).collect(),
        carried_density: DensityVector::uniform(target, S::one()),
    })
}

/// Averages `target` contiguous segments whose lengths differ by at most one,
/// the longer segments first.
pub fn baseline_avgpool<S: Scalar>(seq: &FrameSequence<S>, target: usize) -> Result<CondensedSequence<S>> {
    check(seq, target)?;
    let (base, extra) = (seq.len() / target, seq.len() % target);
    let dim = seq.dim();
    let mut data = Vec::with_capacity(target * dim);
    let mut provenance = Vec::with_capacity(target);
    let mut start = 0;
    for i in 0..target {
        let end = start + base + usize::from(i < extra);
        let off = data.len();
        data.resize(off + dim, S::zero());
        for j in start..end {
            for (o, &x) in data[off..].iter_mut().zip(seq.row(j)) {
                *o += x;
            }
        }
        let n = S::of((end - start) as f64);
        data[off..].iter_mut().for_each(|o| *o /= n);
        provenance.push(start..end);
        start = end;
    }
    let mut frames = FrameSequence::from_parts(data, dim);
    frames.id = seq.id.clone();
    frames.frame_rate_hz = seq.frame_rate_hz;
    let counts = provenance.iter().map(|r| S::of(r.len() as f64)).collect();
    Ok(CondensedSequence {
        frames,
        provenance,
        carried_density: DensityVector(counts),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(len: usize) -> FrameSequence<f64> {
        FrameSequence::new((0..len).map(|j| j as f64).collect(), 1).unwrap()
    }

    #[test]
    fn avgpool_segments() {
        let out = baseline_avgpool(&ramp(4), 2).unwrap();
        assert_eq!(out.provenance, vec![0..2, 2..4]);
        assert_eq!(out.frames.as_slice(), &[0.5, 2.5]);
        let out = baseline_avgpool(&ramp(5), 2).unwrap();
        assert_eq!(out.provenance, vec![0..3, 3..5]);
        assert_eq!(out.frames.as_slice(), &[1.0, 3.5]);
        let c = FrameSequence::<f64>::from_rows(&[[2.0, -1.0]; 7]).unwrap();
        assert_eq!(baseline_avgpool(&c, 3).unwrap().frames.as_slice(), &[2.0, -1.0, 2.0, -1.0, 2.0, -1.0]);
        assert!(baseline_avgpool(&ramp(3), 4).is_err());
    }

    #[test]
    fn random_identity_and_determinism() {
        let seq = ramp(10);
        assert_eq!(baseline_random(&seq, 10, 3).unwrap().frames, seq);
        let a = baseline_random(&seq, 4, 99).unwrap();
        assert_eq!(a, baseline_random(&seq, 4, 99).unwrap());
        assert!(a.provenance.windows(2).all(|w| w[0].start < w[1].start));
        assert!(baseline_random(&seq, 11, 0).is_err());
    }

    #[test]
    fn random_golden_trace() {
        // Recorded from ChaCha8 (rand_chacha 0.9) with rand 0.9 index sampling.
        let out = baseline_random(&ramp(10), 3, 7).unwrap();
        let picked: Vec<usize> = out.provenance.iter().map(|r| r.start).collect();
        assert_eq!(picked, GOLDEN_T10_L3_SEED7);
    }

    const GOLDEN_T10_L3_SEED7: [usize; 3] = [1, 8, 9];
}
