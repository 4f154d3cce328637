use std::ops::Range;

use super::{adjacent_similarity, build_schedule, group_spans, merge_spans, select_pairs, CondensedSequence};
use crate::{DensityVector, Error, FrameSequence, Result, Scalar};

/// Recomputes per-frame density for a partially merged sequence.
pub type DensityFn<'a, S> = dyn Fn(&FrameSequence<S>) -> Result<DensityVector<S>> + Sync + 'a;

pub struct FusionOptions<'a, S> {
    /// When set, densities are re-derived from the merged frames after every
    /// iteration instead of carrying summed densities forward.
    pub recompute_density: Option<&'a DensityFn<'a, S>>,
}

impl<S> Default for FusionOptions<'_, S> {
    fn default() -> Self {
        Self {
            recompute_density: None,
        }
    }
}

fn check_inputs<S: Scalar>(seq: &FrameSequence<S>, density: Option<&DensityVector<S>>, target: usize) -> Result<()> {
    if target == 0 {
        return Err(Error::Config("target length must be at least 1".into()));
    }
    if seq.is_empty() {
        return Err(Error::TooShort { needed: 1, actual: 0 });
    }
    if let Some(d) = density {
        if d.len() != seq.len() {
            return Err(Error::DimensionMismatch {
                what: "density length",
                expected: seq.len(),
                actual: d.len(),
            });
        }
    }
    Ok(())
}

/// Maps spans over the current frames back to intervals over the input.
fn compose(prov: &[Range<usize>], spans: &[Range<usize>]) -> Vec<Range<usize>> {
    spans
        .iter()
        .map(|s| prov[s.start].start..prov[s.end - 1].end)
        .collect()
}

/// Density-guided iterative fusion down to exactly `target` frames.
///
/// Each scheduled iteration recomputes adjacent similarity on the current
/// frames, merges the `r(m)` most similar pairs (chained pairs form longer
/// spans) and weights each span by content density. Inputs with
/// `T <= target` are returned unchanged.
pub fn iterative_fusion<S: Scalar>(
    seq: &FrameSequence<S>,
    density: &DensityVector<S>,
    target: usize,
    opts: &FusionOptions<'_, S>,
) -> Result<CondensedSequence<S>> {
    check_inputs(seq, Some(density), target)?;
    let schedule = build_schedule(seq.len(), target)?;
    let mut cur = seq.clone();
    let mut dens = density.clone();
    let mut prov: Vec<Range<usize>> = (0..seq.len()).map(|j| j..j + 1).collect();
    for step in &schedule.steps {
        let sims = adjacent_similarity(&cur)?;
        let pairs = select_pairs(&sims, step.reduce)?;
        let spans = group_spans(&pairs, cur.len())?;
        let (merged, carried, local) = merge_spans(&cur, &dens, &spans)?;
        debug_assert_eq!(merged.len(), step.to);
        prov = compose(&prov, &local);
        dens = match opts.recompute_density {
            Some(f) => f(&merged)?,
            None => carried,
        };
        cur = merged;
    }
    Ok(CondensedSequence {
        frames: cur,
        provenance: prov,
        carried_density: dens,
    })
}

/// The same schedule, pair selection and span grouping as
/// [`iterative_fusion`], but every output frame is the plain average of the
/// input frames it covers. Carried density counts those frames.
pub fn baseline_mostsim<S: Scalar>(seq: &FrameSequence<S>, target: usize) -> Result<CondensedSequence<S>> {
    check_inputs(seq, None, target)?;
    if target > seq.len() {
        return Err(Error::TargetTooLong {
            target,
            frames: seq.len(),
        });
    }
    let schedule = build_schedule(seq.len(), target)?;
    let dim = seq.dim();
    let mut cur = seq.clone();
    let mut prov: Vec<Range<usize>> = (0..seq.len()).map(|j| j..j + 1).collect();
    for step in &schedule.steps {
        let sims = adjacent_similarity(&cur)?;
        let pairs = select_pairs(&sims, step.reduce)?;
        let spans = group_spans(&pairs, cur.len())?;
        prov = compose(&prov, &spans.spans);
        let mut data = Vec::with_capacity(prov.len() * dim);
        for iv in &prov {
            let base = data.len();
            data.resize(base + dim, S::zero());
            for j in iv.clone() {
                for (o, &x) in data[base..].iter_mut().zip(seq.row(j)) {
                    *o += x;
                }
            }
            let n = S::of(iv.len() as f64);
            data[base..].iter_mut().for_each(|o| *o /= n);
        }
        let mut next = FrameSequence::from_parts(data, dim);
        next.id = seq.id.clone();
        next.frame_rate_hz = seq.frame_rate_hz;
        cur = next;
    }
    let counts = prov.iter().map(|iv| S::of(iv.len() as f64)).collect();
    Ok(CondensedSequence {
        frames: cur,
        provenance: prov,
        carried_density: DensityVector(counts),
    })
}

/// One pass: select `T - target` pairs at once, group and merge with density
/// weights.
pub fn single_shot_fusion<S: Scalar>(
    seq: &FrameSequence<S>,
    density: &DensityVector<S>,
    target: usize,
) -> Result<CondensedSequence<S>> {
    check_inputs(seq, Some(density), target)?;
    if target > seq.len() {
        return Err(Error::TargetTooLong {
            target,
            frames: seq.len(),
        });
    }
    if target == seq.len() {
        return Ok(CondensedSequence::identity(seq, density));
    }
    let sims = adjacent_similarity(seq)?;
    let pairs = select_pairs(&sims, seq.len() - target)?;
    let spans = group_spans(&pairs, seq.len())?;
    let (frames, carried, provenance) = merge_spans(seq, density, &spans)?;
    Ok(CondensedSequence {
        frames,
        provenance,
        carried_density: carried,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ctc::DensityVector;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn random_seq(len: usize, dim: usize, seed: u64) -> (FrameSequence<f64>, DensityVector<f64>) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let data = (0..len * dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let d = (0..len).map(|_| rng.random_range(0.0..1.0)).collect();
        (FrameSequence::new(data, dim).unwrap(), DensityVector(d))
    }

    #[test]
    fn hand_worked_four_to_two() {
        // e01 = e23 = 1/sqrt(1.01), e12 ~ 0.0995; r = 2 selects pairs {0, 2}.
        let seq = FrameSequence::<f64>::from_rows(&[[1.0, 0.0], [1.0, 0.1], [0.0, 1.0], [0.1, 1.0]]).unwrap();
        let d = DensityVector(vec![0.2, 0.6, 0.5, 0.5]);
        let out = iterative_fusion(&seq, &d, 2, &FusionOptions::default()).unwrap();
        assert_eq!(out.provenance, vec![0..2, 2..4]);
        let expect = [[1.0, 0.075], [0.05, 1.0]];
        for (row, e) in out.frames.rows().zip(expect) {
            assert!((row[0] - e[0]).abs() < 1e-12 && (row[1] - e[1]).abs() < 1e-12);
        }
        assert!((out.carried_density.0[0] - 0.8).abs() < 1e-12);
        assert!((out.carried_density.0[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identity_at_or_below_target() {
        let (seq, d) = random_seq(750, 3, 1);
        let out = iterative_fusion(&seq, &d, 750, &FusionOptions::default()).unwrap();
        assert_eq!(out.frames, seq);
        assert_eq!(out.provenance, (0..750).map(|j| j..j + 1).collect::<Vec<_>>());
        assert_eq!(out.carried_density, d);
    }

    #[test]
    fn errors() {
        let (seq, d) = random_seq(10, 2, 1);
        assert!(iterative_fusion(&seq, &d, 0, &FusionOptions::default()).is_err());
        assert!(iterative_fusion(&seq, &DensityVector(vec![0.5; 9]), 3, &FusionOptions::default()).is_err());
        assert!(matches!(baseline_mostsim(&seq, 11), Err(Error::TargetTooLong { .. })));
        assert!(matches!(single_shot_fusion(&seq, &d, 11), Err(Error::TargetTooLong { .. })));
    }

    #[test]
    fn recompute_hook_is_called_per_iteration() {
        use std::sync::atomic::{AtomicUsize, Ordering};
        let (seq, d) = random_seq(64, 3, 2);
        let calls = AtomicUsize::new(0);
        let f = |s: &FrameSequence<f64>| {
            calls.fetch_add(1, Ordering::SeqCst);
            Ok(DensityVector(vec![0.5; s.len()]))
        };
        let opts = FusionOptions {
            recompute_density: Some(&f),
        };
        let out = iterative_fusion(&seq, &d, 5, &opts).unwrap();
        assert_eq!(out.frames.len(), 5);
        assert_eq!(calls.load(Ordering::SeqCst), build_schedule(64, 5).unwrap().len());
        assert_eq!(out.carried_density.0, vec![0.5; 5]);
    }

    #[test]
    fn single_shot_equals_iterative_when_schedule_has_one_step() {
        let (seq, d) = random_seq(30, 4, 3);
        let a = single_shot_fusion(&seq, &d, 16).unwrap();
        let b = iterative_fusion(&seq, &d, 16, &FusionOptions::default()).unwrap();
        assert_eq!(a, b);
        let c = single_shot_fusion(&seq, &d, 30).unwrap();
        assert_eq!(c.frames, seq);
    }

    #[test]
    fn single_shot_t16_l3_has_exact_length() {
        let (seq, d) = random_seq(16, 3, 4);
        let a = single_shot_fusion(&seq, &d, 3).unwrap();
        let b = iterative_fusion(&seq, &d, 3, &FusionOptions::default()).unwrap();
        assert_eq!(a.frames.len(), 3);
        assert_eq!(b.frames.len(), 3);
    }

    #[test]
    fn constant_input_stays_constant() {
        let seq = FrameSequence::<f32>::from_rows(&vec![[0.25f32, -1.5, 3.0]; 97]).unwrap();
        let d = DensityVector((0..97).map(|j| (j % 7) as f32 / 7.0).collect());
        for out in [
            iterative_fusion(&seq, &d, 10, &FusionOptions::default()).unwrap(),
            baseline_mostsim(&seq, 10).unwrap(),
            single_shot_fusion(&seq, &d, 10).unwrap(),
        ] {
            assert_eq!(out.frames.len(), 10);
            for row in out.frames.rows() {
                for (a, b) in row.iter().zip([0.25f32, -1.5, 3.0]) {
                    assert!((a - b).abs() <= 1e-6 * b.abs().max(1.0));
                }
            }
        }
    }

    proptest! {
        #[test]
        fn lengths_and_provenance(len in 1usize..200, target in 1usize..80, seed in any::<u64>()) {
            let (seq, d) = random_seq(len, 2, seed);
            let out = iterative_fusion(&seq, &d, target, &FusionOptions::default()).unwrap();
            prop_assert_eq!(out.frames.len(), len.min(target));
            prop_assert_eq!(out.provenance.len(), out.frames.len());
            prop_assert_eq!(out.provenance[0].start, 0);
            prop_assert_eq!(out.provenance.last().unwrap().end, len);
            for w in out.provenance.windows(2) {
                prop_assert_eq!(w[0].end, w[1].start);
            }
            // Summed densities are conserved.
            let before: f64 = d.0.iter().sum();
            let after: f64 = out.carried_density.0.iter().sum();
            prop_assert!((before - after).abs() < 1e-9);
            // Fusing again at the same target changes nothing.
            let again = iterative_fusion(&out.frames, &out.carried_density, target, &FusionOptions::default()).unwrap();
            prop_assert_eq!(&again.frames, &out.frames);
        }

        #[test]
        fn uniform_density_matches_mostsim(len in 2usize..120, target in 1usize..40, seed in any::<u64>(), c in 0.01f64..1.0) {
            let (seq, _) = random_seq(len, 3, seed);
            let target = target.min(len);
            let a = iterative_fusion(&seq, &DensityVector(vec![c; len]), target, &FusionOptions::default()).unwrap();
            let b = baseline_mostsim(&seq, target).unwrap();
            prop_assert_eq!(&a.provenance, &b.provenance);
            for (x, y) in a.frames.as_slice().iter().zip(b.frames.as_slice()) {
                prop_assert!((x - y).abs() <= 1e-6);
            }
        }
    }
}
