use crate::{Error, FrameSequence, Result, Scalar};

/// Frames with an L2 norm below this score 0 against their neighbours.
pub const NORM_EPS: f64 = 1e-8;

/// `e[j]` is the cosine similarity of frames `j` and `j + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityVector<S>(pub Vec<S>);

impl<S> SimilarityVector<S> {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[S] {
        &self.0
    }
}

pub fn adjacent_similarity<S: Scalar>(seq: &FrameSequence<S>) -> Result<SimilarityVector<S>> {
    if seq.len() < 2 {
        return Err(Error::TooShort {
            needed: 2,
            actual: seq.len(),
        });
    }
    let eps = S::of(NORM_EPS);
    let norms: Vec<S> = seq
        .rows()
        .map(|r| r.iter().map(|&x| x * x).sum::<S>().sqrt())
        .collect();
    let sims = (0..seq.len() - 1)
        .map(|j| {
            let (na, nb) = (norms[j], norms[j + 1]);
            if na < eps || nb < eps {
                return S::zero();
            }
            let dot: S = seq.row(j).iter().zip(seq.row(j + 1)).map(|(&a, &b)| a * b).sum();
            (dot / (na * nb)).max(-S::one()).min(S::one())
        })
        .collect();
    Ok(SimilarityVector(sims))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    #[allow(clippy::approx_constant)]
    fn closed_forms() {
        let s = FrameSequence::<f64>::from_rows(&[[2.0, 2.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]]).unwrap();
        let e = adjacent_similarity(&s).unwrap();
        assert!((e.0[0] - 1.0).abs() < 1e-15);
        assert!((e.0[1] - 0.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(e.0[2], 0.0);

        let s = FrameSequence::<f64>::from_rows(&[[1.0, 0.0], [1.0, 1.0]]).unwrap();
        assert!((adjacent_similarity(&s).unwrap().0[0] - 0.70711).abs() < 1e-5);
    }

    #[test]
    fn near_zero_frames_are_neutral() {
        let s = FrameSequence::<f32>::from_rows(&[[1.0, 0.0], [1e-10, 0.0], [0.0, 0.0]]).unwrap();
        assert_eq!(adjacent_similarity(&s).unwrap().0, vec![0.0, 0.0]);
    }

    #[test]
    fn needs_two_frames() {
        let s = FrameSequence::<f64>::from_rows(&[[1.0]]).unwrap();
        assert!(matches!(adjacent_similarity(&s), Err(Error::TooShort { .. })));
    }

    proptest! {
        #[test]
        fn bounded(data in prop::collection::vec(-1e3f32..1e3, 3 * 10)) {
            let s = FrameSequence::new(data, 3).unwrap();
            for e in adjacent_similarity(&s).unwrap().0 {
                prop_assert!((-1.0..=1.0).contains(&e));
            }
        }
    }
}
