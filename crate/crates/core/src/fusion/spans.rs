use std::cmp::Ordering;
use std::ops::Range;

use super::SimilarityVector;
use crate::{DensityVector, Error, FrameSequence, Result, Scalar};

/// Spans whose total density is below this merge with uniform weights.
pub const WEIGHT_EPS: f64 = 1e-8;

/// Ordered half-open intervals tiling `[0, T)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpanPartition {
    pub spans: Vec<Range<usize>>,
}

impl SpanPartition {
    pub fn singletons(len: usize) -> Self {
        Self {
            spans: (0..len).map(|j| j..j + 1).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.spans.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spans.is_empty()
    }

    /// Number of selected pairs this partition encodes: `sum(len - 1)`.
    pub fn merged_pairs(&self) -> usize {
        self.spans.iter().map(|s| s.len() - 1).sum()
    }

    /// Checks the spans are non-empty, contiguous and cover `[0, total)`.
    pub fn validate(&self, total: usize) -> Result<()> {
        let mut next = 0;
        for (i, s) in self.spans.iter().enumerate() {
            if s.start != next {
                return Err(Error::InvalidPartition(format!(
                    "span {i} starts at {} but the previous one ended at {next}",
                    s.start
                )));
            }
            if s.end <= s.start {
                return Err(Error::InvalidPartition(format!("span {i} is empty")));
            }
            next = s.end;
        }
        if next != total {
            return Err(Error::InvalidPartition(format!("spans cover [0, {next}) but T = {total}")));
        }
        Ok(())
    }
}

/// Indices of the `r` largest similarities, smaller index first on ties,
/// returned in ascending order.
pub fn select_pairs<S: Scalar>(sims: &SimilarityVector<S>, r: usize) -> Result<Vec<usize>> {
    let n = sims.len();
    if r > n {
        return Err(Error::TooManyPairs {
            requested: r,
            available: n,
        });
    }
    if r == 0 {
        return Ok(Vec::new());
    }
    let e = sims.as_slice();
    let mut idx: Vec<usize> = (0..n).collect();
    if r < n {
        let rank = |&a: &usize, &b: &usize| -> Ordering {
            e[b].partial_cmp(&e[a]).unwrap_or(Ordering::Equal).then(a.cmp(&b))
        };
        idx.select_nth_unstable_by(r - 1, rank);
        idx.truncate(r);
    }
    idx.sort_unstable();
    Ok(idx)
}

/// Turns selected pair indices into a partition: a run of consecutive pairs
/// `j, j+1, ..., j+k-1` becomes the span `[j, j+k+1)`; every other frame is a
/// singleton.
pub fn group_spans(pairs: &[usize], total: usize) -> Result<SpanPartition> {
    let mut joined = vec![false; total.saturating_sub(1)];
    for &p in pairs {
        if p + 1 >= total {
            return Err(Error::InvalidPartition(format!(
                "pair index {p} out of range for {total} frames"
            )));
        }
        joined[p] = true;
    }
    let mut spans = Vec::with_capacity(total - pairs.len().min(total));
    let mut start = 0;
    while start < total {
        let mut end = start + 1;
        while end < total && joined[end - 1] {
            end += 1;
        }
        spans.push(start..end);
        start = end;
    }
    Ok(SpanPartition { spans })
}

/// Merged frames, their densities and per-frame provenance.
pub type Merged<S> = (FrameSequence<S>, DensityVector<S>, Vec<Range<usize>>);

/// Collapses each span into one frame `sum_j w_j h_j` with `w_j = d_j / sum(d)`
/// (uniform weights when `sum(d) < WEIGHT_EPS`). The merged frame carries the
/// summed density. Returns the new frames, densities and the spans as
/// provenance over the input indices.
pub fn merge_spans<S: Scalar>(
    seq: &FrameSequence<S>,
    density: &DensityVector<S>,
    spans: &SpanPartition,
) -> Result<Merged<S>> {
    if density.len() != seq.len() {
        return Err(Error::DimensionMismatch {
            what: "density length",
            expected: seq.len(),
            actual: density.len(),
        });
    }
    spans.validate(seq.len())?;
    let dim = seq.dim();
    let d = density.as_slice();
    let mut data = Vec::with_capacity(spans.len() * dim);
    let mut carried = Vec::with_capacity(spans.len());
    for span in &spans.spans {
        if span.len() == 1 {
            data.extend_from_slice(seq.row(span.start));
            carried.push(d[span.start]);
            continue;
        }
        let total: S = d[span.clone()].iter().copied().sum();
        let uniform = total < S::of(WEIGHT_EPS);
        let base = data.len();
        data.resize(base + dim, S::zero());
        let out = &mut data[base..];
        for j in span.clone() {
            let w = if uniform {
                S::one() / S::of(span.len() as f64)
            } else {
                d[j] / total
            };
            for (o, &x) in out.iter_mut().zip(seq.row(j)) {
                *o += w * x;
            }
        }
        carried.push(total);
    }
    let mut merged = FrameSequence::from_parts(data, dim);
    merged.id = seq.id.clone();
    merged.frame_rate_hz = seq.frame_rate_hz;
    Ok((merged, DensityVector(carried), spans.spans.clone()))
}
