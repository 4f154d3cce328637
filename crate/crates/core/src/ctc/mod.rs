//! CTC objective, decoding, content density and the decoder head.
//!
//! Blank is class 0 everywhere. Posterior grids hold per-frame
//! log-probabilities over `V + 1` classes.

mod decoder;
mod loss;
mod train;

pub use decoder::{load_checkpoint, save_checkpoint, CtcDecoder, DecoderGrads, CTD_MAGIC};
pub use loss::{
    ctc_grad, ctc_log_loss, ctc_loss_and_grad, enumerate_alignments_oracle, min_frames,
    ENUMERATION_LIMIT,
};
pub use train::{train_ctc_decoder, write_train_log, TrainConfig, TrainLogEntry, TrainOutcome};

use crate::{Error, LabelSequence, Result, Scalar};

pub const BLANK: u32 = 0;

/// Values at or below this are treated as `log(0)`.
pub(crate) const LOG_ZERO_CUTOFF: f64 = -1e30;

#[inline]
pub(crate) fn is_log_zero<S: Scalar>(x: S) -> bool {
    x <= S::of(LOG_ZERO_CUTOFF)
}

/// `log(exp(a) + exp(b))` with `log(0)` absorbing.
#[inline]
pub(crate) fn log_add<S: Scalar>(a: S, b: S) -> S {
    match (is_log_zero(a), is_log_zero(b)) {
        (true, true) => S::neg_infinity(),
        (true, false) => b,
        (false, true) => a,
        (false, false) => {
            let (hi, lo) = if a > b { (a, b) } else { (b, a) };
            hi + (lo - hi).exp().ln_1p()
        }
    }
}

/// Row-wise log-softmax of a `rows x cols` matrix, in place.
pub(crate) fn log_softmax_rows<S: Scalar>(data: &mut [S], cols: usize) {
    for row in data.chunks_exact_mut(cols) {
        let max = row.iter().copied().fold(S::neg_infinity(), S::max);
        let sum: S = row.iter().map(|&x| (x - max).exp()).sum();
        let lse = max + sum.ln();
        for x in row.iter_mut() {
            *x -= lse;
        }
    }
}

/// Per-frame log-probabilities, `frames x classes`, blank in column 0.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorGrid<S> {
    log_probs: Vec<S>,
    frames: usize,
    classes: usize,
}

impl<S: Scalar> PosteriorGrid<S> {
    /// Applies a row-wise log-softmax to raw logits.
    pub fn from_logits(mut logits: Vec<S>, classes: usize) -> Result<Self> {
        Self::check_shape(logits.len(), classes)?;
        if let Some(pos) = logits.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / classes,
                col: pos % classes,
            });
        }
        log_softmax_rows(&mut logits, classes);
        Ok(Self {
            frames: logits.len() / classes,
            log_probs: logits,
            classes,
        })
    }

    /// Wraps log-probabilities after checking each row normalizes. Entries
    /// may be `-inf` (probability zero).
    pub fn from_log_probs(log_probs: Vec<S>, classes: usize) -> Result<Self> {
        Self::check_shape(log_probs.len(), classes)?;
        let tol = 1e-6f64.max(8.0 * S::epsilon().as_f64() * classes as f64);
        for (j, row) in log_probs.chunks_exact(classes).enumerate() {
            if let Some(c) = row.iter().position(|v| v.is_nan() || *v > S::zero()) {
                return Err(Error::NonFinite { row: j, col: c });
            }
            let sum: f64 = row.iter().map(|v| v.as_f64().exp()).sum();
            if (sum - 1.0).abs() > tol {
                return Err(Error::Config(format!(
                    "posterior row {j} sums to {sum}, not 1"
                )));
            }
        }
        Ok(Self {
            frames: log_probs.len() / classes,
            log_probs,
            classes,
        })
    }

    /// Builds a grid from probabilities (each row summing to one).
    pub fn from_probs<R: AsRef<[S]>>(rows: &[R]) -> Result<Self> {
        let classes = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut lp = Vec::with_capacity(rows.len() * classes);
        for r in rows {
            let r = r.as_ref();
            if r.len() != classes {
                return Err(Error::DimensionMismatch {
                    what: "posterior row width",
                    expected: classes,
                    actual: r.len(),
                });
            }
            lp.extend(r.iter().map(|&p| p.ln()));
        }
        Self::from_log_probs(lp, classes)
    }

    fn check_shape(len: usize, classes: usize) -> Result<()> {
        if classes < 2 {
            return Err(Error::Config("a posterior grid needs blank plus at least one token".into()));
        }
        if !len.is_multiple_of(classes) {
            return Err(Error::DimensionMismatch {
                what: "grid data length is not a multiple of classes",
                expected: classes,
                actual: len % classes,
            });
        }
        Ok(())
    }

    #[inline]
    pub fn frames(&self) -> usize {
        self.frames
    }

    /// `V + 1`.
    #[inline]
    pub fn classes(&self) -> usize {
        self.classes
    }

    /// `V`, the number of non-blank tokens.
    #[inline]
    pub fn vocab_size(&self) -> usize {
        self.classes - 1
    }

    #[inline]
    pub fn row(&self, j: usize) -> &[S] {
        &self.log_probs[j * self.classes..(j + 1) * self.classes]
    }

    #[inline]
    pub fn log_prob(&self, j: usize, class: usize) -> S {
        self.log_probs[j * self.classes + class]
    }

    pub fn as_slice(&self) -> &[S] {
        &self.log_probs
    }

    /// Reorders frames; `order[i]` is the source frame of output frame `i`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        let mut lp = Vec::with_capacity(order.len() * self.classes);
        for &j in order {
            lp.extend_from_slice(self.row(j));
        }
        Self {
            frames: order.len(),
            log_probs: lp,
            classes: self.classes,
        }
    }
}

/// Per-frame content density, each entry in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityVector<S>(pub Vec<S>);

impl<S: Scalar> DensityVector<S> {
    pub fn uniform(len: usize, value: S) -> Self {
        Self(vec![value; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[S] {
        &self.0
    }

    pub fn cast<U: Scalar>(&self) -> DensityVector<U> {
        DensityVector(self.0.iter().map(|&v| U::of(v.as_f64())).collect())
    }
}

/// A per-frame path of class ids in `[0, V]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alignment(pub Vec<u32>);

impl Alignment {
    /// Merges adjacent repeats, then drops blanks.
    pub fn collapse(&self) -> LabelSequence {
        let mut out = Vec::new();
        let mut prev = None;
        for &a in &self.0 {
            if Some(a) != prev && a != BLANK {
                out.push(a);
            }
            prev = Some(a);
        }
        LabelSequence::new(out)
    }
}

/// Per-frame argmax; ties go to the lower class id.
pub fn best_path<S: Scalar>(grid: &PosteriorGrid<S>) -> Alignment {
    Alignment(
        (0..grid.frames())
            .map(|j| {
                let row = grid.row(j);
                let mut best = 0;
                for (k, &v) in row.iter().enumerate().skip(1) {
                    if v > row[best] {
                        best = k;
                    }
                }
                best as u32
            })
            .collect(),
    )
}

pub fn greedy_decode<S: Scalar>(grid: &PosteriorGrid<S>) -> LabelSequence {
    best_path(grid).collapse()
}

/// `d_j = 1 - p(blank | h_j)`, the total non-blank probability of frame `j`.
pub fn content_density<S: Scalar>(grid: &PosteriorGrid<S>) -> DensityVector<S> {
    DensityVector(
        (0..grid.frames())
            .map(|j| {
                let d = S::one() - grid.log_prob(j, BLANK as usize).exp();
                d.max(S::zero()).min(S::one())
            })
            .collect(),
    )
}
