use crate::ctc::{content_density, greedy_decode};
use crate::frameio::Dataset;
use crate::{CtcDecoder, Fuser, FrameSequence, LabelSequence, Result, Scalar};

/// Token-level Levenshtein distance with unit insert, delete and substitute costs.
pub fn edit_distance(a: &LabelSequence, b: &LabelSequence) -> usize {
    let (a, b) = (a.tokens(), b.tokens());
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, &x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, &y) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(x != y);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// `edit_distance(hyp, reference) / max(1, |reference|)`.
pub fn cer(hyp: &LabelSequence, reference: &LabelSequence) -> f64 {
    edit_distance(hyp, reference) as f64 / reference.len().max(1) as f64
}

/// Compresses `seq` to `target` with `fuser`, greedy-decodes the result with
/// the same decoder and scores it against `label`.
pub fn retention_cer<S: Scalar>(
    decoder: &CtcDecoder<S>,
    seq: &FrameSequence<S>,
    label: &LabelSequence,
    fuser: Fuser,
    target: usize,
    seed: u64,
) -> Result<f64> {
    let density = content_density(&decoder.forward(seq)?);
    let condensed = fuser.apply(seq, &density, target, seed)?;
    let hyp = greedy_decode(&decoder.forward(&condensed.frames)?);
    Ok(cer(&hyp, label))
}

/// Mean per-sequence CER of uncompressed greedy decoding.
pub fn mean_greedy_cer<S: Scalar>(decoder: &CtcDecoder<S>, data: &Dataset) -> Result<f64> {
    if data.is_empty() {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for ex in &data.examples {
        let hyp = greedy_decode(&decoder.forward(&ex.seq.cast::<S>())?);
        total += cer(&hyp, &ex.label);
    }
    Ok(total / data.len() as f64)
}
