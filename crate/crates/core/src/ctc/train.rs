//! Minibatch Adam training of the decoder head on the mean CTC loss.

use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ctc_loss_and_grad, min_frames, CtcDecoder, DecoderGrads, PosteriorGrid};
use crate::frameio::Dataset;
use crate::seed::derive_seed;
use crate::{Error, FrameSequence, LabelSequence, Result, Scalar};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub hidden_dim: usize,
    pub learning_rate: f64,
    /// Total optimizer steps; also the cosine schedule period.
    pub steps: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Record the loss every this many steps (the last step is always logged).
    pub log_every: usize,
    /// Initial output bias of the blank class. Negative values start training
    /// away from the all-blank solution that long runs of identical frames
    /// otherwise settle into.
    pub blank_bias: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            hidden_dim: 64,
            learning_rate: 1e-2,
            steps: 2000,
            batch_size: 16,
            seed: 0,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            log_every: 10,
            blank_bias: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainLogEntry {
    pub step: usize,
    pub loss: f64,
    pub lr: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<S> {
    pub decoder: CtcDecoder<S>,
    pub log: Vec<TrainLogEntry>,
}

struct Adam<S> {
    m: Vec<Vec<S>>,
    v: Vec<Vec<S>>,
    t: i32,
}

impl<S: Scalar> Adam<S> {
    fn new(dec: &CtcDecoder<S>) -> Self {
        let zeros = || dec.tensors().iter().map(|t| vec![S::zero(); t.len()]).collect();
        Self {
            m: zeros(),
            v: zeros(),
            t: 0,
        }
    }

    fn step(&mut self, dec: &mut CtcDecoder<S>, grads: &DecoderGrads<S>, lr: f64, cfg: &TrainConfig) {
        self.t += 1;
        let (b1, b2) = (S::of(cfg.beta1), S::of(cfg.beta2));
        let bc1 = S::of(1.0 - cfg.beta1.powi(self.t));
        let bc2 = S::of(1.0 - cfg.beta2.powi(self.t));
        let (lr, eps) = (S::of(lr), S::of(cfg.eps));
        for (ti, (param, grad)) in dec.tensors_mut().into_iter().zip(grads.tensors()).enumerate() {
            let (m, v) = (&mut self.m[ti], &mut self.v[ti]);
            for i in 0..param.len() {
                let g = grad[i];
                m[i] = b1 * m[i] + (S::one() - b1) * g;
                v[i] = b2 * v[i] + (S::one() - b2) * g * g;
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                param[i] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
    }
}

/// Cosine decay from `base` to zero over `total` steps.
fn cosine_lr(base: f64, step: usize, total: usize) -> f64 {
    base * 0.5 * (1.0 + (std::f64::consts::PI * step as f64 / total.max(1) as f64).cos())
}

/// Batches of length-sorted examples, so each batch holds similar `T`.
fn length_buckets(lengths: &[usize], batch_size: usize) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..lengths.len()).collect();
    order.sort_by_key(|&i| (lengths[i], i));
    order.chunks(batch_size).map(|c| c.to_vec()).collect()
}

fn example_grad<S: Scalar>(
    dec: &CtcDecoder<S>,
    seq: &FrameSequence<S>,
    label: &LabelSequence,
) -> Result<(S, DecoderGrads<S>)> {
    let (hidden, logits) = dec.activations(seq)?;
    let grid = PosteriorGrid::from_logits(logits, dec.classes())?;
    let (loss, grad_logits) = ctc_loss_and_grad(&grid, label)?;
    let mut grads = DecoderGrads::zeros_like(dec);
    dec.backward(seq, &hidden, &grad_logits, &mut grads);
    Ok((loss, grads))
}

/// Trains a fresh decoder on `data`. Per-example gradients may be computed
/// on any number of threads; they are always summed in batch order, so the
/// result is bit-identical for a given seed.
pub fn train_ctc_decoder<S: Scalar>(data: &Dataset, cfg: &TrainConfig) -> Result<TrainOutcome<S>> {
    if data.is_empty() {
        return Err(Error::Config("training set is empty".into()));
    }
    if cfg.batch_size == 0 || cfg.hidden_dim == 0 {
        return Err(Error::Config("batch_size and hidden_dim must be positive".into()));
    }
    if !(cfg.learning_rate >= 0.0 && cfg.learning_rate.is_finite()) {
        return Err(Error::Config("learning_rate must be finite and >= 0".into()));
    }
    let dim = data.examples[0].seq.dim();
    let mut seqs = Vec::with_capacity(data.len());
    for ex in &data.examples {
        ex.label.validate(data.vocab_size)?;
        if ex.seq.dim() != dim {
            return Err(Error::DimensionMismatch {
                what: "training frame dimension",
                expected: dim,
                actual: ex.seq.dim(),
            });
        }
        let need = min_frames(&ex.label).max(1);
        if ex.seq.len() < need {
            return Err(Error::InfeasibleLabel {
                label_len: ex.label.len(),
                frames: ex.seq.len(),
                required: need,
            });
        }
        seqs.push(ex.seq.cast::<S>());
    }

    let mut dec = CtcDecoder::<S>::seeded(dim, cfg.hidden_dim, data.vocab_size, derive_seed(cfg.seed, "init"));
    dec.b2[super::BLANK as usize] = S::of(cfg.blank_bias);
    let mut adam = Adam::new(&dec);
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, "batches"));
    let lengths: Vec<usize> = seqs.iter().map(|s| s.len()).collect();
    let buckets = length_buckets(&lengths, cfg.batch_size);
    let mut order: Vec<usize> = (0..buckets.len()).collect();
    let mut log = Vec::new();

    for step in 0..cfg.steps {
        let pos = step % buckets.len();
        if pos == 0 {
            order.shuffle(&mut rng);
        }
        let batch = &buckets[order[pos]];
        let results: Vec<Result<(S, DecoderGrads<S>)>> = batch
            .par_iter()
            .map(|&i| example_grad(&dec, &seqs[i], &data.examples[i].label))
            .collect();

        let scale = S::one() / S::of(batch.len() as f64);
        let mut total = DecoderGrads::zeros_like(&dec);
        let mut loss = 0.0f64;
        for r in results {
            let (l, g) = match r {
                Ok(v) => v,
                Err(Error::NonFinite { .. }) => return Err(Error::Diverged { step, loss: f64::NAN }),
                Err(e) => return Err(e),
            };
            loss += l.as_f64();
            total.add_scaled(&g, scale);
        }
        loss /= batch.len() as f64;
        if !loss.is_finite() {
            return Err(Error::Diverged { step, loss });
        }
        let lr = cosine_lr(cfg.learning_rate, step, cfg.steps);
        if step % cfg.log_every.max(1) == 0 || step + 1 == cfg.steps {
            log.push(TrainLogEntry { step, loss, lr });
        }
        adam.step(&mut dec, &total, lr, cfg);
    }
    Ok(TrainOutcome { decoder: dec, log })
}

/// One JSON object per line.
pub fn write_train_log(log: &[TrainLogEntry], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    for e in log {
        serde_json::to_writer(&mut buf, e).expect("log entry serializes");
        buf.write_all(b"\n").expect("write to vec");
    }
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}
