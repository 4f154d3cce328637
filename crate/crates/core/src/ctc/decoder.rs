//! One-hidden-layer feed-forward CTC head: `x -> ReLU(x W1 + b1) W2 + b2`.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::PosteriorGrid;
use crate::{Error, FrameSequence, Result, Scalar};

pub const CTD_MAGIC: [u8; 4] = *b"CTD1";

#[derive(Debug, Clone, PartialEq)]
pub struct CtcDecoder<S> {
    input_dim: usize,
    hidden_dim: usize,
    vocab_size: usize,
    /// `D x H`, row-major.
    pub w1: Vec<S>,
    pub b1: Vec<S>,
    /// `H x (V + 1)`, row-major.
    pub w2: Vec<S>,
    pub b2: Vec<S>,
}

/// Gradient buffers shaped like a decoder's parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoderGrads<S> {
    pub w1: Vec<S>,
    pub b1: Vec<S>,
    pub w2: Vec<S>,
    pub b2: Vec<S>,
}

impl<S: Scalar> DecoderGrads<S> {
    pub fn zeros_like(dec: &CtcDecoder<S>) -> Self {
        Self {
            w1: vec![S::zero(); dec.w1.len()],
            b1: vec![S::zero(); dec.b1.len()],
            w2: vec![S::zero(); dec.w2.len()],
            b2: vec![S::zero(); dec.b2.len()],
        }
    }

    pub fn tensors(&self) -> [&[S]; 4] {
        [&self.w1, &self.b1, &self.w2, &self.b2]
    }

    /// `self += other * scale`.
    pub fn add_scaled(&mut self, other: &Self, scale: S) {
        for (dst, src) in [
            (&mut self.w1, &other.w1),
            (&mut self.b1, &other.b1),
            (&mut self.w2, &other.w2),
            (&mut self.b2, &other.b2),
        ] {
            for (d, &s) in dst.iter_mut().zip(src.iter()) {
                *d += s * scale;
            }
        }
    }
}

impl<S: Scalar> CtcDecoder<S> {
    pub fn zeros(input_dim: usize, hidden_dim: usize, vocab_size: usize) -> Self {
        let classes = vocab_size + 1;
        Self {
            input_dim,
            hidden_dim,
            vocab_size,
            w1: vec![S::zero(); input_dim * hidden_dim],
            b1: vec![S::zero(); hidden_dim],
            w2: vec![S::zero(); hidden_dim * classes],
            b2: vec![S::zero(); classes],
        }
    }

    /// Glorot-uniform weights, zero biases.
    pub fn seeded(input_dim: usize, hidden_dim: usize, vocab_size: usize, seed: u64) -> Self {
        let mut dec = Self::zeros(input_dim, hidden_dim, vocab_size);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a1 = (6.0 / (input_dim + hidden_dim) as f64).sqrt();
        let a2 = (6.0 / (hidden_dim + vocab_size + 1) as f64).sqrt();
        dec.w1.iter_mut().for_each(|w| *w = S::of(rng.random_range(-a1..a1)));
        dec.w2.iter_mut().for_each(|w| *w = S::of(rng.random_range(-a2..a2)));
        dec
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden_dim
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn classes(&self) -> usize {
        self.vocab_size + 1
    }

    pub fn tensors(&self) -> [&[S]; 4] {
        [&self.w1, &self.b1, &self.w2, &self.b2]
    }

    pub fn tensors_mut(&mut self) -> [&mut [S]; 4] {
        [&mut self.w1, &mut self.b1, &mut self.w2, &mut self.b2]
    }

    pub fn num_params(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn cast<U: Scalar>(&self) -> CtcDecoder<U> {
        let c = |v: &[S]| v.iter().map(|&x| U::of(x.as_f64())).collect();
        CtcDecoder {
            input_dim: self.input_dim,
            hidden_dim: self.hidden_dim,
            vocab_size: self.vocab_size,
            w1: c(&self.w1),
            b1: c(&self.b1),
            w2: c(&self.w2),
            b2: c(&self.b2),
        }
    }

    fn check_dim(&self, seq: &FrameSequence<S>) -> Result<()> {
        if seq.dim() != self.input_dim {
            return Err(Error::DimensionMismatch {
                what: "frame dimension vs decoder input",
                expected: self.input_dim,
                actual: seq.dim(),
            });
        }
        Ok(())
    }

    /// Returns post-ReLU hidden activations (`T x H`) and logits (`T x (V+1)`).
    pub fn activations(&self, seq: &FrameSequence<S>) -> Result<(Vec<S>, Vec<S>)> {
        self.check_dim(seq)?;
        let (h_dim, classes) = (self.hidden_dim, self.classes());
        let mut hidden = Vec::with_capacity(seq.len() * h_dim);
        let mut logits = Vec::with_capacity(seq.len() * classes);
        let mut h = vec![S::zero(); h_dim];
        let mut z = vec![S::zero(); classes];
        for x in seq.rows() {
            h.copy_from_slice(&self.b1);
            for (i, &xi) in x.iter().enumerate() {
                let w = &self.w1[i * h_dim..(i + 1) * h_dim];
                for (hj, &wj) in h.iter_mut().zip(w) {
                    *hj += xi * wj;
                }
            }
            h.iter_mut().for_each(|v| *v = v.max(S::zero()));
            z.copy_from_slice(&self.b2);
            for (j, &hj) in h.iter().enumerate() {
                if hj == S::zero() {
                    continue;
                }
                let w = &self.w2[j * classes..(j + 1) * classes];
                for (zk, &wk) in z.iter_mut().zip(w) {
                    *zk += hj * wk;
                }
            }
            hidden.extend_from_slice(&h);
            logits.extend_from_slice(&z);
        }
        Ok((hidden, logits))
    }

    /// Framewise log-softmax posteriors.
    pub fn forward(&self, seq: &FrameSequence<S>) -> Result<PosteriorGrid<S>> {
        let (_, logits) = self.activations(seq)?;
        PosteriorGrid::from_logits(logits, self.classes())
    }

    /// Accumulates parameter gradients given `d loss / d logits`.
    pub fn backward(
        &self,
        seq: &FrameSequence<S>,
        hidden: &[S],
        grad_logits: &[S],
        grads: &mut DecoderGrads<S>,
    ) {
        let (h_dim, classes) = (self.hidden_dim, self.classes());
        let mut gh = vec![S::zero(); h_dim];
        for (t, x) in seq.rows().enumerate() {
            let g = &grad_logits[t * classes..(t + 1) * classes];
            let h = &hidden[t * h_dim..(t + 1) * h_dim];
            for (b, &gk) in grads.b2.iter_mut().zip(g) {
                *b += gk;
            }
            for j in 0..h_dim {
                let w = &self.w2[j * classes..(j + 1) * classes];
                if h[j] > S::zero() {
                    let gw = &mut grads.w2[j * classes..(j + 1) * classes];
                    let mut acc = S::zero();
                    for k in 0..classes {
                        gw[k] += h[j] * g[k];
                        acc += w[k] * g[k];
                    }
                    gh[j] = acc;
                } else {
                    gh[j] = S::zero();
                }
            }
            for (b, &v) in grads.b1.iter_mut().zip(&gh) {
                *b += v;
            }
            for (i, &xi) in x.iter().enumerate() {
                let gw = &mut grads.w1[i * h_dim..(i + 1) * h_dim];
                for (gwj, &ghj) in gw.iter_mut().zip(&gh) {
                    *gwj += xi * ghj;
                }
            }
        }
    }
}

/// Writes `CTD1`, then `D`, `H`, `V` as u32 LE, then `W1, b1, W2, b2` as f32 LE.
pub fn save_checkpoint<S: Scalar>(dec: &CtcDecoder<S>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = Vec::with_capacity(16 + 4 * dec.num_params());
    out.extend_from_slice(&CTD_MAGIC);
    for v in [dec.input_dim, dec.hidden_dim, dec.vocab_size] {
        let v = u32::try_from(v).map_err(|_| Error::Config("decoder dimension exceeds u32".into()))?;
        out.extend_from_slice(&v.to_le_bytes());
    }
    for t in dec.tensors() {
        for &x in t {
            let x = x.as_f64() as f32;
            if !x.is_finite() {
                return Err(Error::NonFinite { row: 0, col: 0 });
            }
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<CtcDecoder<f32>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() < 16 {
        return Err(Error::Truncated {
            path: path.to_path_buf(),
            expected: 16,
            actual: bytes.len() as u64,
        });
    }
    if bytes[..4] != CTD_MAGIC {
        return Err(Error::BadMagic {
            path: path.to_path_buf(),
            expected: CTD_MAGIC,
            found: bytes[..4].try_into().unwrap(),
        });
    }
    let u = |i: usize| u32::from_le_bytes(bytes[4 + 4 * i..8 + 4 * i].try_into().unwrap()) as usize;
    let (d, h, v) = (u(0), u(1), u(2));
    let mut dec = CtcDecoder::<f32>::zeros(d, h, v);
    let expected = 16 + 4 * dec.num_params() as u64;
    if bytes.len() as u64 != expected {
        return Err(Error::Truncated {
            path: path.to_path_buf(),
            expected,
            actual: bytes.len() as u64,
        });
    }
    let mut floats = bytes[16..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()));
    for t in dec.tensors_mut() {
        for x in t.iter_mut() {
            *x = floats.next().unwrap();
            if !x.is_finite() {
                return Err(Error::format(path, "non-finite parameter"));
            }
        }
    }
    Ok(dec)
}
