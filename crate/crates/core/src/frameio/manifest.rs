//! JSONL manifests, label files and vocab files.
//!
//! A manifest's first line is a header object (`vocab_size`, `embed_dim`,
//! `seed`); every following line is one entry. Entry paths are relative to
//! the manifest's directory.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::synth::{SynthTrace, SyntheticData};
use super::{read_fseq, write_fseq, FrameSequence, LabelSequence};
use crate::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.jsonl";
pub const VOCAB_FILE: &str = "vocab.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub sequence: PathBuf,
    pub labels: PathBuf,
    pub duration_frames: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct ManifestHeader {
    vocab_size: usize,
    embed_dim: usize,
    seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetManifest {
    pub vocab_size: usize,
    pub embed_dim: usize,
    pub seed: u64,
    pub entries: Vec<ManifestEntry>,
}

/// One line of a label file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelRecord {
    pub id: String,
    pub tokens: LabelSequence,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<SynthTrace>,
}

fn json_line<T: Serialize>(value: &T) -> String {
    // Plain structs of strings and integers always serialize.
    serde_json::to_string(value).expect("serializable record")
}

impl DatasetManifest {
    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = String::new();
        out.push_str(&json_line(&ManifestHeader {
            vocab_size: self.vocab_size,
            embed_dim: self.embed_dim,
            seed: self.seed,
        }));
        out.push('\n');
        for e in &self.entries {
            out.push_str(&json_line(e));
            out.push('\n');
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut lines = BufReader::new(file).lines();
        let header_line = lines
            .next()
            .ok_or_else(|| Error::format(path, "empty manifest"))?
            .map_err(|e| Error::io(path, e))?;
        let header: ManifestHeader = serde_json::from_str(&header_line).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })?;
        if header.vocab_size == 0 {
            return Err(Error::format(path, "vocab_size must be at least 1"));
        }
        let mut entries = Vec::new();
        for line in lines {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            entries.push(serde_json::from_str(&line).map_err(|source| Error::Json {
                path: path.to_path_buf(),
                source,
            })?);
        }
        Ok(Self {
            vocab_size: header.vocab_size,
            embed_dim: header.embed_dim,
            seed: header.seed,
            entries,
        })
    }
}

pub fn write_labels(record: &LabelRecord, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, json_line(record) + "\n").map_err(|e| Error::io(path, e))
}

/// Reads a label file; every line is one record.
pub fn read_labels(path: impl AsRef<Path>) -> Result<Vec<LabelRecord>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            serde_json::from_str(l).map_err(|source| Error::Json {
                path: path.to_path_buf(),
                source,
            })
        })
        .collect()
}

/// Writes `{"1": "t1", ...}` for ids `1..=vocab_size`.
pub fn write_vocab(vocab_size: usize, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let map: BTreeMap<u32, String> = (1..=vocab_size as u32).map(|v| (v, format!("t{v}"))).collect();
    let text = serde_json::to_string_pretty(&map).expect("vocab map serializes");
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

impl SyntheticData {
    /// Writes every sequence, label file, the manifest and the vocab into `dir`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<PathBuf> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for ((entry, seq), label) in self.manifest.entries.iter().zip(&self.sequences).zip(&self.labels) {
            write_fseq(seq, dir.join(&entry.sequence))?;
            write_labels(label, dir.join(&entry.labels))?;
        }
        let manifest_path = dir.join(MANIFEST_FILE);
        self.manifest.write(&manifest_path)?;
        write_vocab(self.manifest.vocab_size, dir.join(VOCAB_FILE))?;
        Ok(manifest_path)
    }
}

#[derive(Debug, Clone)]
pub struct Example {
    pub seq: FrameSequence<f32>,
    pub label: LabelSequence,
}

/// Sequences and transcripts held in memory.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub vocab_size: usize,
    pub examples: Vec<Example>,
}

impl Dataset {
    /// Loads and validates every file a manifest references.
    pub fn load(manifest_path: impl AsRef<Path>) -> Result<Self> {
        let manifest_path = manifest_path.as_ref();
        let manifest = DatasetManifest::read(manifest_path)?;
        let base = manifest_path.parent().unwrap_or(Path::new("."));
        let mut examples = Vec::with_capacity(manifest.entries.len());
        for entry in &manifest.entries {
            let seq_path = base.join(&entry.sequence);
            let seq = read_fseq(&seq_path)?.with_id(entry.id.clone());
            if seq.len() != entry.duration_frames {
                return Err(Error::format(
                    &seq_path,
                    format!(
                        "manifest says {} frames, file holds {}",
                        entry.duration_frames,
                        seq.len()
                    ),
                ));
            }
            if manifest.embed_dim != 0 && seq.dim() != manifest.embed_dim {
                return Err(Error::format(
                    &seq_path,
                    format!("dimension {} differs from manifest {}", seq.dim(), manifest.embed_dim),
                ));
            }
            let label_path = base.join(&entry.labels);
            let record = read_labels(&label_path)?
                .into_iter()
                .next()
                .ok_or_else(|| Error::format(&label_path, "empty label file"))?;
            record
                .tokens
                .validate(manifest.vocab_size)
                .map_err(|e| Error::format(&label_path, e.to_string()))?;
            examples.push(Example {
                seq,
                label: record.tokens,
            });
        }
        Ok(Self {
            vocab_size: manifest.vocab_size,
            examples,
        })
    }

    pub fn from_synthetic(data: &SyntheticData) -> Self {
        Self {
            vocab_size: data.manifest.vocab_size,
            examples: data
                .sequences
                .iter()
                .zip(&data.labels)
                .map(|(seq, rec)| Example {
                    seq: seq.clone(),
                    label: rec.tokens.clone(),
                })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    /// Splits by index into train/dev/test with the given fractions for the
    /// first two; the test split takes the remainder.
    pub fn split(&self, train_frac: f64, dev_frac: f64) -> (Dataset, Dataset, Dataset) {
        let n = self.examples.len();
        let n_train = ((n as f64) * train_frac).round() as usize;
        let n_dev = (((n as f64) * dev_frac).round() as usize).min(n - n_train.min(n));
        let n_train = n_train.min(n);
        let part = |r: std::ops::Range<usize>| Dataset {
            vocab_size: self.vocab_size,
            examples: self.examples[r].to_vec(),
        };
        (
            part(0..n_train),
            part(n_train..n_train + n_dev),
            part(n_train + n_dev..n),
        )
    }
}
