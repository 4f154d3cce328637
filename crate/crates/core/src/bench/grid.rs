use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::cost::{estimate_cost, CostModel};
use super::metrics::cer;
use crate::ctc::{content_density, greedy_decode};
use crate::frameio::Dataset;
use crate::{CtcDecoder, DensityVector, Error, Fuser, FrameSequence, Result, Scalar};

/// A grid target: either an absolute frame count or a fraction `T / k` of
/// each sequence's own length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TargetLength {
    Absolute(usize),
    Fraction(usize),
}

impl TargetLength {
    /// Target for a sequence of `frames` frames, never below 1.
    pub fn resolve(self, frames: usize) -> usize {
        match self {
            TargetLength::Absolute(n) => n.max(1),
            TargetLength::Fraction(k) => (frames / k.max(1)).max(1),
        }
    }

    /// True when the target is below the input length for every sequence
    /// long enough to compress.
    pub fn compresses(self) -> bool {
        !matches!(self, TargetLength::Fraction(1))
    }
}

impl fmt::Display for TargetLength {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TargetLength::Absolute(n) => write!(f, "{n}"),
            TargetLength::Fraction(1) => write!(f, "T"),
            TargetLength::Fraction(k) => write!(f, "T/{k}"),
        }
    }
}

impl FromStr for TargetLength {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Config(format!("bad target length {s:?}; use N, T or T/k"));
        if s == "T" {
            return Ok(TargetLength::Fraction(1));
        }
        if let Some(k) = s.strip_prefix("T/") {
            let k: usize = k.parse().map_err(|_| bad())?;
            return if k == 0 { Err(bad()) } else { Ok(TargetLength::Fraction(k)) };
        }
        match s.parse::<usize>() {
            Ok(n) if n > 0 => Ok(TargetLength::Absolute(n)),
            _ => Err(bad()),
        }
    }
}

impl Serialize for TargetLength {
    fn serialize<Z: Serializer>(&self, s: Z) -> std::result::Result<Z::Ok, Z::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for TargetLength {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub fusers: Vec<Fuser>,
    pub targets: Vec<TargetLength>,
    /// Seeds the random baseline.
    pub seed: u64,
    pub cost: CostModel,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            fusers: vec![Fuser::Density, Fuser::SingleShot, Fuser::MostSim, Fuser::AvgPool, Fuser::Random],
            targets: [1, 2, 4, 8].into_iter().map(TargetLength::Fraction).collect(),
            seed: 0,
            cost: CostModel::default(),
        }
    }
}

impl Serialize for Fuser {
    fn serialize<Z: Serializer>(&self, s: Z) -> std::result::Result<Z::Ok, Z::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for Fuser {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// Aggregate over all sequences for one `(fuser, target)` cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub fuser: Fuser,
    pub target: TargetLength,
    pub sequences: usize,
    pub mean_cer: f64,
    /// Mean of input frames over output frames.
    pub mean_compression_ratio: f64,
    pub mean_cost: f64,
    pub mean_output_frames: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceTrace {
    pub fuser: Fuser,
    pub target: TargetLength,
    pub id: String,
    pub input_frames: usize,
    pub output_frames: usize,
    pub cer: f64,
    pub decoded: Vec<u32>,
}

/// Wall-clock measurements, kept apart from the deterministic rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellTiming {
    pub fuser: Fuser,
    pub target: TargetLength,
    pub wall_clock_ms_per_sequence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub seed: u64,
    pub cost_model: CostModel,
    /// Mean CER of decoding the uncompressed sequences.
    pub baseline_cer: f64,
    pub rows: Vec<BenchRow>,
    #[serde(skip)]
    pub traces: Vec<SequenceTrace>,
    #[serde(skip)]
    pub timings: Vec<CellTiming>,
}

impl BenchReport {
    pub fn row(&self, fuser: Fuser, target: TargetLength) -> Option<&BenchRow> {
        self.rows.iter().find(|r| r.fuser == fuser && r.target == target)
    }
}

/// Rows completed before a cell failed.
#[derive(Debug)]
pub struct PartialGrid {
    pub report: BenchReport,
    pub failed_cell: (Fuser, TargetLength),
    pub error: Error,
}

impl fmt::Display for PartialGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "grid cell ({}, {}) failed after {} rows: {}",
            self.failed_cell.0,
            self.failed_cell.1,
            self.report.rows.len(),
            self.error
        )
    }
}

impl std::error::Error for PartialGrid {}

struct Prepared<S> {
    seq: FrameSequence<S>,
    density: DensityVector<S>,
}

/// Evaluates every `(fuser, target)` cell over `data`. Cells are emitted in
/// `fusers x targets` order and sequences in dataset order, whatever the
/// thread count.
#[allow(clippy::result_large_err)]
pub fn run_grid<S: Scalar>(
    data: &Dataset,
    decoder: &CtcDecoder<S>,
    cfg: &GridConfig,
) -> std::result::Result<BenchReport, PartialGrid> {
    let mut report = BenchReport {
        seed: cfg.seed,
        cost_model: cfg.cost,
        baseline_cer: 0.0,
        rows: Vec::new(),
        traces: Vec::new(),
        timings: Vec::new(),
    };
    let first_cell = (
        cfg.fusers.first().copied().unwrap_or(Fuser::Identity),
        cfg.targets.first().copied().unwrap_or(TargetLength::Fraction(1)),
    );

    let prepared: Result<Vec<(Prepared<S>, f64)>> = data
        .examples
        .par_iter()
        .map(|ex| {
            let seq = ex.seq.cast::<S>();
            let grid = decoder.forward(&seq)?;
            let base = cer(&greedy_decode(&grid), &ex.label);
            Ok((
                Prepared {
                    density: content_density(&grid),
                    seq,
                },
                base,
            ))
        })
        .collect();
    let prepared = match prepared {
        Ok(p) => p,
        Err(error) => {
            return Err(PartialGrid {
                report,
                failed_cell: first_cell,
                error,
            })
        }
    };
    if !prepared.is_empty() {
        report.baseline_cer = prepared.iter().map(|(_, b)| b).sum::<f64>() / prepared.len() as f64;
    }

    for &fuser in &cfg.fusers {
        for &target in &cfg.targets {
            let start = Instant::now();
            let cell: Result<Vec<SequenceTrace>> = prepared
                .par_iter()
                .zip(&data.examples)
                .map(|((p, _), ex)| {
                    let l = target.resolve(p.seq.len());
                    let out = fuser.apply(&p.seq, &p.density, l, cfg.seed)?;
                    let hyp = greedy_decode(&decoder.forward(&out.frames)?);
                    Ok(SequenceTrace {
                        fuser,
                        target,
                        id: ex.seq.id.clone(),
                        input_frames: p.seq.len(),
                        output_frames: out.len(),
                        cer: cer(&hyp, &ex.label),
                        decoded: hyp.0,
                    })
                })
                .collect();
            let traces = match cell {
                Ok(t) => t,
                Err(error) => {
                    return Err(PartialGrid {
                        report,
                        failed_cell: (fuser, target),
                        error,
                    })
                }
            };
            let elapsed = start.elapsed().as_secs_f64() * 1e3;
            let n = traces.len().max(1) as f64;
            report.rows.push(BenchRow {
                fuser,
                target,
                sequences: traces.len(),
                mean_cer: traces.iter().map(|t| t.cer).sum::<f64>() / n,
                mean_compression_ratio: traces
                    .iter()
                    .map(|t| t.input_frames as f64 / t.output_frames.max(1) as f64)
                    .sum::<f64>()
                    / n,
                mean_cost: traces.iter().map(|t| estimate_cost(t.output_frames, &cfg.cost)).sum::<f64>() / n,
                mean_output_frames: traces.iter().map(|t| t.output_frames as f64).sum::<f64>() / n,
            });
            report.timings.push(CellTiming {
                fuser,
                target,
                wall_clock_ms_per_sequence: elapsed / n,
            });
            report.traces.extend(traces);
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Checks `mean_cer(chain[0]) <= mean_cer(chain[1]) <= ...` at `target`.
pub fn ordering_gate(report: &BenchReport, chain: &[Fuser], target: TargetLength) -> GateCheck {
    let name = format!(
        "{} at L={target}",
        chain.iter().map(|f| f.name()).collect::<Vec<_>>().join(" <= ")
    );
    let values: Option<Vec<f64>> = chain.iter().map(|&f| report.row(f, target).map(|r| r.mean_cer)).collect();
    match values {
        None => GateCheck {
            name,
            passed: false,
            detail: "missing grid row".into(),
        },
        Some(v) => GateCheck {
            name,
            passed: v.windows(2).all(|w| w[0] <= w[1]),
            detail: v.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(" / "),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frameio::{generate_synthetic, SyntheticSpec};

    #[test]
    fn target_parsing_and_resolution() {
        assert_eq!("T".parse::<TargetLength>().unwrap(), TargetLength::Fraction(1));
        assert_eq!("T/4".parse::<TargetLength>().unwrap(), TargetLength::Fraction(4));
        assert_eq!("400".parse::<TargetLength>().unwrap(), TargetLength::Absolute(400));
        for bad in ["0", "T/0", "x", "T/y"] {
            assert!(bad.parse::<TargetLength>().is_err());
        }
        assert_eq!(TargetLength::Fraction(8).resolve(20), 2);
        assert_eq!(TargetLength::Fraction(8).resolve(5), 1);
        assert_eq!(TargetLength::Fraction(4).to_string(), "T/4");
        assert_eq!(serde_json::to_string(&TargetLength::Absolute(12)).unwrap(), "\"12\"");
    }

    fn small() -> Dataset {
        Dataset::from_synthetic(
            &generate_synthetic(&SyntheticSpec {
                num_sequences: 12,
                embed_dim: 6,
                ..SyntheticSpec::default()
            })
            .unwrap(),
        )
    }

    #[test]
    fn identity_row_equals_baseline_and_runs_are_repeatable() {
        let data = small();
        let dec = CtcDecoder::<f32>::seeded(6, 16, 8, 3);
        let cfg = GridConfig {
            fusers: vec![Fuser::Identity, Fuser::Density, Fuser::Random],
            targets: vec![TargetLength::Fraction(1), TargetLength::Fraction(2)],
            ..GridConfig::default()
        };
        let a = run_grid(&data, &dec, &cfg).unwrap();
        assert_eq!(a.rows.len(), 6);
        assert_eq!(a.row(Fuser::Identity, TargetLength::Fraction(1)).unwrap().mean_cer, a.baseline_cer);
        assert_eq!(a.row(Fuser::Density, TargetLength::Fraction(1)).unwrap().mean_cer, a.baseline_cer);
        let b = run_grid(&data, &dec, &cfg).unwrap();
        assert_eq!(a.rows, b.rows);
        assert_eq!(a.traces, b.traces);
    }

    #[test]
    fn failure_keeps_completed_rows() {
        let data = small();
        // Wrong input dimension fails during preparation.
        let dec = CtcDecoder::<f32>::seeded(5, 4, 8, 3);
        let err = run_grid(&data, &dec, &GridConfig::default()).unwrap_err();
        assert!(err.report.rows.is_empty());
        assert!(matches!(err.error, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn ordering_gate_reads_rows() {
        let row = |fuser, cer| BenchRow {
            fuser,
            target: TargetLength::Fraction(2),
            sequences: 1,
            mean_cer: cer,
            mean_compression_ratio: 2.0,
            mean_cost: 1.0,
            mean_output_frames: 1.0,
        };
        let report = BenchReport {
            seed: 0,
            cost_model: CostModel::default(),
            baseline_cer: 0.0,
            rows: vec![row(Fuser::Density, 0.1), row(Fuser::MostSim, 0.1), row(Fuser::Random, 0.3)],
            traces: vec![],
            timings: vec![],
        };
        let t = TargetLength::Fraction(2);
        assert!(ordering_gate(&report, &[Fuser::Density, Fuser::MostSim, Fuser::Random], t).passed);
        assert!(!ordering_gate(&report, &[Fuser::Random, Fuser::Density], t).passed);
        assert!(!ordering_gate(&report, &[Fuser::AvgPool], t).passed);
    }
}
