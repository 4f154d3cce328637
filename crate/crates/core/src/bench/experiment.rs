//! The end-to-end synthetic trend run: generate, train, gate, benchmark.

use serde::{Deserialize, Serialize};

use super::grid::{ordering_gate, run_grid, BenchReport, GateCheck, GridConfig, TargetLength};
use super::metrics::mean_greedy_cer;
use crate::ctc::{train_ctc_decoder, TrainConfig, TrainLogEntry};
use crate::frameio::{generate_synthetic, Dataset};
use crate::seed::derive_seed;
use crate::{CtcDecoder, Error, Fuser, Result, Scalar, SyntheticSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub synth: SyntheticSpec,
    pub train: TrainConfig,
    pub train_frac: f64,
    pub dev_frac: f64,
    /// The decoder must reach this dev CER before the grid is trusted.
    pub dev_cer_gate: f64,
    pub grid: GridConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            synth: SyntheticSpec {
                vocab_size: 6,
                embed_dim: 16,
                frames_per_token: (1, 10),
                noise_stddev: 0.0,
                silence_prob: 0.3,
                num_sequences: 240,
                tokens_per_sequence: (4, 10),
                seed: 0,
                allow_repeats: false,
            },
            train: TrainConfig {
                hidden_dim: 32,
                steps: 2000,
                blank_bias: -3.0,
                ..TrainConfig::default()
            },
            train_frac: 0.5,
            dev_frac: 0.25,
            dev_cer_gate: 0.02,
            grid: GridConfig::default(),
        }
    }
}

impl ExperimentConfig {
    /// Copy with every sub-seed derived from `self.seed`.
    pub fn seeded(&self) -> Self {
        let mut c = self.clone();
        c.synth.seed = derive_seed(self.seed, "generator");
        c.train.seed = derive_seed(self.seed, "init");
        c.grid.seed = derive_seed(self.seed, "fusion");
        c
    }
}

#[derive(Debug, Clone)]
pub struct Experiment<S> {
    pub decoder: CtcDecoder<S>,
    pub train_log: Vec<TrainLogEntry>,
    pub dev_cer: f64,
    pub report: BenchReport,
    pub gates: Vec<GateCheck>,
}

impl<S> Experiment<S> {
    pub fn passed(&self) -> bool {
        self.gates.iter().all(|g| g.passed)
    }
}

/// Gates on a finished grid: density <= mostsim <= random at every
/// compressing target, and single-shot no better than iterative fusion at
/// targets of T/4 and below.
pub fn trend_gates(report: &BenchReport) -> Vec<GateCheck> {
    let mut gates = Vec::new();
    let targets: Vec<TargetLength> = report.rows.iter().map(|r| r.target).fold(Vec::new(), |mut v, t| {
        if !v.contains(&t) {
            v.push(t);
        }
        v
    });
    for &t in &targets {
        if t.compresses() {
            gates.push(ordering_gate(report, &[Fuser::Density, Fuser::MostSim, Fuser::Random], t));
        }
    }
    for &t in &targets {
        if matches!(t, TargetLength::Fraction(k) if k >= 4) {
            gates.push(ordering_gate(report, &[Fuser::Density, Fuser::SingleShot], t));
        }
    }
    gates
}

pub fn run_experiment<S: Scalar>(cfg: &ExperimentConfig) -> Result<Experiment<S>> {
    let cfg = cfg.seeded();
    let data = Dataset::from_synthetic(&generate_synthetic(&cfg.synth)?);
    let (train, dev, test) = data.split(cfg.train_frac, cfg.dev_frac);
    if train.is_empty() || dev.is_empty() || test.is_empty() {
        return Err(Error::Config("every split needs at least one sequence".into()));
    }
    let outcome = train_ctc_decoder::<S>(&train, &cfg.train)?;
    let dev_cer = mean_greedy_cer(&outcome.decoder, &dev)?;
    let report = run_grid(&test, &outcome.decoder, &cfg.grid).map_err(|p| p.error)?;
    let mut gates = vec![GateCheck {
        name: format!("dev CER <= {}", cfg.dev_cer_gate),
        passed: dev_cer <= cfg.dev_cer_gate,
        detail: format!("{dev_cer:.4}"),
    }];
    gates.extend(trend_gates(&report));
    Ok(Experiment {
        decoder: outcome.decoder,
        train_log: outcome.log,
        dev_cer,
        report,
        gates,
    })
}
