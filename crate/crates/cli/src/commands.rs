use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context, Result};
use log::info;
use serde::Serialize;
use serde_json::json;

use speechfuse::bench::{
    run_experiment, run_grid, trend_gates, write_report, ExperimentConfig, GateCheck, GridConfig, TargetLength,
};
use speechfuse::ctc::{
    content_density, greedy_decode, load_checkpoint, save_checkpoint, train_ctc_decoder, write_train_log,
};
use speechfuse::frameio::{generate_synthetic, read_fseq, Dataset, Example};
use speechfuse::fusion::write_condensed;
use speechfuse::oracle::{ctc_suite, grad_suite, select_suite, SuiteResult};
use speechfuse::pipeline::{dct_batch_plan, write_plan};
use speechfuse::{bench, CtcDecoder, DensityVector, Frames32, Fuser, LabelSequence};

use crate::config::{self, FileConfig};
use crate::{exit, BenchArgs, Cli, Command, CompressArgs, DecodeArgs, DensityArgs, GenArgs, GridPreset, InputArgs};
use crate::{OracleArgs, PlanArgs, Suite, TrainArgs};

/// Bad flag combinations or config values found after parsing.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// A check the command was asked to enforce did not hold.
#[derive(Debug)]
pub struct CheckFailed(pub String);

impl fmt::Display for CheckFailed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for CheckFailed {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<UsageError>() {
            return exit::USAGE;
        }
        if cause.is::<CheckFailed>() {
            return exit::NUMERICAL;
        }
        if let Some(e) = cause.downcast_ref::<speechfuse::Error>() {
            return match e {
                speechfuse::Error::Config(_) => exit::USAGE,
                e if e.is_io() => exit::IO,
                _ => exit::NUMERICAL,
            };
        }
        if cause.is::<std::io::Error>() {
            return exit::IO;
        }
    }
    1
}

pub fn run(cli: &Cli) -> Result<()> {
    let file = config::load(cli.config.as_deref())?;
    match &cli.command {
        Command::Gen(a) => gen(cli, &file, a),
        Command::TrainCtc(a) => train(cli, &file, a),
        Command::Density(a) => density(cli, a),
        Command::Compress(a) => compress(cli, a),
        Command::Decode(a) => decode(cli, a),
        Command::Bench(a) => bench_cmd(cli, &file, a),
        Command::Oracle(a) => oracle(cli, a),
        Command::Plan(a) => plan(cli, &file, a),
    }
}

fn emit<T: Serialize>(cli: &Cli, summary: &T, text: impl FnOnce() -> String) {
    if cli.json {
        println!("{}", serde_json::to_string(summary).expect("summary serializes"));
    } else {
        println!("{}", text());
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| speechfuse::Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })?;
    Ok(())
}

fn write_text(path: PathBuf, text: String) -> Result<()> {
    fs::write(&path, text).map_err(|e| speechfuse::Error::Io { path, source: e })?;
    Ok(())
}

fn jsonl<T: Serialize>(rows: &[T]) -> String {
    rows.iter()
        .map(|r| serde_json::to_string(r).expect("row serializes") + "\n")
        .collect()
}

fn gen(cli: &Cli, file: &FileConfig, a: &GenArgs) -> Result<()> {
    let mut spec = file.synth.clone().unwrap_or_default();
    if let Some(v) = a.vocab {
        spec.vocab_size = v as usize;
    }
    if let Some(v) = a.dim {
        spec.embed_dim = v as usize;
    }
    if let Some(v) = a.n {
        spec.num_sequences = v as usize;
    }
    if let Some(v) = a.seed {
        spec.seed = v;
    }
    if let Some(v) = a.k_min {
        spec.frames_per_token.0 = v;
    }
    if let Some(v) = a.k_max {
        spec.frames_per_token.1 = v;
    }
    if let Some(v) = a.noise {
        spec.noise_stddev = v;
    }
    if let Some(v) = a.silence_prob {
        spec.silence_prob = v;
    }
    if let Some(v) = a.tokens_min {
        spec.tokens_per_sequence.0 = v;
    }
    if let Some(v) = a.tokens_max {
        spec.tokens_per_sequence.1 = v;
    }
    spec.allow_repeats |= a.allow_repeats;
    spec.validate()?;

    let data = generate_synthetic(&spec)?;
    let manifest = data.write(&a.out)?;
    let frames: usize = data.sequences.iter().map(|s| s.len()).sum();
    let tokens: usize = data.labels.iter().map(|l| l.tokens.len()).sum();
    let summary = json!({
        "manifest": manifest,
        "sequences": data.sequences.len(),
        "frames": frames,
        "tokens": tokens,
    });
    emit(cli, &summary, || {
        format!(
            "wrote {} sequences ({frames} frames, {tokens} tokens) to {}",
            data.sequences.len(),
            manifest.display()
        )
    });
    Ok(())
}

pub const DECODER_FILE: &str = "decoder.ctd";
pub const TRAIN_LOG_FILE: &str = "train_log.jsonl";

fn train(cli: &Cli, file: &FileConfig, a: &TrainArgs) -> Result<()> {
    let mut cfg = file.train.clone().unwrap_or_default();
    if let Some(v) = a.hidden {
        cfg.hidden_dim = v;
    }
    if let Some(v) = a.lr {
        cfg.learning_rate = v;
    }
    if let Some(v) = a.steps {
        cfg.steps = v;
    }
    if let Some(v) = a.batch_size {
        cfg.batch_size = v;
    }
    if let Some(v) = a.seed {
        cfg.seed = v;
    }
    if let Some(v) = a.blank_bias {
        cfg.blank_bias = v;
    }
    if cfg.hidden_dim == 0 || cfg.batch_size == 0 {
        return Err(usage("--hidden and --batch-size must be positive"));
    }
    let data = Dataset::load(&a.manifest)?;
    info!("training on {} sequences", data.len());
    let outcome = train_ctc_decoder::<f32>(&data, &cfg)?;
    create_dir(&a.out)?;
    save_checkpoint(&outcome.decoder, a.out.join(DECODER_FILE))?;
    write_train_log(&outcome.log, a.out.join(TRAIN_LOG_FILE))?;
    let train_cer = bench::mean_greedy_cer(&outcome.decoder, &data)?;
    let final_loss = outcome.log.last().map(|e| e.loss);
    let summary = json!({
        "decoder": a.out.join(DECODER_FILE),
        "steps": cfg.steps,
        "final_loss": final_loss,
        "train_cer": train_cer,
    });
    emit(cli, &summary, || {
        format!(
            "trained {} steps, final loss {:.4}, train CER {train_cer:.4}",
            cfg.steps,
            final_loss.unwrap_or(f64::NAN)
        )
    });
    Ok(())
}

/// Sequences from `--input` files (labels unknown) or a manifest.
fn load_inputs(inputs: &InputArgs) -> Result<Vec<(Frames32, Option<LabelSequence>)>> {
    if let Some(m) = &inputs.manifest {
        return Ok(Dataset::load(m)?
            .examples
            .into_iter()
            .map(|Example { seq, label }| (seq, Some(label)))
            .collect());
    }
    inputs
        .input
        .iter()
        .map(|p| Ok((read_fseq(p)?, None)))
        .collect()
}

fn check_dim(dec: &CtcDecoder<f32>, seq: &Frames32) -> Result<()> {
    if dec.input_dim() != seq.dim() {
        return Err(usage(format!(
            "sequence {} has dimension {} but the decoder expects {}",
            seq.id,
            seq.dim(),
            dec.input_dim()
        )));
    }
    Ok(())
}

pub const DENSITY_FILE: &str = "density.jsonl";

fn density(cli: &Cli, a: &DensityArgs) -> Result<()> {
    let dec = load_checkpoint(&a.decoder)?;
    let seqs = load_inputs(&a.inputs)?;
    #[derive(Serialize)]
    struct Row<'a> {
        id: &'a str,
        density: Vec<f32>,
    }
    let mut rows = Vec::with_capacity(seqs.len());
    for (seq, _) in &seqs {
        check_dim(&dec, seq)?;
        let d = content_density(&dec.forward(seq)?);
        rows.push(Row { id: &seq.id, density: d.0 });
    }
    create_dir(&a.out)?;
    write_text(a.out.join(DENSITY_FILE), jsonl(&rows))?;
    let mean: Vec<f64> = rows
        .iter()
        .map(|r| r.density.iter().map(|&v| v as f64).sum::<f64>() / r.density.len().max(1) as f64)
        .collect();
    let summary = json!({ "sequences": rows.len(), "mean_density": mean });
    emit(cli, &summary, || format!("wrote density for {} sequences", rows.len()));
    Ok(())
}

fn compress(cli: &Cli, a: &CompressArgs) -> Result<()> {
    if a.fuser.needs_density() && a.decoder.is_none() {
        return Err(usage("--decoder is required for the density and single-shot fusers"));
    }
    let decoder = match (&a.decoder, a.fuser.needs_density()) {
        (Some(p), true) => Some(load_checkpoint(p)?),
        _ => None,
    };
    let seqs = load_inputs(&a.inputs)?;
    create_dir(&a.out)?;
    let target = a.target as usize;
    let fuser = a.fuser.fuser();
    let mut outputs = Vec::new();
    for (seq, _) in &seqs {
        let density = match &decoder {
            Some(dec) if seq.len() > target => {
                check_dim(dec, seq)?;
                content_density(&dec.forward(seq)?)
            }
            _ => DensityVector::uniform(seq.len(), 1.0f32),
        };
        let out = fuser.apply(seq, &density, target, a.seed)?;
        let fsq = a.out.join(format!("{}.fsq", seq.id));
        let sidecar = a.out.join(format!("{}.prov.json", seq.id));
        write_condensed(&out, seq.len(), &fsq, &sidecar)?;
        outputs.push(json!({
            "id": seq.id,
            "input_frames": seq.len(),
            "output_frames": out.len(),
            "output": fsq,
            "sidecar": sidecar,
        }));
    }
    emit(cli, &outputs, || {
        outputs
            .iter()
            .map(|o| format!("{}: {} -> {} frames", o["id"], o["input_frames"], o["output_frames"]))
            .collect::<Vec<_>>()
            .join("\n")
    });
    Ok(())
}

pub const DECODE_FILE: &str = "decode.jsonl";

fn decode(cli: &Cli, a: &DecodeArgs) -> Result<()> {
    let dec = load_checkpoint(&a.decoder)?;
    let seqs = load_inputs(&a.inputs)?;
    #[derive(Serialize)]
    struct Row<'a> {
        id: &'a str,
        tokens: Vec<u32>,
        #[serde(skip_serializing_if = "Option::is_none")]
        cer: Option<f64>,
    }
    let mut rows = Vec::with_capacity(seqs.len());
    for (seq, label) in &seqs {
        check_dim(&dec, seq)?;
        let hyp = greedy_decode(&dec.forward(seq)?);
        let cer = label.as_ref().map(|l| bench::cer(&hyp, l));
        rows.push(Row {
            id: &seq.id,
            tokens: hyp.0,
            cer,
        });
    }
    create_dir(&a.out)?;
    write_text(a.out.join(DECODE_FILE), jsonl(&rows))?;
    let scored: Vec<f64> = rows.iter().filter_map(|r| r.cer).collect();
    let mean_cer = (!scored.is_empty()).then(|| scored.iter().sum::<f64>() / scored.len() as f64);
    let summary = json!({ "sequences": rows.len(), "mean_cer": mean_cer });
    emit(cli, &summary, || match mean_cer {
        Some(c) => format!("decoded {} sequences, mean CER {c:.4}", rows.len()),
        None => format!("decoded {} sequences", rows.len()),
    });
    Ok(())
}

pub const GATES_FILE: &str = "gates.json";
pub const EXPERIMENT_FILE: &str = "experiment.json";

fn preset(grid: GridPreset) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    match grid {
        GridPreset::Default => {}
        GridPreset::Smoke => {
            cfg.synth.num_sequences = 40;
            cfg.train.steps = 200;
        }
        GridPreset::Absolute => {
            cfg.synth.num_sequences = 200;
            cfg.synth.tokens_per_sequence = (40, 80);
            cfg.grid.fusers = vec![Fuser::Density, Fuser::MostSim, Fuser::AvgPool, Fuser::Random];
            cfg.grid.targets = [400, 200, 100, 50, 25, 12].into_iter().map(TargetLength::Absolute).collect();
        }
    }
    cfg
}

fn parse_grid_lists(a: &BenchArgs, grid: &mut GridConfig) -> Result<()> {
    if !a.fusers.is_empty() {
        grid.fusers = a
            .fusers
            .iter()
            .map(|f| f.parse::<Fuser>().map_err(|e| usage(format!("--fusers: {e}"))))
            .collect::<Result<_>>()?;
    }
    if !a.targets.is_empty() {
        grid.targets = a
            .targets
            .iter()
            .map(|t| t.parse::<TargetLength>().map_err(|e| usage(format!("--targets: {e}"))))
            .collect::<Result<_>>()?;
    }
    Ok(())
}

fn bench_cmd(cli: &Cli, file: &FileConfig, a: &BenchArgs) -> Result<()> {
    let (report, gates, dev_cer) = if let (Some(manifest), Some(dec_path)) = (&a.manifest, &a.decoder) {
        let mut grid = file.grid.clone().unwrap_or_default();
        if let Some(s) = a.seed {
            grid.seed = s;
        }
        parse_grid_lists(a, &mut grid)?;
        grid.cost.validate()?;
        let data = Dataset::load(manifest)?;
        let dec = load_checkpoint(dec_path)?;
        match run_grid(&data, &dec, &grid) {
            Ok(r) => {
                let gates = trend_gates(&r);
                (r, gates, None)
            }
            Err(partial) => {
                write_report(&partial.report, &a.out, Some(&partial.to_string()))?;
                return Err(anyhow!(partial.error)).context("benchmark grid failed; partial report written");
            }
        }
    } else {
        let mut cfg = file.experiment.clone().unwrap_or_else(|| preset(a.grid));
        if let Some(g) = &file.grid {
            cfg.grid = g.clone();
        }
        if let Some(s) = a.seed {
            cfg.seed = s;
        }
        parse_grid_lists(a, &mut cfg.grid)?;
        cfg.grid.cost.validate()?;
        let exp = run_experiment::<f32>(&cfg)?;
        create_dir(&a.out)?;
        save_checkpoint(&exp.decoder, a.out.join(DECODER_FILE))?;
        write_train_log(&exp.train_log, a.out.join(TRAIN_LOG_FILE))?;
        write_text(
            a.out.join(EXPERIMENT_FILE),
            serde_json::to_string_pretty(&cfg).expect("config serializes") + "\n",
        )?;
        (exp.report, exp.gates, Some(exp.dev_cer))
    };
    let mut report = report;
    if !a.timing {
        report.timings.clear();
    }
    write_report(&report, &a.out, None)?;
    write_text(
        a.out.join(GATES_FILE),
        serde_json::to_string_pretty(&gates).expect("gates serialize") + "\n",
    )?;

    let failed: Vec<&GateCheck> = gates.iter().filter(|g| !g.passed).collect();
    let summary = json!({
        "rows": report.rows.len(),
        "baseline_cer": report.baseline_cer,
        "dev_cer": dev_cer,
        "gates_passed": failed.is_empty(),
        "gates": gates,
    });
    emit(cli, &summary, || {
        let mut s = format!("{} grid rows written to {}\n", report.rows.len(), a.out.display());
        for r in &report.rows {
            s += &format!(
                "{:<12} {:<5} cer {:.4}  ratio {:.2}  cost {:.3}\n",
                r.fuser, r.target, r.mean_cer, r.mean_compression_ratio, r.mean_cost
            );
        }
        for g in &gates {
            s += &format!("{} {}: {}\n", if g.passed { "PASS" } else { "FAIL" }, g.name, g.detail);
        }
        s.trim_end().to_string()
    });
    if a.strict && !failed.is_empty() {
        return Err(CheckFailed(format!("{} trend gate(s) failed", failed.len())).into());
    }
    Ok(())
}

fn oracle(cli: &Cli, a: &OracleArgs) -> Result<()> {
    let n = |default: usize| a.instances.unwrap_or(default);
    let mut results: Vec<SuiteResult> = Vec::new();
    if matches!(a.suite, Suite::Ctc | Suite::All) {
        results.push(ctc_suite(n(1000), a.max_t as usize, a.seed)?);
    }
    if matches!(a.suite, Suite::Grad | Suite::All) {
        results.push(grad_suite(n(100), a.seed)?);
    }
    if matches!(a.suite, Suite::Select | Suite::All) {
        results.push(select_suite(n(1000), a.seed)?);
    }
    emit(cli, &results, || {
        results
            .iter()
            .map(|r| {
                let aux = r.max_aux_error.map(|v| format!(", row-sum {v:.3e}")).unwrap_or_default();
                format!(
                    "{} {}: {} instances, max error {:.3e} (tolerance {:.0e}{aux})",
                    if r.passed { "PASS" } else { "FAIL" },
                    r.suite,
                    r.instances,
                    r.max_error,
                    r.tolerance
                )
            })
            .collect::<Vec<_>>()
            .join("\n")
    });
    if results.iter().all(|r| r.passed) {
        Ok(())
    } else {
        Err(CheckFailed("oracle suite failed".into()).into())
    }
}

pub const PLAN_FILE: &str = "plan.jsonl";

fn plan(cli: &Cli, file: &FileConfig, a: &PlanArgs) -> Result<()> {
    let mut window = file.window.clone().unwrap_or_default();
    if !a.targets.is_empty() {
        window.target_lengths = a.targets.clone();
    }
    window.validate()?;
    let manifest = speechfuse::DatasetManifest::read(&a.manifest)?;
    let ids: Vec<&str> = manifest.entries.iter().map(|e| e.id.as_str()).collect();
    let plan = dct_batch_plan(&ids, &window, a.seed.unwrap_or(manifest.seed), a.epochs)?;
    create_dir(&a.out)?;
    write_plan(&plan, a.out.join(PLAN_FILE))?;
    let summary = json!({ "entries": plan.len(), "plan": a.out.join(PLAN_FILE) });
    emit(cli, &summary, || format!("planned {} compressions", plan.len()));
    Ok(())
}
