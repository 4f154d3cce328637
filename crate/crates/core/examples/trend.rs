//! Runs the default synthetic trend experiment and prints the grid.

use std::time::Instant;

use speechfuse::bench::{run_experiment, ExperimentConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = match std::env::args().nth(1) {
        Some(path) => serde_json::from_str(&std::fs::read_to_string(path)?)?,
        None => ExperimentConfig::default(),
    };
    let start = Instant::now();
    let exp = run_experiment::<f32>(&cfg)?;
    for e in exp.train_log.iter().step_by((exp.train_log.len() / 10).max(1)) {
        println!("step {} loss {:.4} lr {:.2e}", e.step, e.loss, e.lr);
    }
    println!("dev CER {:.4}, baseline test CER {:.4}", exp.dev_cer, exp.report.baseline_cer);
    for r in &exp.report.rows {
        println!("{:<12} {:<4} cer {:.4} ratio {:.2}", r.fuser, r.target, r.mean_cer, r.mean_compression_ratio);
    }
    for g in &exp.gates {
        println!("{} {}: {}", if g.passed { "PASS" } else { "FAIL" }, g.name, g.detail);
    }
    println!("elapsed {:.1}s", start.elapsed().as_secs_f64());
    Ok(())
}
