use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde_json::json;

use super::cost::{estimate_cost, REFERENCE_TFLOPS};
use super::grid::BenchReport;
use crate::{Error, Result};

pub const REPORT_FILE: &str = "report.jsonl";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const CURVES_FILE: &str = "curves.dat";
pub const TRACES_FILE: &str = "traces.jsonl";
/// Wall-clock numbers live here so the other files stay byte-stable.
pub const TIMING_FILE: &str = "timing.jsonl";
pub const COST_FILE: &str = "cost_trend.txt";
pub const FAILED_FILE: &str = "FAILED";

fn put(dir: &Path, name: &str, body: String) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, body).map_err(|e| Error::io(&path, e))
}

fn jsonl<T: serde::Serialize>(items: impl IntoIterator<Item = T>) -> String {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(&item).expect("report rows serialize"));
        out.push('\n');
    }
    out
}

/// Writes every report file into `dir`. Timings are written only when the
/// report carries them. When `failure` is set, the report ends with a
/// failure record and a `FAILED` marker file is written too.
pub fn write_report(report: &BenchReport, dir: impl AsRef<Path>, failure: Option<&str>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let header = json!({
        "kind": "header",
        "seed": report.seed,
        "cost_model": report.cost_model,
        "baseline_cer": report.baseline_cer,
        "rows": report.rows.len(),
    });
    let mut lines = vec![header];
    lines.extend(report.rows.iter().map(|r| {
        let mut v = serde_json::to_value(r).expect("row serializes");
        v["kind"] = json!("row");
        v
    }));
    if let Some(msg) = failure {
        lines.push(json!({ "kind": "failed", "error": msg }));
    }
    put(dir, REPORT_FILE, jsonl(&lines))?;

    let mut csv = String::from("fuser,target,sequences,mean_cer,mean_compression_ratio,mean_cost,mean_output_frames\n");
    for r in &report.rows {
        let _ = writeln!(
            csv,
            "{},{},{},{:.6},{:.6},{:.6},{:.3}",
            r.fuser, r.target, r.sequences, r.mean_cer, r.mean_compression_ratio, r.mean_cost, r.mean_output_frames
        );
    }
    put(dir, SUMMARY_FILE, csv)?;

    // One gnuplot block per fuser, separated by two blank lines.
    let mut curves = String::from("# fuser target mean_compression_ratio mean_cer\n");
    let mut last = None;
    for r in &report.rows {
        if last.is_some() && last != Some(r.fuser) {
            curves.push_str("\n\n");
        }
        last = Some(r.fuser);
        let _ = writeln!(curves, "{} {} {:.6} {:.6}", r.fuser, r.target, r.mean_compression_ratio, r.mean_cer);
    }
    put(dir, CURVES_FILE, curves)?;

    put(dir, TRACES_FILE, jsonl(&report.traces))?;
    if !report.timings.is_empty() {
        put(dir, TIMING_FILE, jsonl(&report.timings))?;
    }
    put(dir, COST_FILE, cost_trend(report))?;

    let marker = dir.join(FAILED_FILE);
    match failure {
        Some(msg) => put(dir, FAILED_FILE, format!("{msg}\n"))?,
        None if marker.exists() => fs::remove_file(&marker).map_err(|e| Error::io(&marker, e))?,
        None => {}
    }
    Ok(())
}

/// Proxy cost at the reference window lengths, printed beside the measured
/// TFLOPs that the proxy imitates but does not reproduce.
pub fn cost_trend(report: &BenchReport) -> String {
    let m = &report.cost_model;
    let base = estimate_cost(REFERENCE_TFLOPS[0].0, m);
    let ref_base = REFERENCE_TFLOPS[0].1;
    let mut out = String::from("# L proxy_cost proxy_ratio reference_tflops reference_ratio\n");
    out.push_str("# reference TFLOPs are quoted for comparison only (not reproduced)\n");
    for (l, tf) in REFERENCE_TFLOPS {
        let c = estimate_cost(l, m);
        let _ = writeln!(out, "{l} {c:.6} {:.4} {tf:.2} {:.4}", c / base, tf / ref_base);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::{BenchRow, CostModel, TargetLength};
    use crate::Fuser;

    fn report() -> BenchReport {
        BenchReport {
            seed: 7,
            cost_model: CostModel::default(),
            baseline_cer: 0.0,
            rows: [Fuser::Density, Fuser::Random]
                .into_iter()
                .flat_map(|f| {
                    [1, 2].map(|k| BenchRow {
                        fuser: f,
                        target: TargetLength::Fraction(k),
                        sequences: 3,
                        mean_cer: 0.1 * k as f64,
                        mean_compression_ratio: k as f64,
                        mean_cost: 4.0,
                        mean_output_frames: 10.0,
                    })
                })
                .collect(),
            traces: vec![],
            timings: vec![],
        }
    }

    #[test]
    fn writes_all_files_and_failure_marker() {
        let dir = tempfile::tempdir().unwrap();
        write_report(&report(), dir.path(), None).unwrap();
        for f in [REPORT_FILE, SUMMARY_FILE, CURVES_FILE, TRACES_FILE, COST_FILE] {
            assert!(dir.path().join(f).exists(), "{f}");
        }
        assert!(!dir.path().join(FAILED_FILE).exists());
        let csv = fs::read_to_string(dir.path().join(SUMMARY_FILE)).unwrap();
        assert_eq!(csv.lines().count(), 5);
        assert!(csv.contains("density,T/2,3,0.200000"));
        let curves = fs::read_to_string(dir.path().join(CURVES_FILE)).unwrap();
        assert!(curves.contains("\n\n\nrandom T "));

        write_report(&report(), dir.path(), Some("cell failed")).unwrap();
        assert!(dir.path().join(FAILED_FILE).exists());
        let last = fs::read_to_string(dir.path().join(REPORT_FILE)).unwrap();
        assert!(last.lines().last().unwrap().contains("\"failed\""));
    }

    #[test]
    fn cost_trend_labels_reference() {
        let t = cost_trend(&report());
        assert!(t.contains("not reproduced"));
        assert!(t.contains("9.79") && t.contains("4.17"));
        assert_eq!(t.lines().count(), 6);
    }
}
