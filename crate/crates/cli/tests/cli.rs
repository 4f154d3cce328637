use std::path::Path;
use std::process::{Command, Output};

use speechfuse::frameio::write_fseq;
use speechfuse::FrameSequence;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_speechfuse"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = run(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

/// Small noiseless dataset plus a decoder trained on it.
fn workspace() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["gen", "--vocab", "4", "--dim", "8", "--n", "20", "--seed", "42", "--noise", "0", "-o", "data"]);
    ok(dir.path(), &["train-ctc", "--manifest", "data/manifest.jsonl", "--steps", "200", "--hidden", "16", "-o", "model"]);
    dir
}

fn long_input(dir: &Path, t: usize) {
    let data = (0..t * 8).map(|i| (i * 37 % 101) as f32 / 50.0 - 1.0).collect();
    write_fseq(&FrameSequence::new(data, 8).unwrap().with_id("long"), dir.join("long.fsq")).unwrap();
}

#[test]
fn gen_writes_dataset_and_rejects_zero_vocab() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(dir.path(), &["gen", "--vocab", "8", "--dim", "16", "--n", "200", "--seed", "42", "-o", "data", "--json"]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["sequences"], 200);
    let fsq = std::fs::read_dir(dir.path().join("data"))
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "fsq"))
        .count();
    assert_eq!(fsq, 200);
    assert!(dir.path().join("data/manifest.jsonl").exists());

    let bad = run(dir.path(), &["gen", "--vocab", "0", "-o", "x"]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("--vocab"));
    assert!(!dir.path().join("x").exists());
}

#[test]
fn invalid_spec_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = run(dir.path(), &["gen", "--k-min", "5", "--k-max", "2", "-o", "x"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn compress_identity_is_bit_identical() {
    let dir = workspace();
    long_input(dir.path(), 750);
    ok(dir.path(), &["compress", "--input", "long.fsq", "--L", "750", "--decoder", "model/decoder.ctd", "-o", "out"]);
    let a = std::fs::read(dir.path().join("long.fsq")).unwrap();
    let b = std::fs::read(dir.path().join("out/long.fsq")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn compress_to_200_writes_frames_and_sidecar() {
    let dir = workspace();
    long_input(dir.path(), 750);
    for fuser in ["density", "single-shot", "mostsim", "avgpool", "random"] {
        let out = format!("out-{fuser}");
        ok(
            dir.path(),
            &["compress", "--input", "long.fsq", "--fuser", fuser, "--L", "200", "--decoder", "model/decoder.ctd", "-o", &out],
        );
        let seq = speechfuse::frameio::read_fseq(dir.path().join(&out).join("long.fsq")).unwrap();
        assert_eq!(seq.len(), 200, "{fuser}");
        let side = speechfuse::fusion::read_sidecar(dir.path().join(&out).join("long.prov.json")).unwrap();
        assert_eq!(side.input_frames, 750);
        assert_eq!(side.provenance.len(), 200);
    }
}

#[test]
fn compress_without_decoder_is_a_usage_error() {
    let dir = workspace();
    let out = run(dir.path(), &["compress", "--input", "data/seq_00000.fsq", "--L", "3", "-o", "out"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn io_and_format_errors_exit_3() {
    let dir = workspace();
    let missing = run(dir.path(), &["decode", "--input", "nope.fsq", "--decoder", "model/decoder.ctd", "-o", "d"]);
    assert_eq!(missing.status.code(), Some(3));
    std::fs::write(dir.path().join("junk.fsq"), b"XXXX0000").unwrap();
    let junk = run(dir.path(), &["decode", "--input", "junk.fsq", "--decoder", "model/decoder.ctd", "-o", "d"]);
    assert_eq!(junk.status.code(), Some(3));
}

#[test]
fn oracle_ctc_suite_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(dir.path(), &["oracle", "--suite", "ctc", "--max-T", "8", "--json"]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!(v[0]["max_error"].as_f64().unwrap() <= 1e-9);
    assert_eq!(v[0]["passed"], true);
    let text = ok(dir.path(), &["oracle", "--suite", "select", "--instances", "20"]);
    assert!(text.starts_with("PASS select"));
}

#[test]
fn config_file_merges_under_flags() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("cfg.toml"),
        "[synth]\nvocab_size = 5\nnum_sequences = 7\nembed_dim = 4\n",
    )
    .unwrap();
    ok(dir.path(), &["gen", "--config", "cfg.toml", "--n", "3", "-o", "d"]);
    let m = speechfuse::DatasetManifest::read(dir.path().join("d/manifest.jsonl")).unwrap();
    assert_eq!((m.vocab_size, m.embed_dim, m.entries.len()), (5, 4, 3));

    std::fs::write(dir.path().join("bad.toml"), "[synth]\nvocab = 5\n").unwrap();
    assert_eq!(run(dir.path(), &["gen", "--config", "bad.toml", "-o", "e"]).status.code(), Some(2));
}

#[test]
fn writes_stay_inside_output_dir() {
    let dir = workspace();
    let before: Vec<_> = std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    ok(dir.path(), &["decode", "--manifest", "data/manifest.jsonl", "--decoder", "model/decoder.ctd", "-o", "dec"]);
    ok(dir.path(), &["plan", "--manifest", "data/manifest.jsonl", "-o", "plan"]);
    let mut after: Vec<_> = std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    after.retain(|n| !before.contains(n));
    after.sort();
    assert_eq!(after, vec!["dec", "plan"]);
    let plan = std::fs::read_to_string(dir.path().join("plan/plan.jsonl")).unwrap();
    assert_eq!(plan.lines().count(), 20);
    assert!(plan.contains("\"L\":"));
}

#[test]
fn bench_on_existing_manifest() {
    let dir = workspace();
    let out = ok(
        dir.path(),
        &[
            "bench", "--manifest", "data/manifest.jsonl", "--decoder", "model/decoder.ctd",
            "--fusers", "density,random", "--targets", "T,T/2", "-o", "b", "--json",
        ],
    );
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["rows"], 4);
    for f in ["report.jsonl", "summary.csv", "curves.dat", "traces.jsonl", "cost_trend.txt", "gates.json"] {
        assert!(dir.path().join("b").join(f).exists(), "{f}");
    }
    assert!(!dir.path().join("b/timing.jsonl").exists());
    let bad = run(dir.path(), &["bench", "--manifest", "data/manifest.jsonl", "--decoder", "model/decoder.ctd", "--targets", "T/0", "-o", "c"]);
    assert_eq!(bad.status.code(), Some(2));
}
