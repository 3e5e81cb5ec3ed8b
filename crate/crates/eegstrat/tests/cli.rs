//! End-to-end checks of the command-line interface: the synth -> train ->
//! embed -> evaluate -> report chain, byte determinism, and exit codes.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use eegstrat::synth::{BandProfile, CohortSpec, GroupSpec};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_eegstrat")
}

fn run(args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .output()
        .expect("spawn eegstrat")
}

fn run_ok(args: &[&str]) {
    let out = run(args);
    assert!(
        out.status.success(),
        "command {:?} failed:\n{}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
}

fn small_spec(seed: u64) -> CohortSpec {
    let mut theta = [0.0; 8];
    theta[1] = 1.0;
    let mut beta = [0.0; 8];
    beta[4] = 1.0;
    CohortSpec {
        group_a: GroupSpec {
            n_patients: 4,
            profile: BandProfile { amplitudes: theta },
            jitter: 0.05,
        },
        group_b: GroupSpec {
            n_patients: 4,
            profile: BandProfile { amplitudes: beta },
            jitter: 0.05,
        },
        windows_per_condition: 4,
        noise_sigma: 0.05,
        seed,
    }
}

fn write_spec(dir: &Path, spec: &CohortSpec) -> PathBuf {
    let path = dir.join("cohort.json");
    std::fs::write(&path, serde_json::to_string_pretty(spec).unwrap()).unwrap();
    path
}

#[test]
fn autoencoder_pipeline_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let spec = write_spec(d, &small_spec(17));
    let data = d.join("data");
    run_ok(&["synth", "--spec", spec.to_str().unwrap(), "--out", data.to_str().unwrap()]);
    for f in ["windows.csv", "raw_windows.csv", "labels.csv", "manifest.json"] {
        assert!(data.join(f).exists(), "missing {f}");
    }

    let model = d.join("ae.json");
    let report = d.join("ae_report.json");
    run_ok(&[
        "train-ae",
        "--windows", data.join("windows.csv").to_str().unwrap(),
        "--out", model.to_str().unwrap(),
        "--report", report.to_str().unwrap(),
        "--epochs", "8",
        "--batch-size", "16",
        "--seed", "3",
    ]);
    assert!(model.exists() && report.exists());
    assert!(d.join("ae.json.manifest.json").exists());

    let emb = d.join("e.csv");
    run_ok(&[
        "embed",
        "--windows", data.join("windows.csv").to_str().unwrap(),
        "--model", model.to_str().unwrap(),
        "--source", "autoencoder",
        "--out", emb.to_str().unwrap(),
    ]);
    let text = std::fs::read_to_string(&emb).unwrap();
    assert_eq!(text.lines().count(), 9, "8 patients plus header");
    assert!(text.starts_with("patient_id,source,n_windows,e0,"));

    let assign = d.join("assign.csv");
    run_ok(&[
        "cluster",
        "--embeddings", emb.to_str().unwrap(),
        "--method", "kmeans",
        "--k", "2",
        "--seed", "1",
        "--out", assign.to_str().unwrap(),
    ]);
    let assign_text = std::fs::read_to_string(&assign).unwrap();
    assert!(assign_text.starts_with("patient_id,cluster\n"));
    assert_eq!(assign_text.lines().count(), 9);

    let eval = d.join("eval.json");
    run_ok(&[
        "evaluate",
        "--embeddings", emb.to_str().unwrap(),
        "--labels", data.join("labels.csv").to_str().unwrap(),
        "--source", "autoencoder",
        "--seed", "7",
        "--out", eval.to_str().unwrap(),
    ]);
    let report: eegstrat::eval::StratificationReport =
        serde_json::from_str(&std::fs::read_to_string(&eval).unwrap()).unwrap();
    assert_eq!(report.methods.len(), 4);
    assert_eq!(report.n_patients, 8);

    let txt = d.join("report.txt");
    run_ok(&[
        "report",
        "--evaluation", eval.to_str().unwrap(),
        "--out", txt.to_str().unwrap(),
    ]);
    let rendered = std::fs::read_to_string(&txt).unwrap();
    for method in ["kmeans", "ward", "gmm", "spectral"] {
        assert!(rendered.contains(method), "report missing {method}");
    }
}

#[test]
fn eegnet_train_and_bandpower_paths() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let spec = write_spec(d, &small_spec(23));
    let data = d.join("data");
    run_ok(&["synth", "--spec", spec.to_str().unwrap(), "--out", data.to_str().unwrap()]);

    let bp = d.join("bp.csv");
    run_ok(&[
        "bandpower",
        "--raw", data.join("raw_windows.csv").to_str().unwrap(),
        "--out", bp.to_str().unwrap(),
        "--patient-id", "x01",
        "--condition", "active",
    ]);
    let text = std::fs::read_to_string(&bp).unwrap();
    assert!(text.lines().skip(1).all(|l| l.starts_with("x01,active,")));

    let model = d.join("net.json");
    let report = d.join("net_report.json");
    run_ok(&[
        "train-eegnet",
        "--raw", data.join("raw_windows.csv").to_str().unwrap(),
        "--out", model.to_str().unwrap(),
        "--report", report.to_str().unwrap(),
        "--epochs", "2",
        "--batch-size", "16",
        "--seed", "5",
    ]);

    let emb = d.join("e.csv");
    run_ok(&[
        "embed",
        "--windows", data.join("windows.csv").to_str().unwrap(),
        "--model", model.to_str().unwrap(),
        "--source", "eegnet",
        "--out", emb.to_str().unwrap(),
    ]);
    let header = std::fs::read_to_string(&emb).unwrap();
    let cols = header.lines().next().unwrap().split(',').count();
    assert_eq!(cols, 3 + 2048, "eegnet patient embeddings are 2048-d");

    // Wrong-kind load path: the autoencoder source rejects this checkpoint.
    let out = run(&[
        "embed",
        "--windows", data.join("windows.csv").to_str().unwrap(),
        "--model", model.to_str().unwrap(),
        "--source", "autoencoder",
        "--out", d.join("bad.csv").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("autoencoder"), "stderr: {err}");
}

#[test]
fn same_command_twice_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let spec = write_spec(d, &small_spec(31));
    let out1 = d.join("run1");
    let out2 = d.join("run2");
    for out in [&out1, &out2] {
        run_ok(&["synth", "--spec", spec.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    }
    for f in ["windows.csv", "raw_windows.csv", "labels.csv"] {
        assert_eq!(
            std::fs::read(out1.join(f)).unwrap(),
            std::fs::read(out2.join(f)).unwrap(),
            "{f} differs between identical runs"
        );
    }
    // Manifests differ only in --out; everything content-derived matches.
    let m1: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out1.join("manifest.json")).unwrap())
            .unwrap();
    let m2: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out2.join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(m1["input_digests"], m2["input_digests"]);
    assert_eq!(m1["seeds"], m2["seeds"]);
}

#[test]
fn exit_codes_distinguish_validation_and_io() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();

    // Missing input file: I/O error, exit 2.
    let out = run(&[
        "bandpower",
        "--raw", d.join("nope.csv").to_str().unwrap(),
        "--out", d.join("o.csv").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2), "missing file should exit 2");

    // Validation error in the data: exit 1.
    let bad = d.join("bad.csv");
    std::fs::write(&bad, "patient_id,condition\n").unwrap();
    let out = run(&[
        "train-ae",
        "--windows", bad.to_str().unwrap(),
        "--out", d.join("m.json").to_str().unwrap(),
        "--report", d.join("r.json").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1), "bad header should exit 1");

    // Unknown subcommand: usage text, exit 1.
    let out = run(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(1));

    // Unknown method name: exit 1.
    let out = run(&[
        "cluster",
        "--embeddings", d.join("nope.csv").to_str().unwrap(),
        "--method", "dbscan",
        "--out", d.join("a.csv").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2), "missing embeddings file first");

    // Help exits 0.
    let out = run(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
}
