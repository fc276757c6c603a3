use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const SMALL: &[&str] = &[
    "--set", "seen_graphs=1",
    "--set", "unseen_graphs=1",
    "--set", "n_nodes=15",
    "--set", "n_train_per_world=6",
    "--set", "n_val_seen_per_world=3",
    "--set", "n_val_unseen_per_world=4",
    "--set", "hidden=8",
    "--set", "embed=4",
    "--set", "epochs=2",
];

fn leo(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_leo"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .unwrap()
}

fn ok(out: &Path, args: &[&str]) -> String {
    let o = leo(out, args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout).unwrap()
}

/// The single JSON error line a failing command writes to stderr.
fn error_of(o: &Output) -> Value {
    assert!(!o.status.success());
    let err = String::from_utf8(o.stderr.clone()).unwrap();
    assert_eq!(err.trim_end().lines().count(), 1, "{err}");
    serde_json::from_str(err.trim_end()).unwrap()
}

fn with_small<'a>(cmd: &[&'a str]) -> Vec<&'a str> {
    let mut v = cmd.to_vec();
    v.extend_from_slice(SMALL);
    v
}

fn runs(out: &Path) -> Vec<PathBuf> {
    let mut v: Vec<_> = fs::read_dir(out).unwrap().map(|e| e.unwrap().path()).collect();
    v.sort();
    v
}

#[test]
fn bad_inputs_give_one_json_error_line() {
    let dir = tempfile::tempdir().unwrap();
    let e = error_of(&leo(dir.path(), &["train", "--set", "epoch=3"]));
    assert_eq!(e["error"], "usage");
    assert!(e["hint"].as_str().unwrap().contains("epochs"));

    let e = error_of(&leo(dir.path(), &["train", "--set", "lr"]));
    assert_eq!(e["error"], "usage");

    let e = error_of(&leo(dir.path(), &["eval", "--checkpoint", "missing.leo", "--split", "train", "--setting", "B"]));
    assert_eq!(e["error"], "io");
    assert!(e["message"].as_str().unwrap().contains("missing.leo"));

    let junk = dir.path().join("junk.leo");
    fs::write(&junk, b"not a checkpoint").unwrap();
    let j = junk.to_str().unwrap();
    let e = error_of(&leo(dir.path(), &["eval", "--checkpoint", j, "--split", "train", "--setting", "B"]));
    assert_eq!(e["error"], "parse");

    let e = error_of(&leo(dir.path(), &["ablate", "--axis", "depth"]));
    assert_eq!(e["error"], "usage");

    let e = error_of(&leo(dir.path(), &["--set", "scheme=concat", "--set", "m=1", "train"]));
    assert_eq!(e["error"], "usage");
}

#[test]
fn train_then_eval_writes_a_complete_run() {
    let dir = tempfile::tempdir().unwrap();
    let line = ok(dir.path(), &with_small(&["--seed", "4", "train"]));
    assert!(line.starts_with("trained 2 epochs"), "{line}");
    let run = runs(dir.path()).pop().unwrap();
    assert!(run.file_name().unwrap().to_str().unwrap().ends_with("_seed4"));
    let ckpt = run.join("checkpoint.leo");
    let c = ckpt.to_str().unwrap();

    let line = ok(dir.path(), &["eval", "--checkpoint", c, "--split", "val_unseen", "--setting", "B", "--attention"]);
    assert!(line.contains("SR"), "{line}");
    let ev = runs(dir.path()).into_iter().find(|p| p != &run).unwrap();
    let summary: Value = serde_json::from_str(&fs::read_to_string(ev.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["n"], 4);
    assert!(summary["SPL"].as_f64().unwrap() <= summary["SR"].as_f64().unwrap());
    let episodes = fs::read_to_string(ev.join("episodes.csv")).unwrap();
    assert_eq!(episodes.lines().count(), 5);
    assert!(fs::read_dir(ev.join("attention")).unwrap().count() > 0);

    let manifest: Value = serde_json::from_str(&fs::read_to_string(ev.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["complete"], true);
    assert!(manifest["inputs"][c].is_string());

    // Setting A on M=3 data runs three episodes per trajectory
    ok(dir.path(), &["eval", "--checkpoint", c, "--split", "val_unseen", "--setting", "A"]);
    let ev_a = runs(dir.path()).into_iter().find(|p| p != &run && p != &ev).unwrap();
    let summary: Value = serde_json::from_str(&fs::read_to_string(ev_a.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["n"], 12);
}

#[test]
fn single_instruction_settings_agree() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = with_small(&["train"]);
    args.extend(["--set", "m=1", "--set", "paradigm=baseline_iid"]);
    ok(dir.path(), &args);
    let ckpt = runs(dir.path()).pop().unwrap().join("checkpoint.leo");
    let c = ckpt.to_str().unwrap();
    let metrics = |line: String| line.split(" (").next().unwrap().split(": ").nth(1).unwrap().to_string();
    let a = metrics(ok(dir.path(), &["eval", "--checkpoint", c, "--split", "val_seen", "--setting", "A"]));
    let b = metrics(ok(dir.path(), &["eval", "--checkpoint", c, "--split", "val_seen", "--setting", "B"]));
    assert_eq!(a, b);
    assert!(a.starts_with("n 3 "), "{a}");
}

#[test]
fn data_directory_feeds_training() {
    let dir = tempfile::tempdir().unwrap();
    let line = ok(dir.path(), &with_small(&["gen-data"]));
    let data = line.trim().rsplit(' ').next().unwrap().to_string();
    assert!(Path::new(&data).join("dataset.jsonl").exists());
    let direct = ok(dir.path(), &with_small(&["train"]));
    let loaded = ok(dir.path(), &with_small(&["train", "--data", &data]));
    // same corpus, same seed: same losses
    let losses = |s: &str| s.split(", checkpoint").next().unwrap().to_string();
    assert_eq!(losses(&direct), losses(&loaded));
}

#[test]
fn ablation_table_has_a_row_per_variant_seed_and_setting() {
    let dir = tempfile::tempdir().unwrap();
    let line = ok(dir.path(), &with_small(&["ablate", "--axis", "paradigm", "--seeds", "2"]));
    assert!(line.starts_with("4 runs"), "{line}");
    let run = runs(dir.path()).pop().unwrap();
    let mut rdr = csv::Reader::from_path(run.join("ablation.csv")).unwrap();
    let headers = rdr.headers().unwrap().clone();
    assert_eq!(&headers[0], "axis");
    assert!(headers.iter().any(|h| h == "val_unseen_SPL"));
    let rows: Vec<_> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 2 * 2 * 2);
    for r in &rows {
        assert_eq!(&r[0], "paradigm");
        assert!(["baseline_iid", "leo_joint"].contains(&&r[1]));
    }

    let line = ok(dir.path(), &with_small(&["ablate", "--axis", "aggregation", "--seeds", "1"]));
    assert!(line.starts_with("3 runs"), "{line}");
}

#[test]
fn checks_print_a_verdict_line() {
    let dir = tempfile::tempdir().unwrap();
    let line = ok(dir.path(), &["gradcheck", "--instances", "5"]);
    assert!(line.starts_with("PASS, max rel err"), "{line}");
    let line = ok(dir.path(), &["entropy-check", "--n", "50"]);
    assert!(line.starts_with("PASS, 50 processes, 0 violations"), "{line}");
    for run in runs(dir.path()) {
        let m: Value = serde_json::from_str(&fs::read_to_string(run.join("manifest.json")).unwrap()).unwrap();
        assert_eq!(m["complete"], true);
    }
}
