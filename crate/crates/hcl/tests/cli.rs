use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use hcl::record::{ReportRow, RunRecord};

const SMALL: &str = "\
dataset = prototypes
proto_rows = 160
proto_features = 12
proto_classes = 4
labeled = 40
epochs = 3
encoder_hidden = 16
latent_dim = 8
classifier_hidden = none
seeds = 0
";

fn hcl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hcl")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, extra: &str) -> String {
    let path = dir.join("run.cfg");
    fs::write(&path, format!("{SMALL}out = {}\n{extra}", dir.join("out").display())).unwrap();
    path.display().to_string()
}

#[test]
fn train_then_eval_reproduces_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let out = hcl(&["train", "--config", &cfg, "--method", "hcl"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let run = dir.path().join("out/hcl-seed0");
    let record: RunRecord = serde_json::from_str(&fs::read_to_string(run.join("record.json")).unwrap()).unwrap();
    for file in ["checkpoint.json", "trace.csv", "metrics.csv"] {
        let bytes = fs::read(run.join(file)).unwrap();
        assert_eq!(record.checksums[file], hcl::io::sha256_hex(&bytes), "{file}");
    }
    assert_eq!(record.trace.len(), 3);

    let ck = run.join("checkpoint.json").display().to_string();
    let out = hcl(&["eval", "--config", &cfg, "--checkpoint", &ck]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let eval: ReportRow = serde_json::from_str(&fs::read_to_string(dir.path().join("out/eval.json")).unwrap()).unwrap();
    assert_eq!(eval, record.report);
}

#[test]
fn recorded_config_replays_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    assert!(hcl(&["train", "--config", &cfg, "--method", "dnn"]).status.success());
    let first = fs::read_to_string(dir.path().join("out/metrics.csv")).unwrap();
    let record: RunRecord =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/dnn-seed0/record.json")).unwrap()).unwrap();
    let mut replay = hcl::config::RunConfig::parse(&record.config_text()).unwrap();
    replay.out = dir.path().join("replay");
    hcl::commands::cmd_train(&replay).unwrap();
    let second = fs::read_to_string(dir.path().join("replay/metrics.csv")).unwrap();
    assert_eq!(first, second);
}

#[test]
fn config_errors_abort_before_any_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "batch_size = 12\n");
    let out = hcl(&["train", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("batch_size"));
    assert!(!dir.path().join("out").exists());

    let cfg = write_config(dir.path(), "");
    let out = hcl(&["train", "--config", &cfg, "--alpha", "-1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("alpha"));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn missing_manifest_is_reported_by_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let text = fs::read_to_string(&cfg).unwrap().replace("dataset = prototypes", "dataset = nowhere/manifest.txt");
    fs::write(&cfg, text).unwrap();
    let out = hcl(&["train", "--config", &cfg]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("manifest.txt"));
}
