use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_localrules"))
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().expect("binary runs")
}

fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").canonicalize().unwrap()
}

fn write_config(dir: &Path, datasets: &str, out: &str) -> PathBuf {
    let path = dir.join("run.conf");
    let text = format!(
        "seed = 11\ndatasets = {datasets}\ndata_dir = {}\nout_dir = {out}\n\
         strategies = rm1d-l2lr, rf\nc_grid = 1\ntrees_grid = 10\nsplits = 2\nfolds = 2\nsynthetic_n = 150\n",
        data_dir().display()
    );
    std::fs::write(&path, text).unwrap();
    path
}

fn last_log(dir: &Path) -> serde_json::Value {
    let text = std::fs::read_to_string(dir.join("runlog.jsonl")).expect("run log written");
    serde_json::from_str(text.lines().last().unwrap()).unwrap()
}

#[test]
fn synth_writes_csv_and_schema() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(tmp.path(), &["--seed", "3", "synth", "--n", "500", "--out", "s.csv"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(tmp.path().join("s.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "x1,x2,x3,x4,y");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 500);
    assert!(rows.iter().all(|r| r.split(',').count() == 5));
    assert!(tmp.path().join("s.schema").is_file());
    let log = last_log(tmp.path());
    assert_eq!(log["command"], "synth");
    assert_eq!(log["exit_code"], 0);
}

#[test]
fn synth_without_seed_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(tmp.path(), &["synth", "--out", "s.csv"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn mine_finds_the_categorical_class_two_rule() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(run(tmp.path(), &["--seed", "1", "synth", "--n", "500", "--out", "s.csv"]).status.success());
    let out = run(tmp.path(), &["mine", "--data", "s.csv", "--out", "r.jsonl"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.lines().any(|l| l == "x3 = {1} => 2"), "{stdout}");
    let rules = std::fs::read_to_string(tmp.path().join("r.jsonl")).unwrap();
    assert_eq!(rules.lines().count(), stdout.lines().filter(|l| l.contains(" => ")).count());
}

#[test]
fn transform_and_train_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    assert!(run(d, &["--seed", "1", "synth", "--n", "300", "--out", "s.csv"]).status.success());
    assert!(run(d, &["mine", "--data", "s.csv", "--out", "r.jsonl"]).status.success());
    let out = run(d, &["transform", "--data", "s.csv", "--rules", "r.jsonl", "--out", "f.csv"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = run(d, &["--seed", "1", "train", "--features", "f.csv", "--model", "l2lr", "--out", "m.json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(d.join("m.json").is_file());
    assert_eq!(last_log(d)["command"], "train");
}

#[test]
fn missing_data_file_is_a_data_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(tmp.path(), &["mine", "--data", "absent.csv", "--out", "r.jsonl"]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(last_log(tmp.path())["exit_code"], 3);
}

#[test]
fn unknown_dataset_names_the_key() {
    let tmp = tempfile::tempdir().unwrap();
    let conf = write_config(tmp.path(), "iris, no-such-set", "out");
    let out = run(tmp.path(), &["--config", conf.to_str().unwrap(), "benchmark"]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("no-such-set"), "{stderr}");
}

#[test]
fn benchmark_reruns_are_identical_and_report_rebuilds_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let conf = write_config(d, "iris", "out");
    let conf = conf.to_str().unwrap();
    for (jobs, out_dir) in [("1", "a"), ("2", "b")] {
        let out = run(d, &["--config", conf, "--jobs", jobs, "--out-dir", out_dir, "benchmark"]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for f in ["records.jsonl", "level1.csv", "rules.jsonl"] {
        let a = std::fs::read(d.join("a").join(f)).unwrap();
        let b = std::fs::read(d.join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f} differs between runs");
    }
    let out = run(d, &["report", "--in", "a", "--out-dir", "c"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["level1.csv", "complexity.csv", "stability.csv", "splits.csv"] {
        assert_eq!(std::fs::read(d.join("a").join(f)).unwrap(), std::fs::read(d.join("c").join(f)).unwrap(), "{f}");
    }
}
