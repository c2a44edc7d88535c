//! End-to-end runs of the `relmas` binary on the toy system.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use relmas_cli::report::{from_csv, CurveRow, OverheadRow, ResultRow, SweepRow};
use serde_json::{json, Value};

fn toy_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/toy")
}

/// The toy experiment with absolute input paths, small enough to run in
/// well under a second per command.
fn toy_config() -> Value {
    let mut cfg: Value =
        serde_json::from_str(&std::fs::read_to_string(toy_dir().join("train.json")).unwrap()).unwrap();
    let dir = toy_dir().canonicalize().unwrap();
    cfg["models"] = json!(dir.join("models.json"));
    cfg["cost_table"] = json!(dir.join("costs.csv"));
    cfg["seeds"] = json!([5000]);
    cfg["trainer"]["episodes"] = json!(3);
    cfg["trainer"]["warmup_steps"] = json!(8);
    cfg["trainer"]["batch_size"] = json!(4);
    cfg["trainer"]["eval_interval"] = json!(1);
    cfg["train"]["checkpoint_every"] = json!(1);
    cfg["train"]["eval_seeds"] = json!([1000]);
    cfg.as_object_mut().unwrap().remove("checkpoint");
    cfg
}

fn write_config(dir: &Path, cfg: &Value) -> PathBuf {
    let path = dir.join("config.json");
    std::fs::write(&path, serde_json::to_string_pretty(cfg).unwrap()).unwrap();
    path
}

fn relmas(args: &[&str], config: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_relmas"))
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .env_clear()
        .output()
        .unwrap()
}

fn ok(o: &Output) {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
}

fn read(path: impl AsRef<Path>) -> String {
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn gen_workload_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), &toy_config());
    for out in ["a", "b"] {
        ok(&relmas(&["gen-workload", "--seed", "3"], &config, &dir.path().join(out)));
    }
    let name = "traces/all-uniform-s3.jsonl";
    let a = read(dir.path().join("a").join(name));
    assert_eq!(a, read(dir.path().join("b").join(name)));
    assert!(a.starts_with(r#"{"provenance":"#));
    assert!(a.lines().count() > 1);
}

#[test]
fn zero_duration_writes_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = toy_config();
    cfg["trace"]["duration_cycles"] = json!(0);
    let config = write_config(dir.path(), &cfg);
    ok(&relmas(&["gen-workload"], &config, dir.path()));
    assert_eq!(read(dir.path().join("traces/all-uniform-s5000.jsonl")).lines().count(), 1);
}

#[test]
fn config_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = toy_config();
    cfg["workloads"] = json!(["enormous"]);
    let config = write_config(dir.path(), &cfg);
    assert_eq!(relmas(&["gen-workload"], &config, dir.path()).status.code(), Some(1));

    let missing = dir.path().join("nope.json");
    assert_eq!(relmas(&["compare"], &missing, dir.path()).status.code(), Some(1));

    let bad_flag = Command::new(env!("CARGO_BIN_EXE_relmas")).args(["compare", "--bogus"]).output().unwrap();
    assert_eq!(bad_flag.status.code(), Some(1));

    let config = write_config(dir.path(), &json!({"period_cycles": 100, "typo": 1}));
    assert_eq!(relmas(&["compare"], &config, dir.path()).status.code(), Some(1));
}

#[test]
fn relmas_without_checkpoint_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = toy_config();
    cfg["schedulers"] = json!(["relmas"]);
    let config = write_config(dir.path(), &cfg);
    let o = relmas(&["compare"], &config, dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("checkpoint"));
}

#[test]
fn unwritable_output_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), &toy_config());
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    assert_eq!(relmas(&["gen-workload"], &config, &blocker).status.code(), Some(2));
}

#[test]
fn compare_rows_are_sorted_and_charted() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = toy_config();
    cfg["schedulers"] = json!(["prema-h", "fcfs-h"]);
    let config = write_config(dir.path(), &cfg);
    ok(&relmas(&["compare"], &config, dir.path()));
    let csv = read(dir.path().join("results.csv"));
    assert!(csv.starts_with("scheduler,workload,qos_level,bandwidth,seed,sla_rate,misses,energy_pj,makespan,runtime_ms\n"));
    let rows: Vec<ResultRow> = from_csv(&csv).unwrap();
    let names: Vec<&str> = rows.iter().map(|r| r.scheduler.as_str()).collect();
    assert_eq!(names, ["fcfs-h", "prema-h"]);
    assert!(rows.iter().all(|r| r.runtime_ms.is_none() && (0.0..=1.0).contains(&r.sla_rate)));
    let svg = read(dir.path().join("results.svg"));
    assert_eq!(svg.matches(r#"class="bar""#).count(), 2);
    for r in &rows {
        assert!(svg.contains(&format!(r#"data-scheduler="{}" data-value="{}""#, r.scheduler, r.sla_rate)));
    }
}

#[test]
fn single_bandwidth_sweep_normalizes_to_one() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = toy_config();
    cfg["schedulers"] = json!(["fcfs-h", "herald"]);
    cfg["sweep"] = json!({"bandwidths": ["12.5"]});
    let config = write_config(dir.path(), &cfg);
    ok(&relmas(&["sweep-bandwidth"], &config, dir.path()));
    let rows: Vec<SweepRow> = from_csv(&read(dir.path().join("sweep.csv"))).unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r.normalized_sla == 1.0 && r.bandwidth == "12.5"));
}

#[test]
fn overhead_grid() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = toy_config();
    cfg["overhead"] = json!({"hidden_sizes": [8, 16], "periods": [300, 150]});
    let config = write_config(dir.path(), &cfg);
    ok(&relmas(&["overhead"], &config, dir.path()));
    let rows: Vec<OverheadRow> = from_csv(&read(dir.path().join("overhead.csv"))).unwrap();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r.overhead_percent > 0.0 && r.invocations > 0));
    assert!(read(dir.path().join("overhead.svg")).contains("<polyline"));
}

#[test]
fn train_resume_and_reproducibility() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), &toy_config());
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    ok(&relmas(&["train"], &config, &a));
    ok(&relmas(&["train"], &config, &b));
    assert_eq!(read(a.join("curves.csv")), read(b.join("curves.csv")));
    assert_eq!(std::fs::read(a.join("policy.bin")).unwrap(), std::fs::read(b.join("policy.bin")).unwrap());
    let curves: Vec<CurveRow> = from_csv(&read(a.join("curves.csv"))).unwrap();
    assert_eq!(curves.iter().map(|c| c.episode).collect::<Vec<_>>(), [1, 2, 3]);
    assert!(a.join("checkpoints/ep000002.bin").is_file());

    // resume from episode 2 and train up to 5
    let mut cfg = toy_config();
    cfg["trainer"]["episodes"] = json!(5);
    cfg["train"]["resume"] = json!(a.join("checkpoints/ep000002.bin"));
    let config = write_config(dir.path(), &cfg);
    ok(&relmas(&["train"], &config, &a));
    let curves: Vec<CurveRow> = from_csv(&read(a.join("curves.csv"))).unwrap();
    assert_eq!(curves.iter().map(|c| c.episode).collect::<Vec<_>>(), [1, 2, 3, 4, 5]);
    assert!(a.join("checkpoints/ep000005.bin").is_file());
}

#[test]
fn zero_episodes_writes_the_initial_policy() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = toy_config();
    cfg["trainer"]["episodes"] = json!(0);
    let config = write_config(dir.path(), &cfg);
    ok(&relmas(&["train"], &config, dir.path()));
    assert!(dir.path().join("policy.bin").is_file());
    assert_eq!(read(dir.path().join("curves.csv")).trim(), "");
    assert!(!dir.path().join("checkpoints").exists());

    // the written policy drives the relmas scheduler
    let mut cfg = toy_config();
    cfg["schedulers"] = json!(["relmas"]);
    cfg["checkpoint"] = json!(dir.path().join("policy.bin"));
    let config = write_config(dir.path(), &cfg);
    ok(&relmas(&["compare"], &config, &dir.path().join("cmp")));
    let rows: Vec<ResultRow> = from_csv(&read(dir.path().join("cmp/results.csv"))).unwrap();
    assert_eq!(rows.len(), 1);
}

#[test]
fn config_corpus_never_panics() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus/experiment_config");
    let mut seeds: Vec<PathBuf> = std::fs::read_dir(&dir).unwrap().map(|e| e.unwrap().path()).collect();
    seeds.sort();
    assert!(!seeds.is_empty());
    for path in seeds {
        let text = read(&path);
        let cfg = relmas_cli::ExperimentConfig::from_json_with(&text, Vec::new()).unwrap();
        cfg.validate().unwrap();
        // every prefix is either rejected or accepted, never a panic
        for cut in (0..text.len()).step_by(7) {
            if let Ok(cfg) = relmas_cli::ExperimentConfig::from_json_with(&text[..cut], Vec::new()) {
                let _ = cfg.validate();
            }
        }
    }
}
