use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mopo::config::RunConfig;
use mopo_cli::ExportTable;

fn mopo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mopo")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn small_config(dir: &Path) -> PathBuf {
    let config = RunConfig { generations: 2, max_population: 40, ..RunConfig::default() };
    let path = dir.join("config.small.json");
    fs::write(&path, config.to_json_pretty()).unwrap();
    path
}

fn finished_run(tmp: &Path) -> PathBuf {
    let config = small_config(tmp);
    let out = tmp.join("run");
    let o = mopo(&["run", "--config", config.to_str().unwrap(), "--mock", "--seed", "7", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    out
}

#[test]
fn repeated_runs_write_identical_final_json() {
    let tmp = tempfile::tempdir().unwrap();
    let config = small_config(tmp.path());
    let mut finals = Vec::new();
    for name in ["a", "b"] {
        let out = tmp.path().join(name);
        let o = mopo(&["run", "--config", config.to_str().unwrap(), "--mock", "--seed", "7", "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
        let lines: Vec<String> = stdout(&o).lines().map(String::from).collect();
        assert!(lines[0].starts_with("gen   0  pop"), "{lines:?}");
        assert!(lines[1].starts_with("gen   1  pop"));
        finals.push(fs::read(out.join("final.json")).unwrap());
    }
    assert_eq!(finals[0], finals[1]);
}

#[test]
fn disabling_both_operators_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let config = small_config(tmp.path());
    let o = mopo(&["run", "--config", config.to_str().unwrap(), "--no-combine", "--no-paraphrase"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unreadable_config_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("bad.json");
    fs::write(&path, "{ not json").unwrap();
    assert_eq!(mopo(&["run", "--config", path.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn existing_run_needs_force() {
    let tmp = tempfile::tempdir().unwrap();
    let out = finished_run(tmp.path());
    let config = small_config(tmp.path());
    let base = ["run", "--config", config.to_str().unwrap(), "--mock", "--seed", "7", "--out", out.to_str().unwrap()];
    assert_eq!(mopo(&base).status.code(), Some(2));
    let mut forced = base.to_vec();
    forced.push("--force");
    assert_eq!(mopo(&forced).status.code(), Some(0));
}

#[test]
fn halted_run_resumes_to_the_same_final_json() {
    let tmp = tempfile::tempdir().unwrap();
    let reference = finished_run(tmp.path());
    let config = small_config(tmp.path());
    let out = tmp.path().join("halted");
    let o = mopo(&[
        "run", "--config", config.to_str().unwrap(), "--mock", "--seed", "7", "--out", out.to_str().unwrap(), "--halt-after", "0",
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(!out.join("final.json").exists());
    let o = mopo(&["run", "--resume", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read(out.join("final.json")).unwrap(), fs::read(reference.join("final.json")).unwrap());
}

#[test]
fn front_exports_every_format() {
    let tmp = tempfile::tempdir().unwrap();
    let run = finished_run(tmp.path());
    let dir = run.to_str().unwrap();
    let tsv = stdout(&mopo(&["front", dir]));
    assert!(tsv.starts_with("id\ttext\tisear\ttec\taffective_text\taverage\tpareto_rank\toperator_kind\tgeneration_born\n"));
    assert_eq!(tsv, stdout(&mopo(&["front", dir])));

    let json = stdout(&mopo(&["front", dir, "--format", "json"]));
    let table: ExportTable = serde_json::from_str(&json).unwrap();
    let mut again = Vec::new();
    table.write(mopo_cli::Format::Json, &mut again).unwrap();
    assert_eq!(String::from_utf8(again).unwrap(), json);

    let balanced: ExportTable = serde_json::from_str(&stdout(&mopo(&["front", dir, "--format", "json", "--balanced"]))).unwrap();
    let mins: Vec<f64> = balanced.rows.iter().map(|r| r.scores.iter().copied().fold(1.0, f64::min)).collect();
    assert!(mins.windows(2).all(|w| w[0] >= w[1]));

    let by_tec: ExportTable =
        serde_json::from_str(&stdout(&mopo(&["front", dir, "--format", "json", "--objective", "tec"]))).unwrap();
    assert!(by_tec.rows.windows(2).all(|w| w[0].scores[1] >= w[1].scores[1]));
    assert_eq!(mopo(&["front", dir, "--objective", "nope"]).status.code(), Some(2));
}

#[test]
fn front_without_final_json_is_exit_4() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(mopo(&["front", tmp.path().to_str().unwrap()]).status.code(), Some(4));
}

#[test]
fn stats_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let run = finished_run(tmp.path());
    let dir = run.to_str().unwrap();
    let hv = stdout(&mopo(&["stats", dir, "--table", "hypervolume"]));
    assert_eq!(hv.lines().count(), 3);
    let ops = stdout(&mopo(&["stats", dir, "--table", "operators"]));
    for line in ops.lines().skip(1) {
        let total: f64 = line.split(',').skip(1).map(|v| v.parse::<f64>().unwrap()).sum();
        assert!((total - 1.0).abs() < 1e-9, "{line}");
    }
    let out = tmp.path().join("stats");
    assert_eq!(mopo(&["stats", dir, "--out", out.to_str().unwrap()]).status.code(), Some(0));
    for name in ["operators", "fitness", "hypervolume", "ledger"] {
        assert!(out.join(format!("{name}.csv")).exists());
    }
    assert_eq!(mopo(&["stats", tmp.path().join("empty").to_str().unwrap()]).status.code(), Some(4));
}
