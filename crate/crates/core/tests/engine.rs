use std::fs;
use std::path::Path;

use mopo::backends::Backends;
use mopo::config::RunConfig;
use mopo::engine::{ablate, load_result, resume, run, Ablate, EngineError, RunOptions};
use mopo::types::OperatorKind;

fn small() -> RunConfig {
    RunConfig { generations: 3, max_population: 60, rng_seed: 17, ..RunConfig::default() }
}

fn go(config: &RunConfig, dir: Option<&Path>) -> Result<mopo::engine::RunResult, EngineError> {
    run(config, &Backends::from_config(config), dir, RunOptions::default())
}

#[test]
fn same_seed_same_result() {
    let config = small();
    let a = go(&config, None).unwrap();
    let b = go(&config, None).unwrap();
    assert_eq!(a.to_json(), b.to_json());
    assert_eq!(a.generations.len(), 3);
    assert!(a.generations.iter().all(|g| g.stats.population <= 60));
}

#[test]
fn different_seed_different_result() {
    let a = go(&small(), None).unwrap();
    let b = go(&RunConfig { rng_seed: 18, ..small() }, None).unwrap();
    assert_ne!(a.to_json(), b.to_json());
}

#[test]
fn persisted_run_loads_back_identically() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("run");
    let result = go(&small(), Some(&dir)).unwrap();
    for g in 0..3 {
        assert!(dir.join(format!("gen-{g:04}.jsonl")).exists());
    }
    assert_eq!(load_result(&dir).unwrap().to_json(), result.to_json());
    let telemetry = fs::read_to_string(dir.join("telemetry.jsonl")).unwrap();
    assert_eq!(telemetry.lines().count(), 3);
}

#[test]
fn refuses_to_overwrite_a_run() {
    let tmp = tempfile::tempdir().unwrap();
    go(&small(), Some(tmp.path())).unwrap();
    let err = go(&small(), Some(tmp.path())).unwrap_err();
    assert!(matches!(err, EngineError::DirectoryExists(_)));
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn halted_run_resumes_to_the_same_result() {
    let config = small();
    let full = go(&config, None).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    let backends = Backends::from_config(&config);
    let options = RunOptions { halt_after: Some(0), on_generation: None };
    let err = run(&config, &backends, Some(tmp.path()), options).unwrap_err();
    assert!(matches!(err, EngineError::Halted(0)));
    assert_eq!(err.exit_code(), 3);
    let resumed = resume(tmp.path(), &backends, Some(&config), RunOptions::default()).unwrap();
    assert_eq!(resumed.to_json(), full.to_json());
}

#[test]
fn resume_rejects_a_different_config() {
    let config = small();
    let tmp = tempfile::tempdir().unwrap();
    go(&config, Some(tmp.path())).unwrap();
    let other = RunConfig { rng_seed: 99, ..config };
    let err = resume(tmp.path(), &Backends::from_config(&other), Some(&other), RunOptions::default()).unwrap_err();
    assert!(matches!(err, EngineError::ConfigMismatch { .. }));
}

#[test]
fn truncated_generation_file_is_corrupt() {
    let config = small();
    let tmp = tempfile::tempdir().unwrap();
    go(&config, Some(tmp.path())).unwrap();
    let path = tmp.path().join("gen-0001.jsonl");
    let text = fs::read_to_string(&path).unwrap();
    let cut: Vec<&str> = text.lines().collect();
    fs::write(&path, cut[..cut.len() - 1].join("\n")).unwrap();
    match resume(tmp.path(), &Backends::from_config(&config), None, RunOptions::default()).unwrap_err() {
        EngineError::Corrupt { last_valid, .. } => assert_eq!(last_valid, Some(0)),
        other => panic!("{other}"),
    }
}

#[test]
fn resume_without_state_is_reported() {
    let tmp = tempfile::tempdir().unwrap();
    let err = resume(tmp.path(), &Backends::from_config(&small()), None, RunOptions::default()).unwrap_err();
    assert!(matches!(err, EngineError::MissingState(_)));
    assert_eq!(err.exit_code(), 4);
}

#[test]
fn ablations_silence_their_operator() {
    let config = small();
    let no_combine = go(&ablate(&config, Ablate::NoCombine).unwrap(), None).unwrap();
    let no_paraphrase = go(&ablate(&config, Ablate::NoParaphrase).unwrap(), None).unwrap();
    let kinds = |r: &mopo::engine::RunResult| -> Vec<OperatorKind> {
        r.generations.iter().flat_map(|g| g.population.iter().map(|e| e.prompt.operator_kind)).collect()
    };
    assert!(!kinds(&no_combine).contains(&OperatorKind::Combine));
    assert!(!kinds(&no_paraphrase).iter().any(|k| *k != OperatorKind::Seed && *k != OperatorKind::Combine));
    assert!(matches!(ablate(&config, Ablate::Both), Err(EngineError::Ablation(_))));
}

#[test]
fn callback_sees_every_generation() {
    let config = small();
    let mut seen = Vec::new();
    let mut record = |g: &mopo::engine::GenerationRecord| seen.push(g.generation);
    let options = RunOptions { halt_after: None, on_generation: Some(&mut record) };
    run(&config, &Backends::from_config(&config), None, options).unwrap();
    assert_eq!(seen, vec![0, 1, 2]);
}
