//! Run directory: `config.json`, `gen-NNNN.jsonl` per generation, `final.json`,
//! and `telemetry.jsonl` for timings and call counts.
//!
//! A generation file holds one `evaluated` line per member of P_pop, one
//! `mutant` line per Layer-2 rewrite made that generation, and a closing `summary`
//! line. A file without its summary is treated as corrupt. Files are written
//! to a temporary name and renamed, so a kill never leaves half a generation.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::record::{GenerationRecord, GenerationStats};
use super::EngineError;
use crate::config::RunConfig;
use crate::genetic::Layer2Ledger;
use crate::types::{EvaluatedPrompt, Prompt, PromptId};
use crate::Score;

pub const CONFIG_FILE: &str = "config.json";
pub const FINAL_FILE: &str = "final.json";
pub const TELEMETRY_FILE: &str = "telemetry.jsonl";

pub fn generation_file(generation: u32) -> String {
    format!("gen-{generation:04}.jsonl")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SelectedRef {
    id: PromptId,
    rank: Option<usize>,
    #[serde(with = "crate::types::crowding_serde")]
    crowding: Option<Score>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Summary {
    generation: u32,
    config_digest: String,
    selected: Vec<SelectedRef>,
    combine_pool: Vec<Prompt>,
    paraphrase_pool: Vec<Prompt>,
    ledger: Layer2Ledger,
    best_per_objective: Vec<Vec<PromptId>>,
    rng_digest: String,
    stats: GenerationStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum Line {
    Evaluated { prompt: EvaluatedPrompt },
    Mutant { prompt: Prompt },
    Summary(Box<Summary>),
}

/// Contents of `final.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalReport {
    pub config_digest: String,
    pub generations: u32,
    pub front: Vec<EvaluatedPrompt>,
    pub candidates: Vec<EvaluatedPrompt>,
}

/// One line of `telemetry.jsonl`. Kept apart from the records so that
/// results stay byte-identical across runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Telemetry {
    pub generation: u32,
    pub wall_ms: u128,
    pub generate_calls: u64,
    pub score_calls: u64,
    pub suggest_calls: u64,
    pub cache_hits: u64,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> EngineError + '_ {
    move |source| EngineError::Io { path: path.to_path_buf(), source }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), EngineError> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = fs::File::create(&tmp).map_err(io_err(&tmp))?;
        f.write_all(bytes).map_err(io_err(&tmp))?;
        f.sync_all().map_err(io_err(&tmp))?;
    }
    fs::rename(&tmp, path).map_err(io_err(path))
}

#[derive(Debug, Clone)]
pub struct RunDir {
    path: PathBuf,
}

impl RunDir {
    /// Starts a new run directory; refuses one that already holds a run.
    pub fn create(path: &Path, config: &RunConfig) -> Result<Self, EngineError> {
        if path.join(CONFIG_FILE).exists() {
            return Err(EngineError::DirectoryExists(path.to_path_buf()));
        }
        fs::create_dir_all(path).map_err(io_err(path))?;
        let dir = RunDir { path: path.to_path_buf() };
        write_atomic(&dir.path.join(CONFIG_FILE), config.to_json_pretty().as_bytes())?;
        Ok(dir)
    }

    /// Opens an existing run directory and reads its configuration.
    pub fn open(path: &Path) -> Result<(Self, RunConfig), EngineError> {
        let config_path = path.join(CONFIG_FILE);
        if !config_path.exists() {
            return Err(EngineError::MissingState(config_path));
        }
        let json = fs::read_to_string(&config_path).map_err(io_err(&config_path))?;
        let config = RunConfig::from_json(&json).map_err(|e| EngineError::Corrupt {
            path: config_path.clone(),
            last_valid: None,
            reason: e.to_string(),
        })?;
        Ok((RunDir { path: path.to_path_buf() }, config))
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn write_generation(&self, record: &GenerationRecord, config_digest: &str) -> Result<(), EngineError> {
        let mut out = String::new();
        let mut push = |line: &Line| {
            out.push_str(&serde_json::to_string(line).expect("record serializes"));
            out.push('\n');
        };
        for ev in &record.population {
            push(&Line::Evaluated { prompt: ev.clone() });
        }
        for p in &record.layer2_mutants {
            push(&Line::Mutant { prompt: p.clone() });
        }
        push(&Line::Summary(Box::new(Summary {
            generation: record.generation,
            config_digest: config_digest.to_string(),
            selected: record
                .selected
                .iter()
                .map(|s| SelectedRef { id: s.prompt.id, rank: s.pareto_rank, crowding: s.crowding })
                .collect(),
            combine_pool: record.combine_pool.clone(),
            paraphrase_pool: record.paraphrase_pool.clone(),
            ledger: record.ledger.clone(),
            best_per_objective: record.best_per_objective.clone(),
            rng_digest: record.rng_digest.clone(),
            stats: record.stats.clone(),
        })));
        write_atomic(&self.path.join(generation_file(record.generation)), out.as_bytes())
    }

    fn read_generation(&self, generation: u32, config_digest: &str) -> Result<GenerationRecord, String> {
        let path = self.path.join(generation_file(generation));
        let file = fs::File::open(&path).map_err(|e| e.to_string())?;
        let mut population = Vec::new();
        let mut mutants = Vec::new();
        let mut summary: Option<Summary> = None;
        for (n, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| e.to_string())?;
            if line.trim().is_empty() {
                continue;
            }
            if summary.is_some() {
                return Err(format!("line {} follows the summary", n + 1));
            }
            match serde_json::from_str::<Line>(&line).map_err(|e| format!("line {}: {e}", n + 1))? {
                Line::Evaluated { prompt } => population.push(prompt),
                Line::Mutant { prompt } => mutants.push(prompt),
                Line::Summary(s) => summary = Some(*s),
            }
        }
        let s = summary.ok_or("summary line missing")?;
        if s.generation != generation {
            return Err(format!("summary names generation {}", s.generation));
        }
        if s.config_digest != config_digest {
            return Err("written under a different configuration".to_string());
        }
        let by_id: BTreeMap<PromptId, &EvaluatedPrompt> = population.iter().map(|e| (e.prompt.id, e)).collect();
        let selected = s
            .selected
            .iter()
            .map(|r| {
                let mut ev = (*by_id.get(&r.id).ok_or(format!("selected prompt {} not in population", r.id))?).clone();
                ev.pareto_rank = r.rank;
                ev.crowding = r.crowding;
                Ok(ev)
            })
            .collect::<Result<Vec<_>, String>>()?;
        Ok(GenerationRecord {
            generation,
            population,
            layer2_mutants: mutants,
            selected,
            combine_pool: s.combine_pool,
            paraphrase_pool: s.paraphrase_pool,
            ledger: s.ledger,
            best_per_objective: s.best_per_objective,
            rng_digest: s.rng_digest,
            stats: s.stats,
        })
    }

    /// Loads consecutive generation records from 0 until the first missing file.
    ///
    /// A file that cannot be read back completely is an error naming the last
    /// generation that loaded cleanly.
    pub fn load_generations(&self, config_digest: &str) -> Result<Vec<GenerationRecord>, EngineError> {
        let mut out: Vec<GenerationRecord> = Vec::new();
        for generation in 0u32.. {
            let path = self.path.join(generation_file(generation));
            if !path.exists() {
                break;
            }
            match self.read_generation(generation, config_digest) {
                Ok(record) => out.push(record),
                Err(reason) => {
                    return Err(EngineError::Corrupt {
                        path,
                        last_valid: out.last().map(|r| r.generation),
                        reason,
                    })
                }
            }
        }
        Ok(out)
    }

    pub fn write_final(&self, report: &FinalReport) -> Result<(), EngineError> {
        let json = serde_json::to_string_pretty(report).expect("report serializes");
        write_atomic(&self.path.join(FINAL_FILE), format!("{json}\n").as_bytes())
    }

    pub fn read_final(&self) -> Result<FinalReport, EngineError> {
        read_final(&self.path)
    }

    pub fn append_telemetry(&self, entry: &Telemetry) -> Result<(), EngineError> {
        let path = self.path.join(TELEMETRY_FILE);
        let mut f = fs::OpenOptions::new().create(true).append(true).open(&path).map_err(io_err(&path))?;
        writeln!(f, "{}", serde_json::to_string(entry).expect("telemetry serializes")).map_err(io_err(&path))
    }
}

/// Reads `final.json` from a run directory.
pub fn read_final(dir: &Path) -> Result<FinalReport, EngineError> {
    let path = dir.join(FINAL_FILE);
    if !path.exists() {
        return Err(EngineError::MissingState(path));
    }
    let json = fs::read_to_string(&path).map_err(io_err(&path))?;
    serde_json::from_str(&json).map_err(|e| EngineError::Corrupt { path, last_valid: None, reason: e.to_string() })
}
