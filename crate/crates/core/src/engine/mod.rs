//! The generation loop: combine, paraphrase, evaluate, select, repeat; then a
//! final selection over every generation's survivors.
//!
//! Every generation is persisted before the next begins. All randomness is
//! drawn from streams derived from (run seed, generation, purpose), so a run
//! can resume from its last complete generation without saving rng state.

pub mod record;
pub mod store;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Instant;

use log::{info, warn};
use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::backends::{
    BackendError, Backends, GenerateRequest, GenerateResponse, Generator, ScoreRequest, ScoreResponse, Scorer,
    SuggestRequest, SuggestResponse, Suggester,
};
use crate::config::{validate_config, RunConfig};
use crate::fitness::{evaluate, FitnessError};
use crate::genetic::{
    combine, mutate_layer2, pair_sample, select_layer2, sentence_paraphrase, word_paraphrase, Batch, Layer2Ledger,
    Origin, RankScore, TextSet,
};
use crate::pareto::{pareto_selection, ParetoError};
use crate::text;
use crate::types::{stable_hash, EvaluatedPrompt, Prompt, PromptId, PromptLayer};
use crate::Score;

pub use record::{
    balanced_best, best_scores, front_hypervolume, operator_contribution, shares, GenerationRecord, GenerationStats,
    OperatorContribution, RunResult, Shares,
};
pub use store::{read_final, FinalReport, RunDir, Telemetry};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("invalid configuration: {}", .0.join("; "))]
    InvalidConfig(Vec<String>),
    #[error("{0} already holds a run (use --force to replace it)")]
    DirectoryExists(PathBuf),
    #[error("configuration digest {found} does not match the run's {expected}")]
    ConfigMismatch { expected: String, found: String },
    #[error("backend failure in generation {generation}: {source}")]
    Backend {
        generation: u32,
        last_complete: Option<u32>,
        #[source]
        source: FitnessError,
    },
    #[error("corrupt run state at {}: {reason} (last valid generation: {})", path.display(), last_valid.map_or("none".to_string(), |g| g.to_string()))]
    Corrupt { path: PathBuf, last_valid: Option<u32>, reason: String },
    #[error("missing run state: {}", .0.display())]
    MissingState(PathBuf),
    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("stopped after generation {0} as requested")]
    Halted(u32),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("{0}")]
    Ablation(String),
}

impl EngineError {
    /// 0 success, 2 config invalid, 3 backend abort (resumable), 4 corrupt state.
    pub fn exit_code(&self) -> i32 {
        match self {
            EngineError::InvalidConfig(_)
            | EngineError::DirectoryExists(_)
            | EngineError::ConfigMismatch { .. }
            | EngineError::Ablation(_) => 2,
            EngineError::Backend { .. } | EngineError::Halted(_) => 3,
            EngineError::Corrupt { .. } | EngineError::MissingState(_) | EngineError::Io { .. } => 4,
            EngineError::Invariant(_) => 1,
        }
    }
}

impl From<ParetoError> for EngineError {
    fn from(e: ParetoError) -> Self {
        EngineError::Invariant(e.to_string())
    }
}

/// Operator to switch off for an ablation run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ablate {
    NoCombine,
    NoParaphrase,
    Both,
}

/// Returns `config` with one operator disabled. Disabling both is refused.
pub fn ablate(config: &RunConfig, which: Ablate) -> Result<RunConfig, EngineError> {
    let mut out = config.clone();
    match which {
        Ablate::NoCombine => out.ablation.enable_combine = false,
        Ablate::NoParaphrase => out.ablation.enable_paraphrase = false,
        Ablate::Both => return Err(EngineError::Ablation("cannot disable both combine and paraphrase".into())),
    }
    if !out.ablation.enable_combine && !out.ablation.enable_paraphrase {
        return Err(EngineError::Ablation("ablation would leave no operator enabled".into()));
    }
    Ok(out)
}

/// Knobs that do not affect results.
#[derive(Default)]
pub struct RunOptions<'a> {
    /// Stop with [`EngineError::Halted`] once this generation is persisted.
    pub halt_after: Option<u32>,
    /// Called after each generation is persisted.
    pub on_generation: Option<&'a mut (dyn FnMut(&GenerationRecord) + Send)>,
}

#[derive(Default)]
struct Counters {
    generate: AtomicU64,
    score: AtomicU64,
    suggest: AtomicU64,
    cache_hits: AtomicU64,
}

impl Counters {
    fn take(&self) -> [u64; 4] {
        [&self.generate, &self.score, &self.suggest, &self.cache_hits].map(|c| c.swap(0, Ordering::Relaxed))
    }
}

struct Counted<T: ?Sized> {
    inner: Arc<T>,
    counters: Arc<Counters>,
}

impl Generator for Counted<dyn Generator> {
    fn generate(&self, r: &GenerateRequest) -> Result<GenerateResponse, BackendError> {
        self.counters.generate.fetch_add(1, Ordering::Relaxed);
        self.inner.generate(r)
    }
}

impl Scorer for Counted<dyn Scorer> {
    fn score(&self, r: &ScoreRequest) -> Result<ScoreResponse, BackendError> {
        self.counters.score.fetch_add(1, Ordering::Relaxed);
        self.inner.score(r)
    }
}

impl Suggester for Counted<dyn Suggester> {
    fn suggest(&self, r: &SuggestRequest) -> Result<SuggestResponse, BackendError> {
        self.counters.suggest.fetch_add(1, Ordering::Relaxed);
        self.inner.suggest(r)
    }
}

fn counted(backends: &Backends, counters: &Arc<Counters>) -> Backends {
    Backends {
        generator: Arc::new(Counted { inner: backends.generator.clone(), counters: counters.clone() }),
        suggester: Arc::new(Counted { inner: backends.suggester.clone(), counters: counters.clone() }),
        scorers: backends
            .scorers
            .iter()
            .map(|s| Arc::new(Counted { inner: s.clone(), counters: counters.clone() }) as Arc<dyn Scorer>)
            .collect(),
        deterministic: backends.deterministic,
    }
}

/// Random stream for one purpose within one generation.
pub fn stream(run_seed: u64, generation: u32, purpose: &str, extra: &[u8]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(stable_hash(&[
        b"rng",
        &run_seed.to_le_bytes(),
        &generation.to_le_bytes(),
        purpose.as_bytes(),
        extra,
    ]))
}

fn rng_digest(run_seed: u64, generation: u32) -> String {
    format!("{:016x}", stable_hash(&[b"rng", &run_seed.to_le_bytes(), &generation.to_le_bytes()]))
}

/// Initial prompts of every layer.
pub fn seed_prompts(config: &RunConfig) -> Vec<Prompt> {
    let layer = |l: PromptLayer, texts: &[String]| -> Vec<Prompt> {
        texts.iter().enumerate().map(|(i, t)| Prompt::seed(config.rng_seed, l, i, t.as_str())).collect()
    };
    let mut out = layer(PromptLayer::Layer1, &config.seed_prompts);
    out.extend(layer(PromptLayer::Layer2Combine, &config.combine_prompts));
    out.extend(layer(PromptLayer::Layer2Paraphrase, &config.paraphrase_prompts));
    out.extend(layer(PromptLayer::Layer3Fixed, &config.fixed_prompts));
    out
}

/// Adds `selected` to P_cands; a prompt whose normalized text is already
/// present replaces it only with a strictly higher mean fitness.
fn accumulate(candidates: &mut Vec<EvaluatedPrompt>, selected: &[EvaluatedPrompt]) {
    for s in selected {
        let key = text::normalize(&s.prompt.text);
        match candidates.iter_mut().find(|c| text::normalize(&c.prompt.text) == key) {
            Some(existing) if s.fitness.mean() > existing.fitness.mean() => *existing = s.clone(),
            Some(_) => {}
            None => candidates.push(s.clone()),
        }
    }
}

/// Top `k` per objective by (score desc, id asc).
fn best_per_objective(pool: &[EvaluatedPrompt], objectives: usize, k: usize) -> Vec<Vec<Prompt>> {
    (0..objectives)
        .map(|j| {
            let mut sorted: Vec<&EvaluatedPrompt> = pool.iter().collect();
            sorted.sort_by(|a, b| {
                b.fitness.scores[j]
                    .partial_cmp(&a.fitness.scores[j])
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then_with(|| a.prompt.id.cmp(&b.prompt.id))
            });
            sorted.into_iter().take(k).map(|e| e.prompt.clone()).collect()
        })
        .collect()
}

struct Engine<'a> {
    config: &'a RunConfig,
    digest: String,
    backends: Backends,
    counters: Arc<Counters>,
    dir: Option<RunDir>,
    seeds: Vec<Prompt>,
    fixed: Vec<Prompt>,
    /// Fitness by exact prompt text; only used when every backend is deterministic.
    cache: HashMap<String, EvaluatedPrompt>,
    // State after the last completed generation.
    parents: Vec<Prompt>,
    p_opt: Vec<EvaluatedPrompt>,
    combine_pool: Vec<Prompt>,
    paraphrase_pool: Vec<Prompt>,
    carried: BTreeMap<PromptId, RankScore>,
    candidates: Vec<EvaluatedPrompt>,
    records: Vec<GenerationRecord>,
}

impl<'a> Engine<'a> {
    fn new(config: &'a RunConfig, backends: &Backends, dir: Option<RunDir>) -> Self {
        let counters = Arc::new(Counters::default());
        let seeds = seed_prompts(config);
        let of = |l: PromptLayer| seeds.iter().filter(|p| p.layer == l).cloned().collect::<Vec<_>>();
        Engine {
            digest: config.digest(),
            backends: counted(backends, &counters),
            counters,
            dir,
            parents: of(PromptLayer::Layer1),
            combine_pool: of(PromptLayer::Layer2Combine),
            paraphrase_pool: of(PromptLayer::Layer2Paraphrase),
            fixed: of(PromptLayer::Layer3Fixed),
            seeds,
            config,
            cache: HashMap::new(),
            p_opt: Vec::new(),
            carried: BTreeMap::new(),
            candidates: Vec::new(),
            records: Vec::new(),
        }
    }

    /// Installs the state a persisted record leaves behind.
    fn absorb(&mut self, record: GenerationRecord) {
        self.p_opt = record.selected.clone();
        self.parents = record.selected.iter().map(|e| e.prompt.clone()).collect();
        self.combine_pool = record.combine_pool.clone();
        self.paraphrase_pool = record.paraphrase_pool.clone();
        self.carried = record
            .combine_pool
            .iter()
            .chain(&record.paraphrase_pool)
            .map(|p| (p.id, record.ledger.rank_score(p.id)))
            .collect();
        accumulate(&mut self.candidates, &record.selected);
        self.records.push(record);
    }

    fn evaluate_all(&mut self, prompts: &[Prompt], generation: u32) -> Result<Vec<EvaluatedPrompt>, EngineError> {
        let use_cache = self.backends.deterministic;
        let todo: Vec<&Prompt> = prompts.iter().filter(|p| !(use_cache && self.cache.contains_key(&p.text))).collect();
        self.counters.cache_hits.fetch_add((prompts.len() - todo.len()) as u64, Ordering::Relaxed);
        let fresh: Vec<Result<EvaluatedPrompt, FitnessError>> =
            todo.par_iter().map(|p| evaluate(p, &self.backends, self.config)).collect();
        let mut fresh_by_id: HashMap<PromptId, EvaluatedPrompt> = HashMap::new();
        for r in fresh {
            let ev = r.map_err(|source| EngineError::Backend {
                generation,
                last_complete: generation.checked_sub(1),
                source,
            })?;
            if use_cache {
                self.cache.insert(ev.prompt.text.clone(), ev.clone());
            }
            fresh_by_id.insert(ev.prompt.id, ev);
        }
        Ok(prompts
            .iter()
            .map(|p| {
                fresh_by_id.remove(&p.id).unwrap_or_else(|| {
                    let mut ev = self.cache[&p.text].clone();
                    ev.prompt = p.clone();
                    for s in &mut ev.samples {
                        s.prompt_id = p.id;
                    }
                    ev
                })
            })
            .collect())
    }

    fn step(&mut self, generation: u32) -> Result<GenerationRecord, EngineError> {
        let cfg = self.config;
        let seed = cfg.rng_seed;
        let c = cfg.offspring_per_operator;
        let origin = Origin { run_seed: seed, generation };
        let mut stats = GenerationStats { parents: self.parents.len(), ..Default::default() };
        let mut pop: Vec<Prompt> = self.parents.clone();
        let mut existing = TextSet::from_prompts(&pop);
        let mut mutants: Vec<Prompt> = Vec::new();
        let tally = |b: &Batch, stats: &mut GenerationStats| stats.rejected += b.rejected.len();

        let bests: Vec<Vec<Prompt>> = if generation == 0 {
            let mut rng = stream(seed, generation, "bests", &[]);
            (0..cfg.objectives.len())
                .map(|_| self.parents.choose_multiple(&mut rng, cfg.best_per_objective_k).cloned().collect())
                .collect()
        } else {
            best_per_objective(&self.p_opt, cfg.objectives.len(), cfg.best_per_objective_k)
        };

        let mut combine_pool = self.combine_pool.clone();
        if cfg.ablation.enable_combine {
            let mut rng = stream(seed, generation, "mutate-combine", &[]);
            let (pool, batch) = mutate_layer2(&self.combine_pool, &self.fixed, &*self.backends.generator, &mut rng, origin);
            tally(&batch, &mut stats);
            mutants.extend(batch.accepted);
            combine_pool = pool;
            let pairs = pair_sample(&bests);
            stats.pairs = pairs.len();
            let batch = combine(&pairs, &combine_pool, c, &*self.backends.generator, &mut existing, origin);
            tally(&batch, &mut stats);
            stats.combine_offspring = batch.accepted.len();
            pop.extend(batch.accepted);
        }

        let mut paraphrase_pool = self.paraphrase_pool.clone();
        if cfg.ablation.enable_paraphrase {
            let mut rng = stream(seed, generation, "mutate-paraphrase", &[]);
            let (pool, batch) =
                mutate_layer2(&self.paraphrase_pool, &self.fixed, &*self.backends.generator, &mut rng, origin);
            tally(&batch, &mut stats);
            mutants.extend(batch.accepted);
            paraphrase_pool = pool;

            let members = pop.clone();
            let sentence: Vec<Batch> = members
                .par_iter()
                .map(|p| {
                    let mut local = TextSet::from_prompts([p]);
                    sentence_paraphrase(p, &paraphrase_pool, c, &*self.backends.generator, &mut local, origin)
                })
                .collect();
            let word: Vec<Batch> = members
                .par_iter()
                .map(|p| {
                    let mut local = TextSet::from_prompts([p]);
                    let mut rng = stream(seed, generation, "word", &p.id.0.to_le_bytes());
                    word_paraphrase(p, c, &*self.backends.suggester, &mut rng, &mut local, origin)
                })
                .collect();
            // Merge in parent order so cross-parent duplicates resolve deterministically.
            for (batches, count) in [(sentence, &mut stats.paraphrase_offspring), (word, &mut stats.word_offspring)] {
                for b in batches {
                    stats.rejected += b.rejected.len();
                    for p in b.accepted {
                        if existing.insert(&p.text) {
                            *count += 1;
                            pop.push(p);
                        } else {
                            stats.rejected += 1;
                        }
                    }
                }
            }
        }

        if pop.len() > cfg.max_population {
            let parents = self.parents.len();
            let offspring = pop.len() - parents;
            let keep = cfg.max_population.saturating_sub(parents);
            let mut rng = stream(seed, generation, "trim", &[]);
            let mut kept = index::sample(&mut rng, offspring, keep).into_vec();
            kept.sort_unstable();
            warn!(
                "generation {generation}: population of {} exceeds the cap of {}; keeping {keep} of {offspring} offspring",
                pop.len(),
                cfg.max_population
            );
            stats.trimmed = offspring - keep;
            let tail = pop.split_off(parents);
            pop.extend(kept.into_iter().map(|i| tail[i].clone()));
        }
        stats.population = pop.len();
        stats.layer2_mutants = mutants.len();

        let evaluated = self.evaluate_all(&pop, generation)?;
        for ev in &evaluated {
            if !ev.fitness.is_valid() {
                return Err(EngineError::Invariant(format!("prompt {} has fitness {:?}", ev.prompt.id, ev.fitness.scores)));
            }
        }
        let selected = pareto_selection(&evaluated, cfg.generation_size, cfg.top_n_per_objective)?;
        let selected_ids: BTreeSet<PromptId> = selected.iter().map(|e| e.prompt.id).collect();
        let ledger = Layer2Ledger::tally(self.carried.clone(), &evaluated, &selected_ids, generation);
        if cfg.ablation.enable_combine {
            combine_pool = select_layer2(&combine_pool, &ledger, cfg.combine_cap()).0;
        }
        if cfg.ablation.enable_paraphrase {
            paraphrase_pool = select_layer2(&paraphrase_pool, &ledger, cfg.paraphrase_cap()).0;
        }

        Ok(GenerationRecord {
            generation,
            population: evaluated,
            layer2_mutants: mutants,
            selected,
            combine_pool,
            paraphrase_pool,
            ledger,
            best_per_objective: bests.iter().map(|b| b.iter().map(|p| p.id).collect()).collect(),
            rng_digest: rng_digest(seed, generation),
            stats,
        })
    }

    fn run_from(&mut self, start: u32, options: &mut RunOptions) -> Result<RunResult, EngineError> {
        for generation in start..self.config.generations {
            let started = Instant::now();
            let record = self.step(generation)?;
            if let Some(dir) = &self.dir {
                dir.write_generation(&record, &self.digest)?;
                let [generate_calls, score_calls, suggest_calls, cache_hits] = self.counters.take();
                dir.append_telemetry(&Telemetry {
                    generation,
                    wall_ms: started.elapsed().as_millis(),
                    generate_calls,
                    score_calls,
                    suggest_calls,
                    cache_hits,
                })?;
            }
            info!(
                "generation {generation}: |P_pop| = {}, best = {:?}, hypervolume = {:?}",
                record.stats.population,
                record.best_scores(),
                record.hypervolume()
            );
            if let Some(cb) = options.on_generation.as_mut() {
                cb(&record);
            }
            self.absorb(record);
            if options.halt_after == Some(generation) && generation + 1 < self.config.generations {
                return Err(EngineError::Halted(generation));
            }
        }
        self.finish()
    }

    fn finish(&mut self) -> Result<RunResult, EngineError> {
        let cfg = self.config;
        let front = pareto_selection(&self.candidates, cfg.generation_size, cfg.top_n_per_objective)?;
        if let Some(dir) = &self.dir {
            dir.write_final(&FinalReport {
                config_digest: self.digest.clone(),
                generations: cfg.generations,
                front: front.clone(),
                candidates: self.candidates.clone(),
            })?;
        }
        Ok(RunResult {
            config: cfg.clone(),
            seeds: self.seeds.clone(),
            generations: std::mem::take(&mut self.records),
            candidates: self.candidates.clone(),
            front,
        })
    }
}

fn thread_pool(config: &RunConfig) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(config.parallelism)
        .build()
        .expect("thread pool builds")
}

/// Runs the optimization. With `dir`, every generation is persisted there.
pub fn run(
    config: &RunConfig,
    backends: &Backends,
    dir: Option<&Path>,
    mut options: RunOptions,
) -> Result<RunResult, EngineError> {
    let violations = validate_config(config);
    if !violations.is_empty() {
        return Err(EngineError::InvalidConfig(violations));
    }
    if backends.scorers.len() != config.objectives.len() {
        return Err(EngineError::Invariant(format!(
            "{} scorers for {} objectives",
            backends.scorers.len(),
            config.objectives.len()
        )));
    }
    let dir = dir.map(|d| RunDir::create(d, config)).transpose()?;
    let mut engine = Engine::new(config, backends, dir);
    thread_pool(config).install(|| engine.run_from(0, &mut options))
}

/// Continues a persisted run from its last complete generation.
///
/// `expected`, when given, must match the stored configuration exactly.
pub fn resume(
    dir: &Path,
    backends: &Backends,
    expected: Option<&RunConfig>,
    mut options: RunOptions,
) -> Result<RunResult, EngineError> {
    let (run_dir, config) = RunDir::open(dir)?;
    if let Some(e) = expected {
        if e.digest() != config.digest() {
            return Err(EngineError::ConfigMismatch { expected: config.digest(), found: e.digest() });
        }
    }
    let violations = validate_config(&config);
    if !violations.is_empty() {
        return Err(EngineError::InvalidConfig(violations));
    }
    let records = run_dir.load_generations(&config.digest())?;
    if records.len() > config.generations as usize {
        return Err(EngineError::Corrupt {
            path: dir.to_path_buf(),
            last_valid: records.last().map(|r| r.generation),
            reason: format!("{} generation files for a {}-generation run", records.len(), config.generations),
        });
    }
    let start = records.len() as u32;
    info!("resuming {} at generation {start}", dir.display());
    let mut engine = Engine::new(&config, backends, Some(run_dir));
    for r in records {
        engine.absorb(r);
    }
    thread_pool(&config).install(|| engine.run_from(start, &mut options))
}

/// Rebuilds the result of a finished run from its directory without running anything.
pub fn load_result(dir: &Path) -> Result<RunResult, EngineError> {
    let (run_dir, config) = RunDir::open(dir)?;
    let digest = config.digest();
    let records = run_dir.load_generations(&digest)?;
    let report = run_dir.read_final()?;
    if report.config_digest != digest {
        return Err(EngineError::Corrupt {
            path: dir.join(store::FINAL_FILE),
            last_valid: records.last().map(|r| r.generation),
            reason: "final.json belongs to a different configuration".into(),
        });
    }
    Ok(RunResult {
        seeds: seed_prompts(&config),
        config,
        generations: records,
        candidates: report.candidates,
        front: report.front,
    })
}

/// Mean objective score, used when a single scalar is needed.
pub fn mean_score(e: &EvaluatedPrompt) -> Score {
    e.fitness.mean()
}
