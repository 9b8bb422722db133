//! Run configuration: a single JSON document describing prompts, budgets,
//! objectives and the backends that serve them.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::backends::lexicon::LexiconStyle;
use crate::catalog;
use crate::text::{self, SLOT_1, SLOT_2};
use crate::types::EmotionLabel;

/// Where text generation or token suggestion requests go.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BackendSpec {
    Mock,
    Http { endpoint: String },
}

/// How one objective is scored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScorerSpec {
    Lexicon { style: LexiconStyle },
    Http { endpoint: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveSpec {
    pub name: String,
    pub scorer: ScorerSpec,
}

impl ObjectiveSpec {
    pub fn lexicon(name: impl Into<String>, style: LexiconStyle) -> Self {
        ObjectiveSpec { name: name.into(), scorer: ScorerSpec::Lexicon { style } }
    }

    pub fn http(name: impl Into<String>, endpoint: impl Into<String>) -> Self {
        ObjectiveSpec { name: name.into(), scorer: ScorerSpec::Http { endpoint: endpoint.into() } }
    }
}

/// Operator switches for ablation runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ablation {
    pub enable_combine: bool,
    pub enable_paraphrase: bool,
}

impl Default for Ablation {
    fn default() -> Self {
        Ablation { enable_combine: true, enable_paraphrase: true }
    }
}

/// Transport settings shared by every HTTP backend.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HttpSettings {
    pub max_attempts: u32,
    pub base_delay_ms: u64,
    pub max_delay_ms: u64,
    pub timeout_ms: u64,
    pub max_in_flight: usize,
}

impl Default for HttpSettings {
    fn default() -> Self {
        HttpSettings {
            max_attempts: 5,
            base_delay_ms: 500,
            max_delay_ms: 30_000,
            timeout_ms: 120_000,
            max_in_flight: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub seed_prompts: Vec<String>,
    pub combine_prompts: Vec<String>,
    pub paraphrase_prompts: Vec<String>,
    pub fixed_prompts: Vec<String>,
    /// Number of generations (I).
    pub generations: u32,
    /// Pareto-core budget per generation (G).
    pub generation_size: usize,
    /// Completions requested per operator call (C).
    pub offspring_per_operator: usize,
    /// Texts generated per instantiated prompt (n).
    pub texts_per_prompt: usize,
    pub emotions: Vec<EmotionLabel>,
    pub objectives: Vec<ObjectiveSpec>,
    pub generator: BackendSpec,
    pub suggester: BackendSpec,
    pub bleu_threshold: f64,
    pub top_n_per_objective: usize,
    pub rng_seed: u64,
    pub ablation: Ablation,
    pub best_per_objective_k: usize,
    /// Hard cap on the evaluated population of one generation.
    pub max_population: usize,
    /// Layer-2 pool sizes kept after selection; default to the initial pool sizes.
    pub combine_pool_cap: Option<usize>,
    pub paraphrase_pool_cap: Option<usize>,
    /// Worker threads for operator and evaluation fan-out; 0 uses all cores.
    pub parallelism: usize,
    pub http: HttpSettings,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed_prompts: catalog::owned(&catalog::SEED_PROMPTS),
            combine_prompts: catalog::owned(&catalog::COMBINE_PROMPTS),
            paraphrase_prompts: catalog::owned(&catalog::PARAPHRASE_PROMPTS),
            fixed_prompts: catalog::owned(&catalog::FIXED_PROMPTS),
            generations: 10,
            generation_size: 10,
            offspring_per_operator: 3,
            texts_per_prompt: 5,
            emotions: EmotionLabel::defaults(),
            objectives: vec![
                ObjectiveSpec::lexicon("isear", LexiconStyle::Narrative),
                ObjectiveSpec::lexicon("tec", LexiconStyle::Social),
                ObjectiveSpec::lexicon("affective_text", LexiconStyle::Headline),
            ],
            generator: BackendSpec::Mock,
            suggester: BackendSpec::Mock,
            bleu_threshold: 0.2,
            top_n_per_objective: 1,
            rng_seed: 0,
            ablation: Ablation::default(),
            best_per_objective_k: 1,
            max_population: 512,
            combine_pool_cap: None,
            paraphrase_pool_cap: None,
            parallelism: 0,
            http: HttpSettings::default(),
        }
    }
}

impl RunConfig {
    pub fn objective_ids(&self) -> Vec<String> {
        self.objectives.iter().map(|o| o.name.clone()).collect()
    }

    pub fn combine_cap(&self) -> usize {
        self.combine_pool_cap.unwrap_or(self.combine_prompts.len()).max(1)
    }

    pub fn paraphrase_cap(&self) -> usize {
        self.paraphrase_pool_cap.unwrap_or(self.paraphrase_prompts.len()).max(1)
    }

    /// True when no backend needs the network.
    pub fn all_mock(&self) -> bool {
        self.generator == BackendSpec::Mock
            && self.suggester == BackendSpec::Mock
            && self.objectives.iter().all(|o| matches!(o.scorer, ScorerSpec::Lexicon { .. }))
    }

    /// Swaps every HTTP backend for its deterministic stand-in.
    ///
    /// HTTP objectives become lexicon scorers whose style is guessed from the
    /// objective name.
    pub fn into_mock(mut self) -> Self {
        self.generator = BackendSpec::Mock;
        self.suggester = BackendSpec::Mock;
        for objective in &mut self.objectives {
            if let ScorerSpec::Http { .. } = objective.scorer {
                objective.scorer =
                    ScorerSpec::Lexicon { style: LexiconStyle::for_objective_name(&objective.name) };
            }
        }
        self
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        let digest = Sha256::digest(&json);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn from_json(json: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(json)
    }
}

/// Lists every violated invariant; an empty list means the config is usable.
pub fn validate_config(config: &RunConfig) -> Vec<String> {
    let mut violations = Vec::new();
    if config.generations < 1 {
        violations.push("generations must be ≥ 1".to_string());
    }
    if config.generation_size < 1 {
        violations.push("generation size must be ≥ 1".to_string());
    }
    if config.offspring_per_operator < 1 {
        violations.push("offspring per operator must be ≥ 1".to_string());
    }
    if config.texts_per_prompt < 1 {
        violations.push("texts per prompt must be ≥ 1".to_string());
    }
    if config.best_per_objective_k < 1 {
        violations.push("best_per_objective_k must be ≥ 1".to_string());
    }
    if config.max_population < 1 {
        violations.push("max population must be ≥ 1".to_string());
    }
    if !(0.0..=1.0).contains(&config.bleu_threshold) {
        violations.push("bleu threshold must lie in [0, 1]".to_string());
    }
    if !config.ablation.enable_combine && !config.ablation.enable_paraphrase {
        violations.push("at least one of combine/paraphrase must be enabled".to_string());
    }
    if config.objectives.is_empty() {
        violations.push("at least one objective is required".to_string());
    }
    let mut names: Vec<&str> = config.objectives.iter().map(|o| o.name.as_str()).collect();
    names.sort_unstable();
    if names.windows(2).any(|w| w[0] == w[1]) {
        violations.push("objective names must be unique".to_string());
    }
    if config.emotions.is_empty() {
        violations.push("at least one emotion label is required".to_string());
    }
    if config.seed_prompts.is_empty() {
        violations.push("at least one seed prompt is required".to_string());
    }
    if config.seed_prompts.iter().any(|p| !text::has_placeholder(p)) {
        violations.push("Layer-1 prompt missing <em> placeholder".to_string());
    }
    if config.ablation.enable_combine {
        if config.combine_prompts.is_empty() {
            violations.push("combine is enabled but no combine prompts are configured".to_string());
        }
        if config.combine_prompts.iter().any(|p| !p.contains(SLOT_1) || !p.contains(SLOT_2)) {
            violations.push("combine prompt missing SENTENCE_1/SENTENCE_2 slot".to_string());
        }
    }
    if config.ablation.enable_paraphrase {
        if config.paraphrase_prompts.is_empty() {
            violations
                .push("paraphrase is enabled but no paraphrase prompts are configured".to_string());
        }
        if config.paraphrase_prompts.iter().any(|p| !p.contains(SLOT_1)) {
            violations.push("paraphrase prompt missing SENTENCE_1 slot".to_string());
        }
    }
    if config.fixed_prompts.is_empty() {
        violations.push("at least one fixed (Layer-3) prompt is required".to_string());
    }
    if config.fixed_prompts.iter().any(|p| !p.contains(SLOT_1)) {
        violations.push("fixed prompt missing SENTENCE_1 slot".to_string());
    }
    if config.http.max_attempts < 1 {
        violations.push("http max_attempts must be ≥ 1".to_string());
    }
    violations
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn defaults_are_valid() {
        let config = RunConfig::default();
        assert_eq!(config.generations, 10);
        assert_eq!(config.offspring_per_operator, 3);
        assert_eq!(config.texts_per_prompt, 5);
        assert_eq!(config.bleu_threshold, 0.2);
        assert!(validate_config(&config).is_empty());
    }

    #[test]
    fn zero_generations_reported() {
        let config = RunConfig { generations: 0, ..RunConfig::default() };
        assert_eq!(validate_config(&config), vec!["generations must be ≥ 1".to_string()]);
    }

    #[test]
    fn seed_without_placeholder_reported() {
        let mut config = RunConfig::default();
        config.seed_prompts.push("Write a text".into());
        assert_eq!(
            validate_config(&config),
            vec!["Layer-1 prompt missing <em> placeholder".to_string()]
        );
    }

    #[test]
    fn both_operators_disabled_reported() {
        let config = RunConfig {
            ablation: Ablation { enable_combine: false, enable_paraphrase: false },
            ..RunConfig::default()
        };
        assert_eq!(validate_config(&config).len(), 1);
    }

    #[test]
    fn minimal_json_fills_defaults() {
        let config = RunConfig::from_json(r#"{"rng_seed": 7, "generations": 2}"#).unwrap();
        assert_eq!(config.rng_seed, 7);
        assert_eq!(config.generations, 2);
        assert_eq!(config.seed_prompts.len(), 10);
    }

    #[test]
    fn into_mock_replaces_http() {
        let config = RunConfig {
            generator: BackendSpec::Http { endpoint: "http://x".into() },
            objectives: vec![ObjectiveSpec::http("tec", "http://y")],
            ..RunConfig::default()
        }
        .into_mock();
        assert!(config.all_mock());
        assert_eq!(
            config.objectives[0].scorer,
            ScorerSpec::Lexicon { style: LexiconStyle::Social }
        );
    }

    proptest! {
        #[test]
        fn config_round_trips_bit_exactly(
            seed in any::<u64>(),
            threshold in 0.0f64..=1.0,
            generations in 1u32..50,
            g in 1usize..100,
            top_n in 0usize..5,
            combine in any::<bool>(),
        ) {
            let config = RunConfig {
                rng_seed: seed,
                bleu_threshold: threshold,
                generations,
                generation_size: g,
                top_n_per_objective: top_n,
                ablation: Ablation { enable_combine: combine, enable_paraphrase: true },
                ..RunConfig::default()
            };
            let back = RunConfig::from_json(&config.to_json_pretty()).unwrap();
            prop_assert_eq!(back.bleu_threshold.to_bits(), threshold.to_bits());
            prop_assert_eq!(&back, &config);
            prop_assert_eq!(back.digest(), config.digest());
        }
    }
}
