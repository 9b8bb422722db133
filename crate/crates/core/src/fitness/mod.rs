//! Emotion-slot instantiation, text generation, echo filtering and the
//! aggregation of scorer probabilities into objective vectors.
//!
//! A prompt's value on one objective is the mean over emotions of the mean
//! over surviving texts of the probability the scorer assigns to the intended
//! emotion. An emotion whose texts were all filtered contributes 0.

pub mod bleu;

use log::warn;
use thiserror::Error;

use crate::backends::{BackendError, Backends, GenerateRequest, ScoreRequest};
use crate::config::RunConfig;
use crate::text;
use crate::types::{
    stable_hash, EmotionBreakdown, EmotionLabel, EvaluatedPrompt, ObjectiveVector, Prompt, PromptId,
    PromptLayer, TextSample,
};
use crate::Score;

pub use bleu::{sentence_bleu, text_bleu};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FitnessError {
    #[error("BLEU needs non-empty candidate and reference")]
    EmptyBleuInput,
    #[error("prompt {0} has no <em> placeholder")]
    MissingPlaceholder(PromptId),
    #[error("prompt {0} is not a Layer-1 prompt")]
    WrongLayer(PromptId),
    #[error("no objectives configured")]
    NoObjectives,
    #[error("objective {objective} failed scoring prompt {prompt}: {source}")]
    Scorer {
        objective: String,
        prompt: PromptId,
        #[source]
        source: BackendError,
    },
}

/// A Layer-1 prompt with its placeholder replaced by one emotion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstantiatedPrompt {
    pub parent_prompt_id: PromptId,
    pub emotion: EmotionLabel,
    pub text: String,
}

/// One instantiation per emotion, in the given order.
pub fn instantiate(prompt: &Prompt, emotions: &[EmotionLabel]) -> Result<Vec<InstantiatedPrompt>, FitnessError> {
    if !text::has_placeholder(&prompt.text) {
        return Err(FitnessError::MissingPlaceholder(prompt.id));
    }
    Ok(emotions
        .iter()
        .map(|e| InstantiatedPrompt {
            parent_prompt_id: prompt.id,
            emotion: e.clone(),
            text: text::instantiate_placeholder(&prompt.text, e.as_str()),
        })
        .collect())
}

/// The filter's decision: only a score strictly above the threshold is an echo.
pub fn is_echo(bleu: Score, threshold: Score) -> bool {
    bleu > threshold
}

/// Scores each text against its own generation prompt; a text is filtered
/// when its BLEU strictly exceeds `threshold`. Empty texts score 0.
pub fn echo_filter(source: &InstantiatedPrompt, texts: &[String], threshold: Score) -> Vec<TextSample> {
    texts
        .iter()
        .enumerate()
        .map(|(index, t)| {
            let echo_bleu = text_bleu::<Score>(t, &source.text).unwrap_or(0.0);
            TextSample {
                prompt_id: source.parent_prompt_id,
                emotion: source.emotion.clone(),
                index,
                text: t.clone(),
                echo_bleu,
                filtered: is_echo(echo_bleu, threshold),
                scores: Vec::new(),
            }
        })
        .collect()
}

/// Mean over emotions of the mean over surviving texts, per objective.
///
/// Samples are visited in (emotion order, index) order, so the sums are
/// reproducible regardless of the order samples arrive in.
pub fn aggregate(
    samples: &[TextSample],
    emotions: &[EmotionLabel],
    objectives: usize,
) -> (Vec<Score>, Vec<EmotionBreakdown>) {
    let mut per_emotion = Vec::with_capacity(emotions.len());
    for emotion in emotions {
        let mut survivors: Vec<&TextSample> =
            samples.iter().filter(|s| &s.emotion == emotion && !s.filtered).collect();
        survivors.sort_by_key(|s| s.index);
        let scores = (0..objectives)
            .map(|j| {
                if survivors.is_empty() {
                    0.0
                } else {
                    survivors.iter().map(|s| s.scores[j]).sum::<Score>() / survivors.len() as Score
                }
            })
            .collect();
        per_emotion.push(EmotionBreakdown { emotion: emotion.clone(), surviving: survivors.len(), scores });
    }
    let fitness = (0..objectives)
        .map(|j| {
            if per_emotion.is_empty() {
                0.0
            } else {
                per_emotion.iter().map(|e| e.scores[j]).sum::<Score>() / per_emotion.len() as Score
            }
        })
        .collect();
    (fitness, per_emotion)
}

/// Generation seed for one instantiated prompt.
pub fn request_seed(run_seed: u64, instantiated: &str) -> u64 {
    stable_hash(&[b"generate", &run_seed.to_le_bytes(), instantiated.as_bytes()])
}

/// Generates, filters and scores the texts of one Layer-1 prompt.
///
/// A generator failure leaves that emotion scored over whatever texts exist
/// (none, so it contributes 0). A scorer failure is fatal: fitness has to be
/// comparable across the whole population.
pub fn evaluate(prompt: &Prompt, backends: &Backends, config: &RunConfig) -> Result<EvaluatedPrompt, FitnessError> {
    if prompt.layer != PromptLayer::Layer1 {
        return Err(FitnessError::WrongLayer(prompt.id));
    }
    if backends.scorers.is_empty() {
        return Err(FitnessError::NoObjectives);
    }
    let objective_ids = config.objective_ids();
    let mut samples = Vec::new();
    for inst in instantiate(prompt, &config.emotions)? {
        let request = GenerateRequest {
            prompt: inst.text.clone(),
            n: config.texts_per_prompt,
            seed: request_seed(config.rng_seed, &inst.text),
        };
        let texts = match backends.generator.generate(&request) {
            Ok(mut r) => {
                r.texts.truncate(config.texts_per_prompt);
                r.texts
            }
            Err(e) => {
                warn!("generation failed for prompt {} ({}): {e}", prompt.id, inst.emotion);
                Vec::new()
            }
        };
        let mut batch = echo_filter(&inst, &texts, config.bleu_threshold);
        let surviving: Vec<String> = batch.iter().filter(|s| !s.filtered).map(|s| s.text.clone()).collect();
        let mut per_text: Vec<Vec<Score>> = vec![Vec::with_capacity(objective_ids.len()); surviving.len()];
        for (scorer, objective) in backends.scorers.iter().zip(&objective_ids) {
            let response = scorer
                .score(&ScoreRequest { texts: surviving.clone(), label: inst.emotion.clone() })
                .map_err(|source| FitnessError::Scorer { objective: objective.clone(), prompt: prompt.id, source })?;
            if response.scores.len() != surviving.len() {
                return Err(FitnessError::Scorer {
                    objective: objective.clone(),
                    prompt: prompt.id,
                    source: BackendError::Protocol {
                        request_id: String::new(),
                        message: format!("{} scores for {} texts", response.scores.len(), surviving.len()),
                    },
                });
            }
            for (row, s) in per_text.iter_mut().zip(response.scores) {
                row.push(s);
            }
        }
        let mut rows = per_text.into_iter();
        for sample in batch.iter_mut().filter(|s| !s.filtered) {
            sample.scores = rows.next().unwrap_or_default();
        }
        samples.extend(batch);
    }
    let (scores, per_emotion) = aggregate(&samples, &config.emotions, objective_ids.len());
    Ok(EvaluatedPrompt {
        prompt: prompt.clone(),
        fitness: ObjectiveVector::new(objective_ids, scores),
        per_emotion,
        samples,
        pareto_rank: None,
        crowding: None,
    })
}
