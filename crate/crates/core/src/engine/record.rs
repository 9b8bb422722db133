//! What a run leaves behind: one record per generation and the final result.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::genetic::Layer2Ledger;
use crate::pareto::hypervolume;
use crate::types::{EvaluatedPrompt, OperatorKind, Prompt, PromptId};
use crate::Score;

/// Counts describing how one generation's population was built.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationStats {
    /// Prompts evaluated this generation (|P_pop| after trimming).
    pub population: usize,
    /// Parents carried over from the previous selection.
    pub parents: usize,
    pub combine_offspring: usize,
    pub paraphrase_offspring: usize,
    pub word_offspring: usize,
    pub layer2_mutants: usize,
    pub rejected: usize,
    /// Offspring dropped by the population cap before evaluation.
    pub trimmed: usize,
    pub pairs: usize,
}

impl GenerationStats {
    pub fn offspring(&self) -> usize {
        self.combine_offspring + self.paraphrase_offspring + self.word_offspring
    }
}

/// Full state of one generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub generation: u32,
    /// Every evaluated member of P_pop, in evaluation order.
    pub population: Vec<EvaluatedPrompt>,
    /// Layer-2 prompts created this generation by Layer-3 rewriting, kept or not.
    pub layer2_mutants: Vec<Prompt>,
    /// P_opt, with rank and crowding set.
    pub selected: Vec<EvaluatedPrompt>,
    pub combine_pool: Vec<Prompt>,
    pub paraphrase_pool: Vec<Prompt>,
    pub ledger: Layer2Ledger,
    /// Prompts that fed pair sampling, per objective.
    pub best_per_objective: Vec<Vec<PromptId>>,
    /// Digest of the generation's random stream seed material.
    pub rng_digest: String,
    pub stats: GenerationStats,
}

impl GenerationRecord {
    pub fn best_scores(&self) -> Vec<Score> {
        best_scores(&self.selected)
    }

    pub fn mean_scores(&self) -> Vec<Score> {
        let m = self.selected.first().map_or(0, |e| e.fitness.len());
        (0..m)
            .map(|j| self.selected.iter().map(|e| e.fitness.scores[j]).sum::<Score>() / self.selected.len() as Score)
            .collect()
    }

    /// Hypervolume of P_opt against the origin; `None` beyond three objectives.
    pub fn hypervolume(&self) -> Option<Score> {
        front_hypervolume(&self.selected)
    }
}

pub fn best_scores(prompts: &[EvaluatedPrompt]) -> Vec<Score> {
    let m = prompts.first().map_or(0, |e| e.fitness.len());
    (0..m)
        .map(|j| prompts.iter().map(|e| e.fitness.scores[j]).fold(Score::NEG_INFINITY, Score::max))
        .collect()
}

pub fn front_hypervolume(prompts: &[EvaluatedPrompt]) -> Option<Score> {
    let m = prompts.first().map_or(0, |e| e.fitness.len());
    let vectors: Vec<&[Score]> = prompts.iter().map(|e| e.fitness.scores.as_slice()).collect();
    hypervolume(&vectors, &vec![0.0; m]).ok()
}

/// Member maximizing its minimum objective score (ties by id).
pub fn balanced_best(prompts: &[EvaluatedPrompt]) -> Option<&EvaluatedPrompt> {
    prompts.iter().max_by(|a, b| {
        a.fitness
            .min()
            .partial_cmp(&b.fitness.min())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| b.prompt.id.cmp(&a.prompt.id))
    })
}

/// Outcome of a complete run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub config: RunConfig,
    /// Initial prompts of every layer, in catalog order.
    pub seeds: Vec<Prompt>,
    pub generations: Vec<GenerationRecord>,
    /// P_cands: the union of every generation's selection, deduplicated by normalized text.
    pub candidates: Vec<EvaluatedPrompt>,
    /// Final P_opt, selected from `candidates`.
    pub front: Vec<EvaluatedPrompt>,
}

impl RunResult {
    /// Every recorded prompt by id: seeds, evaluated Layer-1 prompts and Layer-2 mutants.
    pub fn registry(&self) -> BTreeMap<PromptId, &Prompt> {
        let mut all: BTreeMap<PromptId, &Prompt> = self.seeds.iter().map(|p| (p.id, p)).collect();
        for g in &self.generations {
            all.extend(g.population.iter().map(|e| (e.prompt.id, &e.prompt)));
            all.extend(g.layer2_mutants.iter().map(|p| (p.id, p)));
        }
        all
    }

    /// The prompt followed by its ancestors, breadth first, back to the seeds.
    /// `None` when some ancestor is not on record.
    pub fn ancestry(&self, id: PromptId) -> Option<Vec<Prompt>> {
        let registry = self.registry();
        let mut out = Vec::new();
        let mut queue = vec![id];
        let mut seen = std::collections::BTreeSet::new();
        while let Some(next) = queue.pop() {
            if !seen.insert(next) {
                continue;
            }
            let p = registry.get(&next)?;
            queue.extend(p.lineage.iter().copied());
            out.push((*p).clone());
        }
        Some(out)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("run result serializes")
    }
}

/// Share of each operator kind among a set of prompts.
pub type Shares = BTreeMap<OperatorKind, Score>;

/// Operator shares per generation (over P_opt) and over the final front.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorContribution {
    pub per_generation: Vec<Shares>,
    pub overall: Shares,
}

pub fn shares(prompts: &[EvaluatedPrompt]) -> Shares {
    let mut out: Shares = OperatorKind::ALL.iter().map(|k| (*k, 0.0)).collect();
    if prompts.is_empty() {
        return out;
    }
    for p in prompts {
        *out.entry(p.prompt.operator_kind).or_default() += 1.0;
    }
    for v in out.values_mut() {
        *v /= prompts.len() as Score;
    }
    out
}

/// Fraction of selected prompts produced by each operator kind.
pub fn operator_contribution(result: &RunResult) -> OperatorContribution {
    OperatorContribution {
        per_generation: result.generations.iter().map(|g| shares(&g.selected)).collect(),
        overall: shares(&result.front),
    }
}
