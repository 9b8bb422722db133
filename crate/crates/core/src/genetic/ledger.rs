//! Credit assignment for Layer-2 prompts.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::types::{EvaluatedPrompt, Prompt, PromptId};
use crate::Score;

/// What a Layer-2 prompt's offspring achieved in one generation.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub offspring_produced: usize,
    pub offspring_selected: usize,
    /// Mean over evaluated offspring of their mean objective score.
    pub mean_offspring_fitness: Score,
}

/// Sort key for Layer-2 selection: selections first, then fitness.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RankScore {
    pub selected: usize,
    pub mean_fitness: Score,
}

/// Per-generation credit for Layer-2 prompts, plus the scores carried over
/// from earlier generations for prompts that produced nothing this time.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Layer2Ledger {
    pub entries: BTreeMap<PromptId, LedgerEntry>,
    pub carried: BTreeMap<PromptId, RankScore>,
}

impl Layer2Ledger {
    /// Counts the offspring born in `generation`, keeping `carried` from earlier generations.
    pub fn tally(
        previous_carried: BTreeMap<PromptId, RankScore>,
        evaluated: &[EvaluatedPrompt],
        selected: &BTreeSet<PromptId>,
        generation: u32,
    ) -> Self {
        let mut sums: BTreeMap<PromptId, (LedgerEntry, Score)> = BTreeMap::new();
        for ev in evaluated.iter().filter(|e| e.prompt.generation_born == generation) {
            let Some(op) = ev.prompt.operator_id else { continue };
            let slot = sums.entry(op).or_default();
            slot.0.offspring_produced += 1;
            if selected.contains(&ev.prompt.id) {
                slot.0.offspring_selected += 1;
            }
            slot.1 += ev.fitness.mean();
        }
        let entries = sums
            .into_iter()
            .map(|(id, (mut e, sum))| {
                e.mean_offspring_fitness = sum / e.offspring_produced as Score;
                (id, e)
            })
            .collect();
        Layer2Ledger { entries, carried: previous_carried }
    }

    /// Score used for ranking: this generation's counts when there were
    /// offspring, otherwise whatever was carried over.
    pub fn rank_score(&self, id: PromptId) -> RankScore {
        match self.entries.get(&id) {
            Some(e) if e.offspring_produced > 0 => {
                RankScore { selected: e.offspring_selected, mean_fitness: e.mean_offspring_fitness }
            }
            _ => self.carried.get(&id).copied().unwrap_or_default(),
        }
    }
}

/// Keeps the `m` best Layer-2 prompts by (selected desc, mean fitness desc, id asc).
///
/// Also returns the rank scores of the kept prompts, to be carried forward.
pub fn select_layer2(pool: &[Prompt], ledger: &Layer2Ledger, m: usize) -> (Vec<Prompt>, BTreeMap<PromptId, RankScore>) {
    let mut ranked: Vec<(RankScore, &Prompt)> = pool.iter().map(|p| (ledger.rank_score(p.id), p)).collect();
    ranked.sort_by(|(a, pa), (b, pb)| {
        b.selected
            .cmp(&a.selected)
            .then_with(|| b.mean_fitness.partial_cmp(&a.mean_fitness).unwrap_or(Ordering::Equal))
            .then_with(|| pa.id.cmp(&pb.id))
    });
    ranked.truncate(m);
    let carried = ranked.iter().map(|(s, p)| (p.id, *s)).collect();
    (ranked.into_iter().map(|(_, p)| p.clone()).collect(), carried)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{ObjectiveVector, PromptLayer};

    fn layer2(i: usize) -> Prompt {
        Prompt::seed(0, PromptLayer::Layer2Paraphrase, i, "Paraphrase \"SENTENCE_1\"")
    }

    fn child(i: usize, op: PromptId, score: Score) -> EvaluatedPrompt {
        let mut prompt = Prompt::seed(9, PromptLayer::Layer1, i, "x <em>");
        prompt.operator_id = Some(op);
        EvaluatedPrompt {
            prompt,
            fitness: ObjectiveVector::new(vec!["o".into()], vec![score]),
            per_emotion: vec![],
            samples: vec![],
            pareto_rank: None,
            crowding: None,
        }
    }

    #[test]
    fn selections_dominate_the_ranking() {
        let (a, b) = (layer2(0), layer2(1));
        let kids = vec![child(0, a.id, 0.1), child(1, a.id, 0.1), child(2, a.id, 0.1), child(3, b.id, 0.9)];
        let selected = kids[..3].iter().map(|k| k.prompt.id).collect();
        let ledger = Layer2Ledger::tally(BTreeMap::new(), &kids, &selected, 0);
        assert_eq!(ledger.entries[&a.id].offspring_selected, 3);
        let (kept, _) = select_layer2(&[b.clone(), a.clone()], &ledger, 1);
        assert_eq!(kept, vec![a]);
    }

    #[test]
    fn fitness_breaks_ties() {
        let (a, b) = (layer2(0), layer2(1));
        let kids = vec![child(0, a.id, 0.8), child(1, b.id, 0.6)];
        let ledger = Layer2Ledger::tally(BTreeMap::new(), &kids, &BTreeSet::new(), 0);
        let (kept, _) = select_layer2(&[b.clone(), a.clone()], &ledger, 2);
        assert_eq!(kept, vec![a, b]);
    }

    #[test]
    fn idle_prompts_keep_their_previous_score() {
        let (a, b) = (layer2(0), layer2(1));
        let carried = BTreeMap::from([(a.id, RankScore { selected: 2, mean_fitness: 0.5 })]);
        let kids = vec![child(0, b.id, 0.9)];
        let ledger = Layer2Ledger::tally(carried, &kids, &BTreeSet::from([kids[0].prompt.id]), 0);
        let (kept, carry) = select_layer2(&[b.clone(), a.clone()], &ledger, 2);
        assert_eq!(kept, vec![a.clone(), b]);
        assert_eq!(carry[&a.id].selected, 2);
    }

    #[test]
    fn m_equal_to_pool_keeps_everything() {
        let pool: Vec<Prompt> = (0..5).map(layer2).collect();
        let (kept, _) = select_layer2(&pool, &Layer2Ledger::default(), 5);
        assert_eq!(kept.len(), 5);
    }
}
