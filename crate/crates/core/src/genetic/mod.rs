//! Combine and paraphrase operators on Layer-1 prompts, Layer-3-driven
//! mutation of Layer-2 prompts, and Layer-2 pool selection.
//!
//! Backend calls inside one operator batch run concurrently; offspring are
//! validated and collected afterwards in a fixed order, so results never
//! depend on scheduling.

mod ledger;
mod word;

use std::collections::BTreeSet;

use log::{debug, warn};
use rayon::prelude::*;

use crate::backends::{GenerateRequest, Generator};
use crate::text::{self, SLOT_1, SLOT_2};
use crate::types::{stable_hash, OperatorKind, Prompt, PromptId, PromptLayer};

pub use ledger::{select_layer2, Layer2Ledger, LedgerEntry, RankScore};
pub use word::word_paraphrase;

/// Where offspring are being produced; feeds deterministic ids and seeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Origin {
    pub run_seed: u64,
    pub generation: u32,
}

impl Origin {
    fn request_seed(&self, purpose: &str, prompt: &str) -> u64 {
        stable_hash(&[purpose.as_bytes(), &self.run_seed.to_le_bytes(), &self.generation.to_le_bytes(), prompt.as_bytes()])
    }
}

/// Why a candidate offspring was dropped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rejection {
    Empty,
    MissingPlaceholder,
    MissingSlot,
    Duplicate,
    TooShort,
    BackendFailure,
}

/// Offspring accepted by an operator plus a tally of what was rejected.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Batch {
    pub accepted: Vec<Prompt>,
    pub rejected: Vec<Rejection>,
}

impl Batch {
    pub fn extend(&mut self, other: Batch) {
        self.accepted.extend(other.accepted);
        self.rejected.extend(other.rejected);
    }
}

/// Normalized texts already present, used to refuse duplicates.
#[derive(Debug, Clone, Default)]
pub struct TextSet(BTreeSet<String>);

impl TextSet {
    pub fn from_prompts<'a>(prompts: impl IntoIterator<Item = &'a Prompt>) -> Self {
        TextSet(prompts.into_iter().map(|p| text::normalize(&p.text)).collect())
    }

    pub fn contains(&self, text: &str) -> bool {
        self.0.contains(&text::normalize(text))
    }

    /// Inserts and reports whether the text was new.
    pub fn insert(&mut self, text: &str) -> bool {
        self.0.insert(text::normalize(text))
    }
}

/// Validates a Layer-1 completion and records it as seen.
fn admit_layer1(completion: &str, existing: &mut TextSet) -> Result<String, Rejection> {
    let normalized = text::normalize(completion);
    if normalized.is_empty() {
        return Err(Rejection::Empty);
    }
    if !text::has_placeholder(&normalized) {
        return Err(Rejection::MissingPlaceholder);
    }
    if !existing.insert(&normalized) {
        return Err(Rejection::Duplicate);
    }
    Ok(normalized)
}

/// Asks the generator for every request concurrently, keeping request order.
fn fan_out(generator: &dyn Generator, requests: Vec<GenerateRequest>) -> Vec<Option<Vec<String>>> {
    requests
        .into_par_iter()
        .map(|r| match generator.generate(&r) {
            Ok(resp) => Some(resp.texts.into_iter().take(r.n).collect()),
            Err(e) => {
                warn!("generation request failed: {e}");
                None
            }
        })
        .collect()
}

/// Rewrites every Layer-2 prompt with one uniformly drawn Layer-3 prompt.
///
/// Returns the pool with accepted mutants appended after the originals.
/// A mutant must keep the slot markers of its layer and must not repeat a
/// text already in the pool.
pub fn mutate_layer2(
    pool: &[Prompt],
    fixed: &[Prompt],
    generator: &dyn Generator,
    rng: &mut impl rand::Rng,
    origin: Origin,
) -> (Vec<Prompt>, Batch) {
    let mut out = pool.to_vec();
    let mut batch = Batch::default();
    if pool.is_empty() || fixed.is_empty() {
        return (out, batch);
    }
    let picks: Vec<&Prompt> = pool.iter().map(|_| &fixed[rng.gen_range(0..fixed.len())]).collect();
    let requests = pool
        .iter()
        .zip(&picks)
        .map(|(p, f)| {
            let prompt = text::fill_slots(&f.text, &p.text, None);
            GenerateRequest { seed: origin.request_seed("mutate", &prompt), prompt, n: 1 }
        })
        .collect();
    let responses = fan_out(generator, requests);
    let mut seen = TextSet::from_prompts(pool);
    for ((original, fixed_prompt), response) in pool.iter().zip(picks).zip(responses) {
        let Some(texts) = response else {
            batch.rejected.push(Rejection::BackendFailure);
            continue;
        };
        let candidate = text::normalize(texts.first().map(String::as_str).unwrap_or(""));
        let verdict = if candidate.is_empty() {
            Err(Rejection::Empty)
        } else if !candidate.contains(SLOT_1) || (original.layer == PromptLayer::Layer2Combine && !candidate.contains(SLOT_2)) {
            Err(Rejection::MissingSlot)
        } else if !seen.insert(&candidate) {
            Err(Rejection::Duplicate)
        } else {
            Ok(candidate)
        };
        match verdict {
            Ok(text) => {
                let kind = OperatorKind::SentenceParaphrase;
                let mutant = Prompt {
                    id: PromptId::for_offspring(origin.run_seed, origin.generation, kind, Some(fixed_prompt.id), &[original.id], 0),
                    layer: original.layer,
                    text,
                    generation_born: origin.generation,
                    lineage: vec![original.id],
                    operator_id: Some(fixed_prompt.id),
                    operator_kind: kind,
                };
                batch.accepted.push(mutant.clone());
                out.push(mutant);
            }
            Err(r) => {
                debug!("Layer-2 mutant of {} rejected: {r:?}", original.id);
                batch.rejected.push(r);
            }
        }
    }
    (out, batch)
}

/// All unordered cross-objective pairs of distinct prompts, in objective order.
///
/// With a single objective the pairs are drawn within its list.
pub fn pair_sample(best_per_objective: &[Vec<Prompt>]) -> Vec<(Prompt, Prompt)> {
    let mut pairs = Vec::new();
    let mut seen: BTreeSet<(PromptId, PromptId)> = BTreeSet::new();
    let mut push = |a: &Prompt, b: &Prompt, pairs: &mut Vec<(Prompt, Prompt)>| {
        if a.id == b.id {
            return;
        }
        let key = if a.id < b.id { (a.id, b.id) } else { (b.id, a.id) };
        if seen.insert(key) {
            pairs.push((a.clone(), b.clone()));
        }
    };
    if best_per_objective.len() == 1 {
        let list = &best_per_objective[0];
        for (i, a) in list.iter().enumerate() {
            for b in &list[i + 1..] {
                push(a, b, &mut pairs);
            }
        }
    } else {
        for i in 0..best_per_objective.len() {
            for j in i + 1..best_per_objective.len() {
                for a in &best_per_objective[i] {
                    for b in &best_per_objective[j] {
                        push(a, b, &mut pairs);
                    }
                }
            }
        }
    }
    if pairs.is_empty() {
        debug!("fewer than two distinct best prompts; combine is a no-op");
    }
    pairs
}

fn collect_layer1(
    cells: Vec<(Vec<PromptId>, &Prompt, GenerateRequest)>,
    kind: OperatorKind,
    generator: &dyn Generator,
    existing: &mut TextSet,
    origin: Origin,
) -> Batch {
    let requests = cells.iter().map(|c| c.2.clone()).collect();
    let responses = fan_out(generator, requests);
    let mut batch = Batch::default();
    for ((parents, operator, request), response) in cells.into_iter().zip(responses) {
        let Some(texts) = response else {
            batch.rejected.extend(std::iter::repeat_n(Rejection::BackendFailure, request.n));
            continue;
        };
        if texts.len() < request.n {
            batch.rejected.extend(std::iter::repeat_n(Rejection::Empty, request.n - texts.len()));
        }
        for (k, completion) in texts.iter().enumerate() {
            match admit_layer1(completion, existing) {
                Ok(text) => batch.accepted.push(Prompt {
                    id: PromptId::for_offspring(origin.run_seed, origin.generation, kind, Some(operator.id), &parents, k),
                    layer: PromptLayer::Layer1,
                    text,
                    generation_born: origin.generation,
                    lineage: parents.clone(),
                    operator_id: Some(operator.id),
                    operator_kind: kind,
                }),
                Err(r) => batch.rejected.push(r),
            }
        }
    }
    batch
}

/// Crossover: every pair under every combine prompt, `c` completions each.
pub fn combine(
    pairs: &[(Prompt, Prompt)],
    combine_prompts: &[Prompt],
    c: usize,
    generator: &dyn Generator,
    existing: &mut TextSet,
    origin: Origin,
) -> Batch {
    let mut cells = Vec::with_capacity(pairs.len() * combine_prompts.len());
    for (a, b) in pairs {
        for cp in combine_prompts {
            let prompt = text::fill_slots(&cp.text, &a.text, Some(&b.text));
            let request = GenerateRequest { seed: origin.request_seed("combine", &prompt), prompt, n: c };
            cells.push((vec![a.id, b.id], cp, request));
        }
    }
    collect_layer1(cells, OperatorKind::Combine, generator, existing, origin)
}

/// Sentence-level mutation: the parent under every paraphrase prompt, `c` completions each.
pub fn sentence_paraphrase(
    prompt: &Prompt,
    paraphrase_prompts: &[Prompt],
    c: usize,
    generator: &dyn Generator,
    existing: &mut TextSet,
    origin: Origin,
) -> Batch {
    let cells = paraphrase_prompts
        .iter()
        .map(|pp| {
            let filled = text::fill_slots(&pp.text, &prompt.text, None);
            let request = GenerateRequest { seed: origin.request_seed("paraphrase", &filled), prompt: filled, n: c };
            (vec![prompt.id], pp, request)
        })
        .collect();
    collect_layer1(cells, OperatorKind::SentenceParaphrase, generator, existing, origin)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::{BackendError, GenerateResponse, MockGenerator};
    use crate::catalog;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const ORIGIN: Origin = Origin { run_seed: 1, generation: 1 };

    fn layer1(i: usize, text: &str) -> Prompt {
        Prompt::seed(0, PromptLayer::Layer1, i, text)
    }

    fn pool(layer: PromptLayer, texts: &[&str]) -> Vec<Prompt> {
        texts.iter().enumerate().map(|(i, t)| Prompt::seed(0, layer, i, *t)).collect()
    }

    /// Every completion is distinct and valid.
    struct Unique;
    impl Generator for Unique {
        fn generate(&self, r: &GenerateRequest) -> Result<GenerateResponse, BackendError> {
            let h = stable_hash(&[r.prompt.as_bytes()]);
            Ok(GenerateResponse { texts: (0..r.n).map(|i| format!("variant {h:x} {i} SENTENCE_1 SENTENCE_2 <em>")).collect() })
        }
    }

    struct Fixed(&'static str);
    impl Generator for Fixed {
        fn generate(&self, r: &GenerateRequest) -> Result<GenerateResponse, BackendError> {
            Ok(GenerateResponse { texts: vec![self.0.to_string(); r.n] })
        }
    }

    struct Down;
    impl Generator for Down {
        fn generate(&self, _: &GenerateRequest) -> Result<GenerateResponse, BackendError> {
            Err(BackendError::Permanent { request_id: "x".into(), status: Some(400), message: "bad".into() })
        }
    }

    #[test]
    fn pair_sample_cross_product() {
        let (a, b, c) = (layer1(0, "a <em>"), layer1(1, "b <em>"), layer1(2, "c <em>"));
        let pairs = pair_sample(&[vec![a.clone()], vec![b.clone()], vec![c.clone()]]);
        let ids: Vec<(PromptId, PromptId)> = pairs.iter().map(|(x, y)| (x.id, y.id)).collect();
        assert_eq!(ids, vec![(a.id, b.id), (a.id, c.id), (b.id, c.id)]);
        assert!(pair_sample(&[vec![a.clone()], vec![a.clone()], vec![a.clone()]]).is_empty());
    }

    #[test]
    fn pair_sample_k2_gives_twelve() {
        let ps: Vec<Prompt> = (0..6).map(|i| layer1(i, "x <em>")).collect();
        let best = vec![ps[0..2].to_vec(), ps[2..4].to_vec(), ps[4..6].to_vec()];
        assert_eq!(pair_sample(&best).len(), 12);
    }

    #[test]
    fn combine_counts() {
        let pairs = pair_sample(&[vec![layer1(0, "a <em>")], vec![layer1(1, "b <em>")], vec![layer1(2, "c <em>")]]);
        let cps = pool(PromptLayer::Layer2Combine, &catalog::COMBINE_PROMPTS[..2]);
        let mut existing = TextSet::default();
        let out = combine(&pairs, &cps, 3, &Unique, &mut existing, ORIGIN);
        assert_eq!(out.accepted.len(), 18);
        assert!(out.rejected.is_empty());
        assert!(out.accepted.iter().all(|p| p.lineage.len() == 2 && p.check().is_ok()));
    }

    #[test]
    fn combine_rejects_missing_placeholder_and_duplicates() {
        let pairs = vec![(layer1(0, "a <em>"), layer1(1, "b <em>"))];
        let cps = pool(PromptLayer::Layer2Combine, &catalog::COMBINE_PROMPTS[..1]);
        let out = combine(&pairs, &cps, 2, &Fixed("no placeholder"), &mut TextSet::default(), ORIGIN);
        assert_eq!(out.rejected, vec![Rejection::MissingPlaceholder; 2]);
        let out = combine(&pairs, &cps, 2, &Fixed("same <em>"), &mut TextSet::default(), ORIGIN);
        assert_eq!(out.accepted.len(), 1);
        assert_eq!(out.rejected, vec![Rejection::Duplicate]);
    }

    #[test]
    fn sentence_paraphrase_counts_and_dedup() {
        let parent = layer1(0, "Please complete the sentence: I felt <em> when/because");
        let pps = pool(PromptLayer::Layer2Paraphrase, &catalog::PARAPHRASE_PROMPTS);
        let mut existing = TextSet::from_prompts([&parent]);
        let out = sentence_paraphrase(&parent, &pps, 3, &Unique, &mut existing, ORIGIN);
        assert_eq!(out.accepted.len(), 30);
        let echo = sentence_paraphrase(&parent, &pps[..1], 1, &Fixed("Please complete the sentence: I felt <em> when/because"), &mut existing, ORIGIN);
        assert_eq!(echo.rejected, vec![Rejection::Duplicate]);
    }

    #[test]
    fn generator_failure_skips_cell() {
        let parent = layer1(0, "Write a text that expresses <em>");
        let pps = pool(PromptLayer::Layer2Paraphrase, &catalog::PARAPHRASE_PROMPTS[..2]);
        let out = sentence_paraphrase(&parent, &pps, 3, &Down, &mut TextSet::default(), ORIGIN);
        assert!(out.accepted.is_empty());
        assert_eq!(out.rejected.len(), 6);
    }

    #[test]
    fn mutation_appends_and_keeps_markers() {
        let cps = pool(PromptLayer::Layer2Combine, &catalog::COMBINE_PROMPTS[2..3]);
        let fixed = pool(PromptLayer::Layer3Fixed, &catalog::FIXED_PROMPTS[2..3]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (out, batch) = mutate_layer2(&cps, &fixed, &MockGenerator::new(0), &mut rng, ORIGIN);
        assert_eq!(out.len(), 2);
        assert_eq!(batch.accepted.len(), 1);
        let mutant = &out[1];
        assert!(mutant.check().is_ok(), "{}", mutant.text);
        assert_eq!(mutant.lineage, vec![cps[0].id]);
        assert_eq!(mutant.operator_id, Some(fixed[0].id));
    }

    #[test]
    fn mutation_discards_echo_and_missing_slot() {
        let pps = pool(PromptLayer::Layer2Paraphrase, &catalog::PARAPHRASE_PROMPTS[..1]);
        let fixed = pool(PromptLayer::Layer3Fixed, &catalog::FIXED_PROMPTS);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (out, batch) = mutate_layer2(&pps, &fixed, &Fixed(catalog::PARAPHRASE_PROMPTS[0]), &mut rng, ORIGIN);
        assert_eq!(out, pps);
        assert_eq!(batch.rejected, vec![Rejection::Duplicate]);
        let (out, batch) = mutate_layer2(&pps, &fixed, &Fixed("Rewrite it"), &mut rng, ORIGIN);
        assert_eq!(out, pps);
        assert_eq!(batch.rejected, vec![Rejection::MissingSlot]);
    }
}
