//! Word-level paraphrase: add, remove or replace one token at a time.

use log::debug;
use rand::Rng;

use super::{admit_layer1, Batch, Origin, Rejection, TextSet};
use crate::backends::{SuggestRequest, Suggester};
use crate::text::{self, MASK};
use crate::types::{OperatorKind, Prompt, PromptId, PromptLayer};

fn suggest(suggester: &dyn Suggester, tokens: &[&str], at: usize, replace: bool) -> Option<String> {
    let mut masked: Vec<&str> = tokens.to_vec();
    if replace {
        masked[at] = MASK;
    } else {
        masked.insert(at, MASK);
    }
    match suggester.suggest(&SuggestRequest { text: masked.join(" ") }) {
        Ok(r) if !r.token.is_empty() && !r.token.chars().any(char::is_whitespace) => Some(r.token),
        Ok(r) => {
            debug!("unusable suggestion {:?}", r.token);
            None
        }
        Err(e) => {
            debug!("suggester failed: {e}");
            None
        }
    }
}

/// Produces `c` single-edit variants of `prompt`.
///
/// Each variant draws Add, Remove or Replace uniformly. `<em>` is never removed
/// or replaced. A failed suggestion falls back to Remove. Variants that drop
/// below two tokens, lose the placeholder or repeat an existing text are rejected.
pub fn word_paraphrase(
    prompt: &Prompt,
    c: usize,
    suggester: &dyn Suggester,
    rng: &mut impl Rng,
    existing: &mut TextSet,
    origin: Origin,
) -> Batch {
    let tokens = text::tokens(&prompt.text);
    let mut batch = Batch::default();
    if tokens.len() < 2 {
        batch.rejected.extend(std::iter::repeat_n(Rejection::TooShort, c));
        return batch;
    }
    let editable: Vec<usize> = (0..tokens.len()).filter(|&i| !text::is_placeholder_token(tokens[i])).collect();

    for variant in 0..c {
        let mut kind = [OperatorKind::WordAdd, OperatorKind::WordRemove, OperatorKind::WordReplace][rng.gen_range(0..3)];
        let mut edited: Option<Vec<String>> = None;
        match kind {
            OperatorKind::WordAdd => {
                let at = rng.gen_range(0..=tokens.len());
                if let Some(token) = suggest(suggester, &tokens, at, false) {
                    let mut v: Vec<String> = tokens.iter().map(|t| t.to_string()).collect();
                    v.insert(at, token);
                    edited = Some(v);
                }
            }
            OperatorKind::WordReplace if !editable.is_empty() => {
                let at = editable[rng.gen_range(0..editable.len())];
                if let Some(token) = suggest(suggester, &tokens, at, true) {
                    let mut v: Vec<String> = tokens.iter().map(|t| t.to_string()).collect();
                    v[at] = token;
                    edited = Some(v);
                }
            }
            _ => {}
        }
        if edited.is_none() {
            kind = OperatorKind::WordRemove;
            if !editable.is_empty() {
                let at = editable[rng.gen_range(0..editable.len())];
                let mut v: Vec<String> = tokens.iter().map(|t| t.to_string()).collect();
                v.remove(at);
                edited = Some(v);
            }
        }
        let Some(v) = edited else {
            batch.rejected.push(Rejection::TooShort);
            continue;
        };
        if v.len() < 2 {
            batch.rejected.push(Rejection::TooShort);
            continue;
        }
        match admit_layer1(&v.join(" "), existing) {
            Ok(text) => batch.accepted.push(Prompt {
                id: PromptId::for_offspring(origin.run_seed, origin.generation, kind, None, &[prompt.id], variant),
                layer: PromptLayer::Layer1,
                text,
                generation_born: origin.generation,
                lineage: vec![prompt.id],
                operator_id: None,
                operator_kind: kind,
            }),
            Err(r) => batch.rejected.push(r),
        }
    }
    batch
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::{BackendError, MockSuggester, SuggestResponse};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const ORIGIN: Origin = Origin { run_seed: 3, generation: 2 };

    struct Token(&'static str);
    impl Suggester for Token {
        fn suggest(&self, _: &SuggestRequest) -> Result<SuggestResponse, BackendError> {
            Ok(SuggestResponse { token: self.0.into() })
        }
    }

    struct Broken;
    impl Suggester for Broken {
        fn suggest(&self, _: &SuggestRequest) -> Result<SuggestResponse, BackendError> {
            Err(BackendError::Exhausted { request_id: "s".into(), attempts: 1, last: "timeout".into() })
        }
    }

    fn seed(text: &str) -> Prompt {
        Prompt::seed(0, PromptLayer::Layer1, 0, text)
    }

    #[test]
    fn edits_follow_their_semantics() {
        let p = seed("Write a text that expresses <em>");
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let out = word_paraphrase(&p, 60, &Token("today"), &mut rng, &mut TextSet::from_prompts([&p]), ORIGIN);
        let texts: Vec<&str> = out.accepted.iter().map(|q| q.text.as_str()).collect();
        assert!(texts.contains(&"Write a text that expresses <em> today"));
        assert!(texts.contains(&"Write a text expresses <em>"));
        assert!(texts.contains(&"Write a text that today <em>"));
    }

    #[test]
    fn suggester_failure_falls_back_to_remove() {
        let p = seed("Write a text that expresses <em>");
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let out = word_paraphrase(&p, 10, &Broken, &mut rng, &mut TextSet::default(), ORIGIN);
        assert!(out.accepted.iter().all(|q| q.operator_kind == OperatorKind::WordRemove));
    }

    #[test]
    fn two_token_prompt_cannot_shrink_further() {
        let p = seed("<em> sentence");
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let out = word_paraphrase(&p, 10, &Broken, &mut rng, &mut TextSet::default(), ORIGIN);
        assert!(out.accepted.is_empty());
        assert_eq!(out.rejected, vec![Rejection::TooShort; 10]);
    }

    proptest! {
        #[test]
        fn token_count_changes_by_kind(seed_value in 0u64..500, words in prop::collection::vec("[a-z]{1,6}", 1..8), pos in 0usize..8) {
            let mut toks = words.clone();
            toks.insert(pos.min(toks.len()), "<em>".to_string());
            let p = seed(&toks.join(" "));
            let before = toks.len() as isize;
            let mut rng = ChaCha8Rng::seed_from_u64(seed_value);
            let out = word_paraphrase(&p, 3, &MockSuggester::new(seed_value), &mut rng, &mut TextSet::from_prompts([&p]), ORIGIN);
            for q in &out.accepted {
                let after = text::tokens(&q.text).len() as isize;
                let expected = match q.operator_kind {
                    OperatorKind::WordAdd => 1,
                    OperatorKind::WordRemove => -1,
                    _ => 0,
                };
                prop_assert_eq!(after - before, expected);
                prop_assert!(text::has_placeholder(&q.text));
            }
        }
    }
}
