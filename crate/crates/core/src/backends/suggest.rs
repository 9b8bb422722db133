//! Deterministic masked-token suggester.

use super::{check_suggest_request, BackendError, SuggestRequest, SuggestResponse, Suggester};
use crate::text::MASK;
use crate::types::stable_hash;

/// Tokens offered in the middle or at the end of a sentence.
pub const VOCABULARY: &[&str] = &[
    "vividly", "strongly", "briefly", "personal", "short", "casual", "detailed", "deeply", "my",
    "story", "tweet", "headline", "really", "today", "simple", "your", "the", "a", "about",
    "with", "clearly", "intense", "fun", "own", "moment",
];

/// Tokens offered when the mask opens a sentence.
pub const SENTENCE_INITIAL: &[&str] =
    &["Please", "Write", "Describe", "Share", "Compose", "Tell", "Briefly", "Casually", "Imagine", "Post"];

fn at_sentence_start(left: &str) -> bool {
    let left = left.trim_end();
    left.is_empty() || left.ends_with(['.', '?', '!', ':'])
}

#[derive(Debug, Clone)]
pub struct MockSuggester {
    seed: u64,
}

impl MockSuggester {
    pub fn new(seed: u64) -> Self {
        MockSuggester { seed }
    }
}

impl Suggester for MockSuggester {
    fn suggest(&self, request: &SuggestRequest) -> Result<SuggestResponse, BackendError> {
        check_suggest_request(request)?;
        let (left, right) = request.text.split_once(MASK).unwrap_or((&request.text, ""));
        let h = stable_hash(&[&self.seed.to_le_bytes(), left.trim().as_bytes(), right.trim().as_bytes()]);
        let vocab = if at_sentence_start(left) { SENTENCE_INITIAL } else { VOCABULARY };
        Ok(SuggestResponse { token: vocab[(h % vocab.len() as u64) as usize].to_string() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn suggest(text: &str) -> String {
        MockSuggester::new(3).suggest(&SuggestRequest { text: text.into() }).unwrap().token
    }

    #[test]
    fn deterministic() {
        assert_eq!(suggest("Write a <mask> text"), suggest("Write a <mask> text"));
    }

    #[test]
    fn sentence_start_uses_initial_vocabulary() {
        for text in ["<mask> a text that expresses <em>", "Done. <mask> more", "<mask> sentence"] {
            assert!(SENTENCE_INITIAL.contains(&suggest(text).as_str()));
        }
        assert!(VOCABULARY.contains(&suggest("Write a <mask> text").as_str()));
    }

    #[test]
    fn rejects_missing_mask() {
        let s = MockSuggester::new(0);
        assert!(s.suggest(&SuggestRequest { text: "no mask".into() }).is_err());
        assert!(s.suggest(&SuggestRequest { text: "<mask> <mask>".into() }).is_err());
    }
}
