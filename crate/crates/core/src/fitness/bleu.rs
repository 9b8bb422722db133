//! Sentence-level BLEU used by the echo filter.
//!
//! Modified n-gram precisions for n = 1..=min(4, |candidate|), geometric mean,
//! brevity penalty `exp(1 - r/c)` when the candidate is shorter than the
//! reference. No smoothing: any zero precision gives 0. Text is case-folded
//! and split on whitespace, so punctuation stays attached to its word.

use std::collections::HashMap;

use super::FitnessError;
use crate::scalar::Scalar;

fn ngram_counts<'a, 'b>(tokens: &'b [&'a str], n: usize) -> HashMap<&'b [&'a str], usize> {
    let mut counts = HashMap::new();
    for gram in tokens.windows(n) {
        *counts.entry(gram).or_insert(0) += 1;
    }
    counts
}

/// BLEU of a candidate token sequence against a single reference.
pub fn sentence_bleu<T: Scalar>(candidate: &[&str], reference: &[&str]) -> Result<T, FitnessError> {
    if candidate.is_empty() || reference.is_empty() {
        return Err(FitnessError::EmptyBleuInput);
    }
    let order = candidate.len().min(4);
    let mut log_sum = T::zero();
    for n in 1..=order {
        let cand = ngram_counts(candidate, n);
        let refs = ngram_counts(reference, n);
        let matched: usize = cand.iter().map(|(g, c)| (*c).min(refs.get(g).copied().unwrap_or(0))).sum();
        if matched == 0 {
            return Ok(T::zero());
        }
        let total = candidate.len() + 1 - n;
        let p = T::from_usize(matched).expect("count fits") / T::from_usize(total).expect("count fits");
        log_sum = log_sum + p.ln();
    }
    let c = T::from_usize(candidate.len()).expect("length fits");
    let r = T::from_usize(reference.len()).expect("length fits");
    let bp = if c < r { (T::one() - r / c).exp() } else { T::one() };
    let score = bp * (log_sum / T::from_usize(order).expect("order fits")).exp();
    Ok(score.min(T::one()))
}

/// Case-folded whitespace tokenization followed by [`sentence_bleu`].
pub fn text_bleu<T: Scalar>(candidate: &str, reference: &str) -> Result<T, FitnessError> {
    let c = candidate.to_lowercase();
    let r = reference.to_lowercase();
    let ct: Vec<&str> = c.split_whitespace().collect();
    let rt: Vec<&str> = r.split_whitespace().collect();
    sentence_bleu(&ct, &rt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identity_is_one() {
        assert_eq!(text_bleu::<f64>("Write a text that expresses joy", "write a TEXT that expresses joy").unwrap(), 1.0);
        assert_eq!(text_bleu::<f32>("joy", "joy").unwrap(), 1.0);
    }

    #[test]
    fn disjoint_is_zero() {
        assert_eq!(text_bleu::<f64>("alpha beta", "gamma delta").unwrap(), 0.0);
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(text_bleu::<f64>("", "a").is_err());
        assert!(text_bleu::<f64>("a", " ").is_err());
    }

    #[test]
    fn brevity_penalty_applies_to_short_candidates() {
        // All precisions 1, c = 2, r = 4: exp(1 - 2) = e^-1.
        let v = text_bleu::<f64>("a b", "a b c d").unwrap();
        assert!((v - (-1.0f64).exp()).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn self_bleu_is_one(words in prop::collection::vec("[a-d]{1,3}", 1..12)) {
            let s = words.join(" ");
            prop_assert!((text_bleu::<f64>(&s, &s).unwrap() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn stays_in_unit_interval(a in prop::collection::vec("[a-c]", 1..10), b in prop::collection::vec("[a-c]", 1..10)) {
            let v = text_bleu::<f64>(&a.join(" "), &b.join(" ")).unwrap();
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }
}
