//! Deterministic keyword scorer standing in for a domain emotion classifier.
//!
//! score = style(text) · σ(SLOPE · (target hits − max hits of any other label))
//!
//! The style factor lies in (0, 1] and encodes a domain: personal narratives
//! like first-person, longer texts; social posts like informal markers;
//! headlines like short, impersonal texts. Those preferences pull in different
//! directions, so objectives built from different styles genuinely conflict.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{BackendError, ScoreRequest, ScoreResponse, Scorer};
use crate::types::EmotionLabel;

/// Logistic slope applied to the keyword margin.
pub const SLOPE: f64 = 1.5;

pub const EMOTION_KEYWORDS: [(&str, &[&str]); 5] = [
    (
        "anger",
        &["anger", "angry", "furious", "rage", "outraged", "irritated", "livid", "resentful", "hostile", "fuming", "enraged"],
    ),
    (
        "disgust",
        &["disgust", "disgusted", "gross", "revolting", "repulsive", "nauseating", "vile", "sickening", "appalled", "foul", "loathsome"],
    ),
    (
        "fear",
        &["fear", "afraid", "scared", "terrified", "frightened", "anxious", "panic", "dread", "nervous", "fearful", "alarmed"],
    ),
    (
        "joy",
        &["joy", "happy", "joyful", "delighted", "cheerful", "thrilled", "glad", "elated", "overjoyed", "ecstatic", "grateful"],
    ),
    (
        "sadness",
        &["sadness", "sad", "unhappy", "heartbroken", "miserable", "grief", "sorrow", "gloomy", "depressed", "tearful", "lonely"],
    ),
];

pub const FIRST_PERSON: [&str; 9] = ["i", "me", "my", "mine", "myself", "i'm", "i've", "we", "our"];

const INFORMAL_WORDS: [&str; 8] = ["lol", "omg", "ugh", "wow", "yay", "tbh", "smh", "haha"];
const EMOTICONS: [&str; 4] = [":)", ":(", ":d", ":/"];

/// Lowercased token with surrounding punctuation and a leading `#` removed.
pub fn bare_token(token: &str) -> String {
    token
        .trim_matches(|c: char| !c.is_alphanumeric() && c != '\'')
        .to_lowercase()
}

pub fn is_first_person(token: &str) -> bool {
    FIRST_PERSON.contains(&bare_token(token).as_str())
}

pub fn is_informal_marker(token: &str) -> bool {
    let lower = token.to_lowercase();
    lower.starts_with('#')
        || lower.contains("!!")
        || EMOTICONS.contains(&lower.as_str())
        || INFORMAL_WORDS.contains(&bare_token(token).as_str())
}

/// Surface features the style factors look at.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TextFeatures {
    pub length: usize,
    pub first_person: bool,
    pub informal_markers: usize,
}

impl TextFeatures {
    pub fn of(text: &str) -> Self {
        let tokens: Vec<&str> = text.split_whitespace().collect();
        TextFeatures {
            length: tokens.len(),
            first_person: tokens.iter().any(|t| is_first_person(t)),
            informal_markers: tokens.iter().filter(|t| is_informal_marker(t)).count(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LexiconStyle {
    /// No domain preference; the factor is always 1.
    Plain,
    /// Personal narratives: first person, longer texts.
    Narrative,
    /// Social media posts: informal markers, short texts.
    Social,
    /// News headlines: short, impersonal, no informal markers.
    Headline,
}

impl LexiconStyle {
    pub fn for_objective_name(name: &str) -> Self {
        match name.to_lowercase().as_str() {
            "isear" | "narrative" => LexiconStyle::Narrative,
            "tec" | "social" | "twitter" => LexiconStyle::Social,
            "affective_text" | "affectivetext" | "at" | "headline" | "news" => LexiconStyle::Headline,
            _ => LexiconStyle::Plain,
        }
    }

    /// Every domain starts from the same base; a text written for another domain earns little on top.
    pub fn factor(self, features: &TextFeatures) -> f64 {
        const BASE: f64 = 0.3;
        let len = features.length as f64;
        match self {
            LexiconStyle::Plain => 1.0,
            LexiconStyle::Narrative => {
                let voice = if features.first_person { 0.35 } else { 0.0 };
                BASE + voice + 0.35 * (len / 20.0).min(1.0)
            }
            LexiconStyle::Social => {
                let informal = (features.informal_markers as f64 / 2.0).min(1.0);
                let short = if features.length <= 14 { 0.25 } else { 0.0 };
                BASE + 0.45 * informal + short
            }
            LexiconStyle::Headline => {
                let impersonal = if features.first_person { 0.0 } else { 0.3 };
                let brevity = ((16.0 - len) / 8.0).clamp(0.0, 1.0);
                let informal = (features.informal_markers as f64).min(1.0);
                BASE + impersonal + 0.4 * brevity - 0.2 * informal
            }
        }
    }

    /// Factor applied to an empty text.
    pub fn base(self) -> f64 {
        self.factor(&TextFeatures::of(""))
    }
}

/// Keyword sets per emotion label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lexicon {
    words: BTreeMap<String, BTreeSet<String>>,
}

impl Default for Lexicon {
    fn default() -> Self {
        Lexicon {
            words: EMOTION_KEYWORDS
                .iter()
                .map(|(label, words)| (label.to_string(), words.iter().map(|w| w.to_string()).collect()))
                .collect(),
        }
    }
}

impl Lexicon {
    pub fn new(words: BTreeMap<String, BTreeSet<String>>) -> Self {
        Lexicon { words }
    }

    pub fn covers(&self, label: &EmotionLabel) -> bool {
        self.words.contains_key(label.as_str())
    }

    /// Keyword hits per label.
    pub fn counts(&self, text: &str) -> BTreeMap<&str, usize> {
        let tokens: Vec<String> = text.split_whitespace().map(bare_token).collect();
        self.words
            .iter()
            .map(|(label, words)| (label.as_str(), tokens.iter().filter(|t| words.contains(*t)).count()))
            .collect()
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Scores one text for one label.
pub fn lexicon_score(text: &str, label: &EmotionLabel, lexicon: &Lexicon, style: LexiconStyle) -> f64 {
    let counts = lexicon.counts(text);
    let target = counts.get(label.as_str()).copied().unwrap_or(0) as f64;
    let other = counts
        .iter()
        .filter(|(l, _)| **l != label.as_str())
        .map(|(_, c)| *c)
        .max()
        .unwrap_or(0) as f64;
    style.factor(&TextFeatures::of(text)) * sigmoid(SLOPE * (target - other))
}

pub struct LexiconScorer {
    lexicon: Lexicon,
    style: LexiconStyle,
}

impl LexiconScorer {
    pub fn new(lexicon: Lexicon, style: LexiconStyle) -> Self {
        LexiconScorer { lexicon, style }
    }
}

impl Scorer for LexiconScorer {
    fn score(&self, request: &ScoreRequest) -> Result<ScoreResponse, BackendError> {
        if !self.lexicon.covers(&request.label) {
            return Err(BackendError::InvalidRequest(format!("lexicon has no entry for {}", request.label)));
        }
        let scores = request
            .texts
            .iter()
            .map(|t| lexicon_score(t, &request.label, &self.lexicon, self.style))
            .collect();
        Ok(ScoreResponse { scores })
    }
}
