//! Deterministic in-process text generator.
//!
//! Requests are classified by shape:
//! - a prompt still carrying `SENTENCE_1` is a Layer-3 rewrite of a Layer-2
//!   template; the quoted payload is returned with synonym swaps, markers kept;
//! - two quoted segments make a combine request; the two sentences are spliced;
//! - one quoted segment makes a paraphrase request; directive words in the
//!   instruction (formal, simplify, expand, ...) steer the rewrite;
//! - anything else is a task prompt; the texts embed keywords for the emotion
//!   named in the prompt, shaped by trigger words the prompt contains.
//!
//! Quality is deliberately shallow. What matters is that prompt wording moves
//! the output along the same axes the lexicon styles measure.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::lexicon::{bare_token, EMOTION_KEYWORDS};
use super::{BackendError, GenerateRequest, GenerateResponse, Generator};
use crate::text::{self, EMOTION_PLACEHOLDER, SLOT_1};
use crate::types::stable_hash;

/// Interchangeable words used by every rewrite.
const SYNONYMS: &[&[&str]] = &[
    &["combine", "merge", "blend", "fuse"],
    &["create", "form", "produce", "craft"],
    &["new", "fresh", "novel"],
    &["sentence", "statement", "line"],
    &["paraphrase", "rephrase", "reword"],
    &["rewrite", "recast", "rework"],
    &["following", "given"],
    &["cohesive", "unified", "coherent"],
    &["write", "compose", "pen"],
    &["text", "passage", "message"],
    &["describe", "portray", "depict"],
    &["situation", "scenario", "moment"],
    &["person", "individual"],
    &["example", "instance", "illustration"],
    &["expresses", "conveys", "shows"],
    &["express", "convey", "show"],
    &["clear", "plain"],
    &["concise", "brief", "short"],
    &["simplify", "clarify"],
    &["summarize", "condense"],
    &["expand", "elaborate"],
    &["detailed", "thorough"],
    &["creatively", "inventively"],
    &["engaging", "captivating"],
    &["meaning", "sense"],
    &["keeping", "retaining", "preserving"],
    &["ideas", "concepts", "themes"],
    &["felt", "experienced"],
    &["provide", "give", "offer"],
];

const FIRST_PERSON_TRIGGERS: &[&str] =
    &["i", "me", "my", "myself", "personal", "you", "your", "yourself", "own", "we"];
const SHORT_TRIGGERS: &[&str] = &[
    "short", "brief", "briefly", "concise", "fewer", "words", "phrase", "phrases", "headline",
    "summarize", "condense", "simple", "simplify", "tweet", "post", "sentence", "statement", "line",
];
const LONG_TRIGGERS: &[&str] = &[
    "describe", "portray", "depict", "detail", "detailed", "thorough", "situation", "scenario",
    "event", "experience", "experienced", "story", "explain", "expand", "elaborate", "narrative",
];
const INFORMAL_TRIGGERS: &[&str] =
    &["casual", "casually", "informal", "tweet", "post", "social", "fun", "friendly", "chat", "share"];
const INTENSITY_TRIGGERS: &[&str] = &[
    "strong", "strongly", "intense", "intensely", "very", "deeply", "vivid", "vividly", "powerful",
    "powerfully", "extremely", "really", "truly", "clearly",
];

const THIRD_PERSON_OPENERS: &[&str] = &["She", "He", "The family", "Everyone", "The team", "They"];
const FIRST_PERSON_OPENERS: &[&str] = &["I", "My friend and I", "Honestly I", "I"];
const FILLER: &[&str] = &[
    "felt", "so", "when", "the", "news", "came", "after", "a", "long", "day", "at", "work", "and",
    "everyone", "in", "town", "saw", "it", "again", "this", "morning", "on", "walk", "home", "call",
    "from", "old", "letter", "street", "result", "match", "visit", "weekend", "moment", "with",
];
const MARKERS: &[&str] = &["lol", "omg", "!!", ":)", "wow", "tbh"];

/// How a generation request is to be answered.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RequestShape {
    /// Layer-3 rewrite of a Layer-2 template.
    Template { payload: String },
    Combine { instruction: String, first: String, second: String },
    Paraphrase { instruction: String, source: String },
    Task,
}

/// Classifies a request by the markers and quoted segments it carries.
pub fn classify(prompt: &str) -> RequestShape {
    if prompt.contains(SLOT_1) {
        let payload = match (prompt.find('"'), prompt.rfind('"')) {
            (Some(a), Some(b)) if b > a => prompt[a + 1..b].to_string(),
            _ => prompt.to_string(),
        };
        return RequestShape::Template { payload };
    }
    let parts: Vec<&str> = prompt.split('"').collect();
    let quoted: Vec<&str> = parts.iter().skip(1).step_by(2).copied().collect();
    let instruction = parts.iter().step_by(2).copied().collect::<Vec<_>>().join(" ");
    match quoted.len() {
        0 => RequestShape::Task,
        1 => RequestShape::Paraphrase { instruction, source: quoted[0].to_string() },
        _ => RequestShape::Combine {
            instruction,
            first: quoted[0].to_string(),
            second: quoted[1].to_string(),
        },
    }
}

fn count_triggers(words: &[String], triggers: &[&str]) -> usize {
    words.iter().filter(|w| triggers.contains(&w.as_str())).count()
}

fn capitalize_like(original: &str, word: &str) -> String {
    if original.chars().next().is_some_and(char::is_uppercase) {
        let mut c = word.chars();
        match c.next() {
            Some(f) => f.to_uppercase().chain(c).collect(),
            None => String::new(),
        }
    } else {
        word.to_string()
    }
}

/// Replaces the core word of `token`, keeping surrounding punctuation.
fn swap_core(token: &str, pick: u64) -> Option<String> {
    if token.contains(EMOTION_PLACEHOLDER) || token.contains(SLOT_1) || token.contains("SENTENCE_") {
        return None;
    }
    let start = token.find(|c: char| c.is_alphanumeric())?;
    let end = token.rfind(|c: char| c.is_alphanumeric())? + 1;
    let core = &token[start..end];
    let lower = core.to_lowercase();
    let group = SYNONYMS.iter().find(|g| g.contains(&lower.as_str()))?;
    let others: Vec<&&str> = group.iter().filter(|w| **w != lower).collect();
    let replacement = others[(pick % others.len() as u64) as usize];
    Some(format!("{}{}{}", &token[..start], capitalize_like(core, replacement), &token[end..]))
}

/// Swaps every word that has synonyms, choosing alternatives by hash.
pub fn synonym_rewrite(text: &str, salt: u64) -> String {
    text.split_whitespace()
        .enumerate()
        .map(|(i, tok)| {
            let pick = stable_hash(&[&salt.to_le_bytes(), &(i as u64).to_le_bytes(), tok.as_bytes()]);
            swap_core(tok, pick).unwrap_or_else(|| tok.to_string())
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Moves the clause after the first comma (or the last word) to the front.
fn rotate(text: &str) -> String {
    if let Some((head, tail)) = text.split_once(", ") {
        if !tail.trim().is_empty() {
            return format!("{}, {}", tail.trim_end_matches(['.', '?']), head);
        }
    }
    let mut toks = text::tokens(text);
    if toks.len() > 2 {
        let last = toks.pop().unwrap_or_default();
        toks.insert(0, last);
    }
    toks.join(" ")
}

fn ensure_placeholder(text: String) -> String {
    if text::has_placeholder(&text) {
        text
    } else {
        format!("{text} about {EMOTION_PLACEHOLDER}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Directive {
    Formal,
    Casual,
    Simplify,
    Summarize,
    Expand,
    Creative,
    Perspective,
    Plain,
}

fn directives(instruction: &str) -> Vec<Directive> {
    let words: Vec<String> = instruction.split_whitespace().map(bare_token).collect();
    let has = |set: &[&str]| words.iter().any(|w| set.contains(&w.as_str()));
    let mut out = Vec::new();
    if has(&["formal"]) {
        out.push(Directive::Formal);
    }
    if has(&["informal", "casual", "casually"]) {
        out.push(Directive::Casual);
    }
    if has(&["simplify", "clarify", "younger", "easier", "simple"]) {
        out.push(Directive::Simplify);
    }
    if has(&["summarize", "condense", "fewer", "concise", "brief", "short"]) {
        out.push(Directive::Summarize);
    }
    if has(&["expand", "elaborate", "detailed", "thorough"]) {
        out.push(Directive::Expand);
    }
    if has(&["creatively", "inventively", "engaging", "captivating"]) {
        out.push(Directive::Creative);
    }
    if has(&["perspective", "person", "voice"]) {
        out.push(Directive::Perspective);
    }
    if out.is_empty() {
        out.push(Directive::Plain);
    }
    out
}

fn apply_directive(source: &str, directive: Directive, salt: u64) -> String {
    let toks = text::tokens(source);
    let pick = |set: &[&'static str]| set[(salt % set.len() as u64) as usize];
    match directive {
        Directive::Formal => {
            let kept: Vec<&str> = toks.iter().copied().filter(|t| !super::lexicon::is_informal_marker(t)).collect();
            format!("{} {}", pick(&["Kindly", "Please", "Formally"]), kept.join(" "))
        }
        Directive::Casual => format!("{} {}", source, pick(&["casually", "lol", "for a fun post", "as a tweet"])),
        Directive::Simplify => toks
            .iter()
            .copied()
            .filter(|t| text::is_placeholder_token(t) || t.chars().count() <= 8)
            .collect::<Vec<_>>()
            .join(" "),
        Directive::Summarize => {
            let keep = (toks.len() * 3).div_ceil(5).max(2);
            let mut out: Vec<&str> = toks.iter().copied().take(keep).collect();
            if !out.iter().any(|t| text::is_placeholder_token(t)) {
                out.push(EMOTION_PLACEHOLDER);
            }
            out.join(" ")
        }
        Directive::Expand => format!(
            "{} {}",
            source,
            pick(&["in as much detail as possible", "describing the situation in detail", "and explain the whole story"])
        ),
        Directive::Creative => format!("{} {}", pick(&["Vividly", "Imagine and", "Creatively"]), source),
        Directive::Perspective => {
            let first = toks.iter().any(|t| matches!(bare_token(t).as_str(), "i" | "my" | "me"));
            let swapped: Vec<String> = toks
                .iter()
                .map(|t| match (first, bare_token(t).as_str()) {
                    (true, "i") => "someone".to_string(),
                    (true, "my") => "their".to_string(),
                    (true, "me") => "them".to_string(),
                    (false, "person" | "someone" | "reader" | "individual") => "I".to_string(),
                    _ => t.to_string(),
                })
                .collect();
            if first || swapped.iter().any(|t| t == "I") {
                swapped.join(" ")
            } else {
                format!("{} in your own words", swapped.join(" "))
            }
        }
        Directive::Plain => source.to_string(),
    }
}

/// Deterministic generator; a pure function of the request and its seed.
#[derive(Debug, Clone)]
pub struct MockGenerator {
    seed: u64,
}

impl MockGenerator {
    pub fn new(seed: u64) -> Self {
        MockGenerator { seed }
    }

    fn salt(&self, request: &GenerateRequest, index: usize) -> u64 {
        stable_hash(&[
            &self.seed.to_le_bytes(),
            &request.seed.to_le_bytes(),
            request.prompt.as_bytes(),
            &(index as u64).to_le_bytes(),
        ])
    }

    fn template(&self, payload: &str, salt: u64) -> String {
        let out = synonym_rewrite(payload, salt);
        if out == payload {
            synonym_rewrite(payload, salt.wrapping_add(1))
        } else {
            out
        }
    }

    fn paraphrase(&self, instruction: &str, source: &str, index: usize, salt: u64) -> String {
        let ds = directives(instruction);
        let d = ds[index % ds.len()];
        let mut out = apply_directive(source.trim(), d, salt);
        out = synonym_rewrite(&out, salt);
        if index % 2 == 1 {
            out = rotate(&out);
        }
        ensure_placeholder(text::normalize(&out))
    }

    fn combine(&self, instruction: &str, first: &str, second: &str, index: usize, salt: u64) -> String {
        let a = text::tokens(first);
        let b = text::tokens(second);
        let (ha, hb) = (a.len().div_ceil(2), b.len() / 2);
        let spliced: Vec<&str> = match (salt as usize + index) % 3 {
            0 => a[..ha].iter().chain(&b[hb..]).copied().collect(),
            1 => b[..b.len().div_ceil(2)].iter().chain(&a[a.len() / 2..]).copied().collect(),
            _ => {
                let seen: Vec<String> = a.iter().map(|t| bare_token(t)).collect();
                let extra = b.iter().copied().filter(|t| !seen.contains(&bare_token(t)) && !text::is_placeholder_token(t));
                a.iter().copied().chain(std::iter::once("and")).chain(extra).collect()
            }
        };
        let mut out = spliced.join(" ");
        // Only directives that add or reword apply here; trimming could drop a parent's content.
        let ds: Vec<Directive> = directives(instruction)
            .into_iter()
            .filter(|d| !matches!(d, Directive::Simplify | Directive::Summarize))
            .collect();
        if let Some(d) = ds.get(index % ds.len().max(1)) {
            out = apply_directive(&out, *d, salt);
        }
        out = synonym_rewrite(&out, salt);
        ensure_placeholder(text::normalize(&out))
    }

    fn task(&self, prompt: &str, salt: u64, index: usize) -> String {
        let toks = text::tokens(prompt);
        if index == 0 && toks.len() <= 3 {
            // Very short prompts get parroted once; the echo filter catches it.
            return prompt.to_string();
        }
        let words: Vec<String> = toks.iter().map(|t| bare_token(t)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(salt);
        let Some(emotion) = words
            .iter()
            .find_map(|w| EMOTION_KEYWORDS.iter().position(|(label, _)| label == w))
        else {
            let len = 8 + rng.gen_range(0..5);
            return (0..len).map(|_| *FILLER.choose(&mut rng).unwrap_or(&"the")).collect::<Vec<_>>().join(" ");
        };

        let first_person = count_triggers(&words, FIRST_PERSON_TRIGGERS) > 0;
        let short = count_triggers(&words, SHORT_TRIGGERS);
        let long = count_triggers(&words, LONG_TRIGGERS);
        let informal = count_triggers(&words, INFORMAL_TRIGGERS) > 0;
        let intensity = count_triggers(&words, INTENSITY_TRIGGERS);
        let mentions = words.iter().filter(|w| **w == EMOTION_KEYWORDS[emotion].0).count();

        let target_len: usize = match long.cmp(&short) {
            std::cmp::Ordering::Greater => 20,
            std::cmp::Ordering::Less => 7,
            std::cmp::Ordering::Equal => 12,
        };
        let mut k = (1 + intensity.min(2) + mentions.saturating_sub(1).min(1)).min(4);
        if k >= 2 && rng.gen_bool(0.2) {
            k -= 1;
        }
        let distractor_p = (0.4 - 0.1 * intensity as f64).max(0.05);
        let mut keywords: Vec<&str> = EMOTION_KEYWORDS[emotion].1.choose_multiple(&mut rng, k).copied().collect();
        if rng.gen_bool(distractor_p) {
            let other = (emotion + rng.gen_range(1..EMOTION_KEYWORDS.len())) % EMOTION_KEYWORDS.len();
            keywords.push(EMOTION_KEYWORDS[other].1.choose(&mut rng).copied().unwrap_or("fear"));
        }

        let opener = if first_person {
            FIRST_PERSON_OPENERS.choose(&mut rng)
        } else {
            THIRD_PERSON_OPENERS.choose(&mut rng)
        }
        .copied()
        .unwrap_or("They");
        let body_len = target_len.saturating_sub(text::tokens(opener).len()).max(keywords.len());
        let mut body: Vec<&str> = (0..body_len).map(|_| *FILLER.choose(&mut rng).unwrap_or(&"the")).collect();
        let mut slots: Vec<usize> = (0..body_len).collect();
        slots.shuffle(&mut rng);
        for (slot, kw) in slots.into_iter().zip(&keywords) {
            body[slot] = kw;
        }
        let mut out = format!("{opener} {}", body.join(" "));
        if first_person && index % 2 == 1 {
            out.push_str(" for me");
        }
        if informal {
            let tag = keywords.first().copied().unwrap_or("mood");
            let marker = MARKERS.choose(&mut rng).copied().unwrap_or("lol");
            out = format!("{out} #{tag} {marker}");
        } else {
            out.push('.');
        }
        out
    }
}

impl Generator for MockGenerator {
    fn generate(&self, request: &GenerateRequest) -> Result<GenerateResponse, BackendError> {
        let shape = classify(&request.prompt);
        let texts = (0..request.n)
            .map(|i| {
                let salt = self.salt(request, i);
                match &shape {
                    RequestShape::Template { payload } => self.template(payload, salt),
                    RequestShape::Paraphrase { instruction, source } => self.paraphrase(instruction, source, i, salt),
                    RequestShape::Combine { instruction, first, second } => self.combine(instruction, first, second, i, salt),
                    RequestShape::Task => self.task(&request.prompt, salt, i),
                }
            })
            .collect();
        Ok(GenerateResponse { texts })
    }
}
