//! Domain types shared by every module.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::text::{self, SLOT_1, SLOT_2};
use crate::Score;

/// Which of the three prompt layers a prompt belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PromptLayer {
    Layer1,
    Layer2Combine,
    Layer2Paraphrase,
    Layer3Fixed,
}

/// How a prompt came into existence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum OperatorKind {
    Seed,
    SentenceParaphrase,
    WordAdd,
    WordRemove,
    WordReplace,
    Combine,
}

impl OperatorKind {
    pub const ALL: [OperatorKind; 6] = [
        OperatorKind::Seed,
        OperatorKind::SentenceParaphrase,
        OperatorKind::WordAdd,
        OperatorKind::WordRemove,
        OperatorKind::WordReplace,
        OperatorKind::Combine,
    ];

    /// Number of parents a prompt of this kind must list.
    pub fn parent_count(self) -> usize {
        match self {
            OperatorKind::Seed => 0,
            OperatorKind::Combine => 2,
            _ => 1,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            OperatorKind::Seed => "Seed",
            OperatorKind::SentenceParaphrase => "SentenceParaphrase",
            OperatorKind::WordAdd => "WordAdd",
            OperatorKind::WordRemove => "WordRemove",
            OperatorKind::WordReplace => "WordReplace",
            OperatorKind::Combine => "Combine",
        }
    }
}

impl fmt::Display for OperatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// 64-bit SHA-256 prefix over length-delimited parts.
pub fn stable_hash(parts: &[&[u8]]) -> u64 {
    let mut hasher = Sha256::new();
    for part in parts {
        hasher.update((part.len() as u64).to_le_bytes());
        hasher.update(part);
    }
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("sha256 digest has 32 bytes"))
}

/// Deterministic prompt identifier, rendered as 16 lowercase hex digits.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PromptId(pub u64);

impl PromptId {
    /// Seeds are identified by layer and catalog position.
    pub fn for_seed(run_seed: u64, layer: PromptLayer, index: usize) -> Self {
        PromptId(stable_hash(&[
            b"seed",
            &run_seed.to_le_bytes(),
            format!("{layer:?}").as_bytes(),
            &(index as u64).to_le_bytes(),
        ]))
    }

    /// Offspring are identified by where they were produced:
    /// run seed, generation, operator, parents and offspring index.
    pub fn for_offspring(
        run_seed: u64,
        generation: u32,
        kind: OperatorKind,
        operator: Option<PromptId>,
        parents: &[PromptId],
        index: usize,
    ) -> Self {
        let parent_bytes: Vec<u8> = parents.iter().flat_map(|p| p.0.to_le_bytes()).collect();
        let operator_bytes = operator.map(|o| o.0.to_le_bytes()).unwrap_or_default();
        PromptId(stable_hash(&[
            b"offspring",
            &run_seed.to_le_bytes(),
            &generation.to_le_bytes(),
            kind.as_str().as_bytes(),
            &operator_bytes,
            &parent_bytes,
            &(index as u64).to_le_bytes(),
        ]))
    }
}

impl fmt::Display for PromptId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

impl fmt::Debug for PromptId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PromptId({self})")
    }
}

impl FromStr for PromptId {
    type Err = std::num::ParseIntError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        u64::from_str_radix(s, 16).map(PromptId)
    }
}

impl Serialize for PromptId {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PromptId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A prompt genome. Immutable once built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prompt {
    pub id: PromptId,
    pub layer: PromptLayer,
    pub text: String,
    pub generation_born: u32,
    pub lineage: Vec<PromptId>,
    pub operator_id: Option<PromptId>,
    pub operator_kind: OperatorKind,
}

impl Prompt {
    pub fn seed(run_seed: u64, layer: PromptLayer, index: usize, text: impl Into<String>) -> Self {
        Prompt {
            id: PromptId::for_seed(run_seed, layer, index),
            layer,
            text: text.into(),
            generation_born: 0,
            lineage: Vec::new(),
            operator_id: None,
            operator_kind: OperatorKind::Seed,
        }
    }

    /// Checks the marker and lineage invariants.
    pub fn check(&self) -> Result<(), String> {
        match self.layer {
            PromptLayer::Layer1 => {
                if !text::has_placeholder(&self.text) {
                    return Err(format!("Layer-1 prompt {} missing <em> placeholder", self.id));
                }
            }
            PromptLayer::Layer2Combine => {
                if !self.text.contains(SLOT_1) || !self.text.contains(SLOT_2) {
                    return Err(format!("combine prompt {} missing SENTENCE_1/SENTENCE_2", self.id));
                }
            }
            PromptLayer::Layer2Paraphrase | PromptLayer::Layer3Fixed => {
                if !self.text.contains(SLOT_1) {
                    return Err(format!("prompt {} missing SENTENCE_1", self.id));
                }
            }
        }
        if self.lineage.len() != self.operator_kind.parent_count() {
            return Err(format!(
                "prompt {} of kind {} has {} parents",
                self.id,
                self.operator_kind,
                self.lineage.len()
            ));
        }
        Ok(())
    }
}

/// An emotion category substituted for `<em>`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EmotionLabel(pub String);

impl EmotionLabel {
    pub fn new(name: impl Into<String>) -> Self {
        EmotionLabel(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// anger, disgust, fear, joy, sadness.
    pub fn defaults() -> Vec<EmotionLabel> {
        ["anger", "disgust", "fear", "joy", "sadness"].into_iter().map(EmotionLabel::new).collect()
    }
}

impl fmt::Display for EmotionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// One score per objective, in a fixed objective order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveVector<T> {
    pub scores: Vec<T>,
    pub objective_ids: Vec<String>,
}

impl<T: Copy + PartialOrd> ObjectiveVector<T> {
    pub fn new(objective_ids: Vec<String>, scores: Vec<T>) -> Self {
        ObjectiveVector { scores, objective_ids }
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn get(&self, objective: usize) -> T {
        self.scores[objective]
    }

    /// Dominance that also insists on the same objective ordering.
    pub fn dominates(&self, other: &Self) -> Result<bool, crate::pareto::ParetoError> {
        if self.objective_ids != other.objective_ids {
            return Err(crate::pareto::ParetoError::ObjectiveMismatch);
        }
        crate::pareto::dominates(&self.scores, &other.scores)
    }
}

impl<T> AsRef<[T]> for ObjectiveVector<T> {
    fn as_ref(&self) -> &[T] {
        &self.scores
    }
}

impl ObjectiveVector<Score> {
    pub fn mean(&self) -> Score {
        if self.scores.is_empty() {
            return 0.0;
        }
        self.scores.iter().sum::<Score>() / self.scores.len() as Score
    }

    pub fn min(&self) -> Score {
        self.scores.iter().copied().fold(Score::INFINITY, Score::min)
    }

    /// Every score finite and within [0, 1].
    pub fn is_valid(&self) -> bool {
        !self.scores.is_empty()
            && self.scores.len() == self.objective_ids.len()
            && self.scores.iter().all(|s| s.is_finite() && (0.0..=1.0).contains(s))
    }
}

/// A generated text and its echo-filter verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextSample {
    pub prompt_id: PromptId,
    pub emotion: EmotionLabel,
    pub index: usize,
    pub text: String,
    pub echo_bleu: Score,
    pub filtered: bool,
    /// Probability of the intended label per objective; empty when filtered.
    #[serde(default)]
    pub scores: Vec<Score>,
}

/// Fitness of one emotion before averaging over emotions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmotionBreakdown {
    pub emotion: EmotionLabel,
    pub surviving: usize,
    pub scores: Vec<Score>,
}

/// A Layer-1 prompt with its fitness and the texts that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluatedPrompt {
    pub prompt: Prompt,
    pub fitness: ObjectiveVector<Score>,
    #[serde(default)]
    pub per_emotion: Vec<EmotionBreakdown>,
    pub samples: Vec<TextSample>,
    pub pareto_rank: Option<usize>,
    #[serde(with = "crowding_serde")]
    pub crowding: Option<Score>,
}

impl EvaluatedPrompt {
    pub fn id(&self) -> PromptId {
        self.prompt.id
    }
}

/// Infinite crowding is written as the string `"inf"`; JSON has no infinity.
pub(crate) mod crowding_serde {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Finite(f64),
        Tag(String),
    }

    pub fn serialize<S: Serializer>(value: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match value {
            None => s.serialize_none(),
            Some(v) if v.is_infinite() => s.serialize_some("inf"),
            Some(v) => s.serialize_some(v),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        match Option::<Repr>::deserialize(d)? {
            None => Ok(None),
            Some(Repr::Finite(v)) => Ok(Some(v)),
            Some(Repr::Tag(t)) if t == "inf" => Ok(Some(f64::INFINITY)),
            Some(Repr::Tag(t)) => Err(serde::de::Error::custom(format!("bad crowding value {t}"))),
        }
    }
}
