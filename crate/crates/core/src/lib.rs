//! Multi-objective prompt optimization.
//!
//! A three-layer genetic loop evolves task prompts (layer 1) with operation
//! prompts (layer 2) that are themselves rewritten by fixed prompts (layer 3).
//! Layer-1 prompts are ranked with NSGA-II against several objective scorers,
//! so a run ends with a Pareto front of prompts rather than a single winner.
//!
//! The numeric kernels ([`pareto`], [`fitness::bleu`]) are generic over the
//! scalar type; the engine itself works in `f64` through the aliases below.

pub mod backends;
pub mod catalog;
pub mod config;
pub mod engine;
pub mod fitness;
pub mod genetic;
pub mod pareto;
pub mod scalar;
pub mod text;
pub mod types;

pub use config::{validate_config, Ablation, RunConfig};
pub use scalar::Scalar;
pub use types::{
    EmotionLabel, EvaluatedPrompt, ObjectiveVector, OperatorKind, Prompt, PromptId, PromptLayer,
    TextSample,
};

/// Scalar used for fitness values throughout the engine.
pub type Score = f64;

/// Objective vector with engine-precision scores.
pub type Fitness = ObjectiveVector<Score>;

/// Crowding distances computed at engine precision.
pub type Crowding = Score;
