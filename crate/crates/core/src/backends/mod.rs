//! Text generation, token suggestion and objective scoring capabilities.
//!
//! Each capability has an HTTP implementation speaking a small JSON protocol
//! and a deterministic in-process mock. Wire format:
//!
//! | path           | request                                   | response               |
//! |----------------|-------------------------------------------|------------------------|
//! | `/v1/generate` | `{"prompt": str, "n": int, "seed": int}`  | `{"texts": [str]}`     |
//! | `/v1/score`    | `{"texts": [str], "label": str}`          | `{"scores": [float]}`  |
//! | `/v1/suggest`  | `{"text": str}` with exactly one `<mask>` | `{"token": str}`       |
//!
//! Decoding settings (temperature and the like) belong to the serving side;
//! the protocol only carries `n` and `seed`.

pub mod http;
pub mod lexicon;
pub mod mock;
pub mod suggest;

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{BackendSpec, RunConfig, ScorerSpec};
use crate::types::EmotionLabel;

pub use http::HttpBackend;
pub use lexicon::{Lexicon, LexiconScorer, LexiconStyle};
pub use mock::MockGenerator;
pub use suggest::MockSuggester;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerateRequest {
    pub prompt: String,
    pub n: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerateResponse {
    pub texts: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRequest {
    pub texts: Vec<String>,
    pub label: EmotionLabel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreResponse {
    pub scores: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuggestRequest {
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuggestResponse {
    pub token: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BackendError {
    #[error("request {request_id}: permanent failure (status {status:?}): {message}")]
    Permanent { request_id: String, status: Option<u16>, message: String },
    #[error("request {request_id}: gave up after {attempts} attempts: {last}")]
    Exhausted { request_id: String, attempts: u32, last: String },
    #[error("request {request_id}: protocol violation: {message}")]
    Protocol { request_id: String, message: String },
    #[error("invalid request: {0}")]
    InvalidRequest(String),
}

pub trait Generator: Send + Sync {
    fn generate(&self, request: &GenerateRequest) -> Result<GenerateResponse, BackendError>;
}

pub trait Scorer: Send + Sync {
    fn score(&self, request: &ScoreRequest) -> Result<ScoreResponse, BackendError>;
}

pub trait Suggester: Send + Sync {
    fn suggest(&self, request: &SuggestRequest) -> Result<SuggestResponse, BackendError>;
}

/// Checks that a suggestion request carries exactly one mask marker.
pub fn check_suggest_request(request: &SuggestRequest) -> Result<(), BackendError> {
    let masks = request.text.matches(crate::text::MASK).count();
    if masks != 1 {
        return Err(BackendError::InvalidRequest(format!(
            "suggest request must contain exactly one {}, found {masks}",
            crate::text::MASK
        )));
    }
    Ok(())
}

/// The capabilities one run needs, in objective order.
#[derive(Clone)]
pub struct Backends {
    pub generator: Arc<dyn Generator>,
    pub suggester: Arc<dyn Suggester>,
    pub scorers: Vec<Arc<dyn Scorer>>,
    /// Every capability is a pure function of its request.
    pub deterministic: bool,
}

impl Backends {
    /// Builds the backends a configuration names.
    pub fn from_config(config: &RunConfig) -> Self {
        let http = |endpoint: &str| Arc::new(HttpBackend::new(endpoint, config.http.clone()));
        let generator: Arc<dyn Generator> = match &config.generator {
            BackendSpec::Mock => Arc::new(MockGenerator::new(config.rng_seed)),
            BackendSpec::Http { endpoint } => http(endpoint),
        };
        let suggester: Arc<dyn Suggester> = match &config.suggester {
            BackendSpec::Mock => Arc::new(MockSuggester::new(config.rng_seed)),
            BackendSpec::Http { endpoint } => http(endpoint),
        };
        let scorers = config
            .objectives
            .iter()
            .map(|o| -> Arc<dyn Scorer> {
                match &o.scorer {
                    ScorerSpec::Lexicon { style } => {
                        Arc::new(LexiconScorer::new(Lexicon::default(), *style))
                    }
                    ScorerSpec::Http { endpoint } => http(endpoint),
                }
            })
            .collect();
        Backends { generator, suggester, scorers, deterministic: config.all_mock() }
    }
}
