//! Blocking JSON-over-HTTP client for the generate/score/suggest protocol.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Condvar, Mutex};
use std::thread;
use std::time::Duration;

use log::{debug, warn};
use serde::de::DeserializeOwned;
use serde::Serialize;

use super::{
    check_suggest_request, BackendError, GenerateRequest, GenerateResponse, Generator,
    ScoreRequest, ScoreResponse, Scorer, SuggestRequest, SuggestResponse, Suggester,
};
use crate::config::HttpSettings;

/// Counting gate bounding in-flight requests per endpoint.
struct Gate {
    free: Mutex<usize>,
    released: Condvar,
}

struct Permit<'a>(&'a Gate);

impl Gate {
    fn new(slots: usize) -> Self {
        Gate { free: Mutex::new(slots.max(1)), released: Condvar::new() }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut free = self.free.lock().expect("gate lock poisoned");
        while *free == 0 {
            free = self.released.wait(free).expect("gate lock poisoned");
        }
        *free -= 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().expect("gate lock poisoned") += 1;
        self.0.released.notify_one();
    }
}

/// One endpoint serving any of the three capabilities.
///
/// Timeouts, connection failures, 429 and 5xx are retried with exponential
/// backoff (honouring `Retry-After`); every other 4xx is permanent.
pub struct HttpBackend {
    endpoint: String,
    agent: ureq::Agent,
    settings: HttpSettings,
    gate: Gate,
    next_request: AtomicU64,
}

impl HttpBackend {
    pub fn new(endpoint: impl Into<String>, settings: HttpSettings) -> Self {
        let agent = ureq::AgentBuilder::new()
            .timeout(Duration::from_millis(settings.timeout_ms))
            .build();
        HttpBackend {
            endpoint: endpoint.into().trim_end_matches('/').to_string(),
            agent,
            gate: Gate::new(settings.max_in_flight),
            settings,
            next_request: AtomicU64::new(0),
        }
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    fn backoff(&self, attempt: u32, retry_after: Option<u64>) -> Duration {
        let exp = self.settings.base_delay_ms.saturating_mul(1u64 << attempt.min(20));
        let ms = retry_after.map(|s| s.saturating_mul(1000)).unwrap_or(exp);
        Duration::from_millis(ms.min(self.settings.max_delay_ms))
    }

    fn post<Req: Serialize, Resp: DeserializeOwned>(
        &self,
        path: &str,
        body: &Req,
    ) -> Result<(String, Resp), BackendError> {
        let request_id = format!("{:x}-{}", std::process::id(), self.next_request.fetch_add(1, Ordering::Relaxed));
        let url = format!("{}{}", self.endpoint, path);
        let payload = serde_json::to_value(body)
            .map_err(|e| BackendError::InvalidRequest(e.to_string()))?;
        let attempts = self.settings.max_attempts.max(1);
        let mut last = String::new();
        for attempt in 0..attempts {
            let outcome = {
                let _permit = self.gate.acquire();
                self.agent.post(&url).set("x-request-id", &request_id).send_json(payload.clone())
            };
            let mut retry_after = None;
            match outcome {
                Ok(response) => {
                    let parsed = response.into_json::<Resp>().map_err(|e| BackendError::Protocol {
                        request_id: request_id.clone(),
                        message: format!("malformed response body: {e}"),
                    })?;
                    return Ok((request_id, parsed));
                }
                Err(ureq::Error::Status(code, response)) if code == 429 || code >= 500 => {
                    retry_after = response.header("retry-after").and_then(|v| v.trim().parse().ok());
                    last = format!("status {code}");
                }
                Err(ureq::Error::Status(code, response)) => {
                    return Err(BackendError::Permanent {
                        request_id,
                        status: Some(code),
                        message: response.into_string().unwrap_or_default(),
                    });
                }
                Err(ureq::Error::Transport(t)) => last = t.to_string(),
            }
            if attempt + 1 < attempts {
                let delay = self.backoff(attempt, retry_after);
                debug!("{url}: {last}; retrying request {request_id} in {delay:?}");
                thread::sleep(delay);
            }
        }
        warn!("{url}: request {request_id} failed after {attempts} attempts: {last}");
        Err(BackendError::Exhausted { request_id, attempts, last })
    }
}

impl Generator for HttpBackend {
    /// Short responses are topped up by re-requesting the remainder, within
    /// the attempt budget.
    fn generate(&self, request: &GenerateRequest) -> Result<GenerateResponse, BackendError> {
        let mut texts: Vec<String> = Vec::with_capacity(request.n);
        let mut last_id = String::new();
        let mut round = 0u64;
        while texts.len() < request.n {
            if round >= u64::from(self.settings.max_attempts.max(1)) {
                return Err(BackendError::Protocol {
                    request_id: last_id,
                    message: format!("server returned {} of {} texts", texts.len(), request.n),
                });
            }
            let remainder = GenerateRequest {
                prompt: request.prompt.clone(),
                n: request.n - texts.len(),
                seed: request.seed.wrapping_add(round),
            };
            let (id, response): (String, GenerateResponse) = self.post("/v1/generate", &remainder)?;
            let take = remainder.n.min(response.texts.len());
            texts.extend(response.texts.into_iter().take(take));
            last_id = id;
            round += 1;
        }
        Ok(GenerateResponse { texts })
    }
}

impl Scorer for HttpBackend {
    fn score(&self, request: &ScoreRequest) -> Result<ScoreResponse, BackendError> {
        if request.texts.is_empty() {
            return Ok(ScoreResponse { scores: Vec::new() });
        }
        let (request_id, response): (String, ScoreResponse) = self.post("/v1/score", request)?;
        if response.scores.len() != request.texts.len() {
            return Err(BackendError::Protocol {
                request_id,
                message: format!("{} scores for {} texts", response.scores.len(), request.texts.len()),
            });
        }
        if let Some(bad) = response.scores.iter().find(|s| !s.is_finite() || !(0.0..=1.0).contains(*s)) {
            return Err(BackendError::Protocol { request_id, message: format!("score {bad} outside [0, 1]") });
        }
        Ok(response)
    }
}

impl Suggester for HttpBackend {
    fn suggest(&self, request: &SuggestRequest) -> Result<SuggestResponse, BackendError> {
        check_suggest_request(request)?;
        let (request_id, response): (String, SuggestResponse) = self.post("/v1/suggest", request)?;
        if response.token.is_empty() || response.token.chars().any(char::is_whitespace) {
            return Err(BackendError::Protocol {
                request_id,
                message: format!("suggested token {:?} is empty or contains whitespace", response.token),
            });
        }
        Ok(response)
    }
}
