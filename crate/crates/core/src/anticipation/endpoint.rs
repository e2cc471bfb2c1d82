use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::prompt::{RenderedPrompt, EXAMPLES_HEADER, QUERY_HEADER, REASONING_HEADER};
use super::AnticipationError;

/// Environment variable holding the bearer token for live endpoints.
pub const API_KEY_ENV: &str = "AHT_LLM_API_KEY";
/// Environment variable overriding the model id sent to live endpoints.
pub const MODEL_ENV: &str = "AHT_LLM_MODEL";
pub const DEFAULT_MODEL: &str = "gpt-4o-mini";
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);
pub const DEFAULT_RETRIES: u32 = 2;

/// One scripted completion, keyed on the day flags and the completed prefix.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MockRecord {
    #[serde(default = "good_quality")]
    pub quality: String,
    pub flags: [bool; 3],
    #[serde(default)]
    pub prefix: Vec<String>,
    pub completion: String,
}

fn good_quality() -> String {
    "good".into()
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MockTable {
    pub records: Vec<MockRecord>,
}

impl MockTable {
    pub fn from_json(text: &str) -> Result<Self, AnticipationError> {
        serde_json::from_str(text).map_err(|e| AnticipationError::Endpoint(format!("mock table: {e}")))
    }

    /// `builtin` names the table shipped with the crate.
    pub fn load(path: &str) -> Result<Self, AnticipationError> {
        if path == "builtin" {
            return Self::from_json(crate::data::MOCK_LLM);
        }
        let text = std::fs::read_to_string(Path::new(path))
            .map_err(|e| AnticipationError::Endpoint(format!("{path}: {e}")))?;
        Self::from_json(&text)
    }

    /// Exact prefix match first, then the record with an empty prefix.
    pub fn lookup(&self, quality: &str, flags: [bool; 3], prefix: &[String]) -> Option<&str> {
        let candidates = || self.records.iter().filter(|r| r.quality == quality && r.flags == flags);
        candidates()
            .find(|r| r.prefix == prefix)
            .or_else(|| candidates().find(|r| r.prefix.is_empty()))
            .map(|r| r.completion.as_str())
    }
}

/// Where completions come from.
#[derive(Clone, Debug)]
pub enum Endpoint {
    /// Always answers from the `good` records. Action prompts get the
    /// scripted actor's answer.
    Mock(MockTable),
    /// Picks the record quality from which prompt sections are present;
    /// the scripted actor makes occasional infeasible proposals.
    NoisyMock(MockTable),
    Url {
        url: String,
        model: String,
        timeout: Duration,
        retries: u32,
    },
}

/// Request body of the completion protocol.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub model: String,
    pub system: String,
    pub user: String,
    pub temperature: f64,
}

/// Response body of the completion protocol.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CompletionResponse {
    pub text: String,
}

impl Endpoint {
    /// Parses `mock:FILE`, `noisy-mock:FILE` or `url:ENDPOINT`.
    pub fn parse(spec: &str) -> Result<Self, AnticipationError> {
        if let Some(f) = spec.strip_prefix("mock:") {
            Ok(Endpoint::Mock(MockTable::load(f)?))
        } else if let Some(f) = spec.strip_prefix("noisy-mock:") {
            Ok(Endpoint::NoisyMock(MockTable::load(f)?))
        } else if let Some(u) = spec.strip_prefix("url:") {
            Ok(Endpoint::Url {
                url: u.to_string(),
                model: std::env::var(MODEL_ENV).unwrap_or_else(|_| DEFAULT_MODEL.into()),
                timeout: DEFAULT_TIMEOUT,
                retries: DEFAULT_RETRIES,
            })
        } else {
            Err(AnticipationError::Endpoint(format!(
                "expected mock:FILE, noisy-mock:FILE or url:ENDPOINT, got `{spec}`"
            )))
        }
    }

    pub fn shipped_mock() -> Self {
        Endpoint::Mock(MockTable::from_json(crate::data::MOCK_LLM).expect("shipped mock table parses"))
    }

    pub fn shipped_noisy_mock() -> Self {
        Endpoint::NoisyMock(MockTable::from_json(crate::data::MOCK_LLM).expect("shipped mock table parses"))
    }

    pub fn is_mock(&self) -> bool {
        !matches!(self, Endpoint::Url { .. })
    }

    /// Sends the prompt and returns the raw completion text.
    pub fn complete(&self, prompt: &RenderedPrompt) -> Result<String, AnticipationError> {
        match self {
            Endpoint::Mock(t) => mock_complete(t, prompt, false),
            Endpoint::NoisyMock(t) => mock_complete(t, prompt, true),
            Endpoint::Url {
                url,
                model,
                timeout,
                retries,
            } => {
                let req = CompletionRequest {
                    model: model.clone(),
                    system: prompt.system.clone(),
                    user: prompt.user.clone(),
                    temperature: 0.0,
                };
                let mut last = None;
                for attempt in 0..=*retries {
                    match post(url, &req, *timeout) {
                        Ok(text) => return Ok(text),
                        Err(e) => {
                            log::warn!("completion attempt {} failed: {e}", attempt + 1);
                            last = Some(e);
                        }
                    }
                }
                Err(match last.expect("at least one attempt") {
                    Transport::Timeout => AnticipationError::Timeout { attempts: retries + 1 },
                    Transport::Unreachable(msg) => AnticipationError::Unreachable {
                        attempts: retries + 1,
                        msg,
                    },
                    Transport::Protocol(msg) => AnticipationError::Protocol(msg),
                })
            }
        }
    }
}

/// Which mock quality a prompt earns, from the sections it contains.
pub fn prompt_quality(prompt: &RenderedPrompt) -> &'static str {
    let examples = prompt.user.contains(EXAMPLES_HEADER);
    let reasoning = prompt.user.contains(REASONING_HEADER);
    match (examples, reasoning) {
        (true, true) => "good",
        (true, false) => "few_shot_only",
        (false, true) => "cot_only",
        (false, false) => "no_prompting",
    }
}

/// Reads the day flags and completed tasks back out of the query section.
fn query_key(prompt: &RenderedPrompt) -> Result<([bool; 3], Vec<String>), AnticipationError> {
    let query = prompt
        .user
        .split(QUERY_HEADER)
        .nth(1)
        .ok_or_else(|| AnticipationError::Protocol("prompt has no query section".into()))?;
    let mut flags = None;
    let mut prefix = Vec::new();
    for line in query.lines() {
        if let Some(ctx) = line.strip_prefix("Context:") {
            let mut f = [false; 3];
            for (i, name) in ["weekday", "going_to_office", "guests_expected"].iter().enumerate() {
                f[i] = ctx.contains(&format!("{name}=true"));
            }
            flags = Some(f);
        } else if let Some(done) = line.strip_prefix("Completed tasks:") {
            let done = done.trim();
            if done != "(none)" && !done.is_empty() {
                prefix = done.split(',').map(|s| s.trim().to_string()).collect();
            }
        }
    }
    let flags = flags.ok_or_else(|| AnticipationError::Protocol("query has no context line".into()))?;
    Ok((flags, prefix))
}

fn mock_complete(table: &MockTable, prompt: &RenderedPrompt, noisy: bool) -> Result<String, AnticipationError> {
    if prompt.user.contains(crate::harness::RULES_HEADER) {
        return crate::harness::mock_actor_completion(prompt, noisy);
    }
    let (flags, prefix) = query_key(prompt)?;
    let quality = if noisy { prompt_quality(prompt) } else { "good" };
    table
        .lookup(quality, flags, &prefix)
        .map(str::to_string)
        .ok_or_else(|| AnticipationError::MockKeyMissing {
            quality: quality.to_string(),
            flags,
            prefix,
        })
}

#[derive(Debug, thiserror::Error)]
#[cfg_attr(not(feature = "live"), allow(dead_code))]
enum Transport {
    #[error("timed out")]
    Timeout,
    #[error("unreachable: {0}")]
    Unreachable(String),
    #[error("protocol: {0}")]
    Protocol(String),
}

#[cfg(feature = "live")]
fn post(url: &str, req: &CompletionRequest, timeout: Duration) -> Result<String, Transport> {
    let client = reqwest::blocking::Client::builder()
        .timeout(timeout)
        .build()
        .map_err(|e| Transport::Protocol(e.to_string()))?;
    let mut builder = client.post(url).json(req);
    if let Ok(key) = std::env::var(API_KEY_ENV) {
        builder = builder.bearer_auth(key);
    }
    let classify = |e: reqwest::Error| {
        if e.is_timeout() {
            Transport::Timeout
        } else if e.is_connect() || e.is_request() {
            Transport::Unreachable(e.to_string())
        } else {
            Transport::Protocol(e.to_string())
        }
    };
    let resp = builder.send().map_err(classify)?;
    if !resp.status().is_success() {
        return Err(Transport::Protocol(format!("HTTP {}", resp.status())));
    }
    let body: CompletionResponse = resp.json().map_err(|e| {
        if e.is_timeout() {
            Transport::Timeout
        } else {
            Transport::Protocol(e.to_string())
        }
    })?;
    Ok(body.text)
}

#[cfg(not(feature = "live"))]
fn post(_url: &str, _req: &CompletionRequest, _timeout: Duration) -> Result<String, Transport> {
    Err(Transport::Protocol("built without the `live` feature".into()))
}
