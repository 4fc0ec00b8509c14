//! Language-model backends.
//!
//! Every pipeline stage talks to a [`Backend`]: either a chat-completion
//! HTTP provider ([`HttpChatBackend`]) or the deterministic rule engine in
//! [`heuristic`]. Stages ask for structured output (pipe tables or a line
//! protocol) and go through [`request_with_recovery`], which re-asks with a
//! format reminder when the reply does not parse.

pub mod heuristic;
mod http;
mod table;

use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::prompting::PromptSpec;

pub use heuristic::{HeuristicBackend, Lexicon};
pub use http::{HttpChatBackend, WireMapping};
pub use table::{parse_table, ParseError, ParsedTable};

/// Number of extra completions issued when a reply cannot be parsed.
pub const FORMAT_RETRIES: usize = 2;

/// Sentence appended to the repeated output format on a recovery attempt.
pub const FORMAT_REMINDER: &str = "Respond with the table only.";

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("prompt is empty")]
    EmptyPrompt,
    #[error("requirement text is empty")]
    EmptyRequirement,
    #[error("backend `{backend}` misconfigured: {message}")]
    Config { backend: String, message: String },
    #[error("backend `{backend}` unreachable after {attempts} attempt(s): {message}")]
    Unreachable {
        backend: String,
        attempts: u32,
        message: String,
    },
    #[error("backend `{backend}` returned HTTP {status}: {body_excerpt}")]
    Provider {
        backend: String,
        status: u16,
        body_excerpt: String,
    },
    #[error("backend `{backend}` sent an unusable response: {message}")]
    BadResponse { backend: String, message: String },
    #[error("heuristic backend cannot handle this prompt: {0}")]
    UnsupportedTask(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    HttpChat,
    Heuristic,
}

fn default_timeout() -> Duration {
    Duration::from_secs(60)
}

fn default_retries() -> u32 {
    2
}

mod secs {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        let secs = f64::deserialize(d)?;
        Duration::try_from_secs_f64(secs).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendConfig {
    #[serde(default)]
    pub id: String,
    pub kind: BackendKind,
    #[serde(default)]
    pub endpoint: Option<String>,
    #[serde(default)]
    pub model_name: Option<String>,
    #[serde(default)]
    pub auth_env_var: Option<String>,
    #[serde(default)]
    pub temperature: Option<f64>,
    #[serde(default = "default_timeout", with = "secs", rename = "request_timeout_secs")]
    pub request_timeout: Duration,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    #[serde(default)]
    pub wire: WireMapping,
}

impl BackendConfig {
    pub fn heuristic(id: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            kind: BackendKind::Heuristic,
            endpoint: None,
            model_name: None,
            auth_env_var: None,
            temperature: None,
            request_timeout: default_timeout(),
            max_retries: default_retries(),
            wire: WireMapping::default(),
        }
    }

    pub fn http_chat(
        id: impl Into<String>,
        endpoint: impl Into<String>,
        model_name: impl Into<String>,
    ) -> Self {
        Self {
            kind: BackendKind::HttpChat,
            endpoint: Some(endpoint.into()),
            model_name: Some(model_name.into()),
            ..Self::heuristic(id)
        }
    }

    pub fn validate(&self) -> Result<(), GatewayError> {
        let fail = |message: &str| {
            Err(GatewayError::Config {
                backend: self.id.clone(),
                message: message.to_string(),
            })
        };
        if self.temperature.is_some_and(|t| !(t >= 0.0)) {
            return fail("temperature must be >= 0");
        }
        match self.kind {
            BackendKind::HttpChat => {
                if self.endpoint.as_deref().is_none_or(|e| e.trim().is_empty()) {
                    return fail("http_chat needs an endpoint");
                }
                if self.model_name.as_deref().is_none_or(|m| m.trim().is_empty()) {
                    return fail("http_chat needs a model_name");
                }
            }
            BackendKind::Heuristic => {
                if self.endpoint.is_some() || self.model_name.is_some() {
                    return fail("heuristic backends take no endpoint or model_name");
                }
            }
        }
        Ok(())
    }
}

/// One backend reply.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Completion {
    pub text: String,
    pub backend_id: String,
    #[serde(with = "secs")]
    pub latency: Duration,
    pub attempt: u32,
}

/// A source of completions.
pub trait Backend: Send + Sync {
    fn id(&self) -> &str;

    fn complete(&self, prompt: &str) -> Result<Completion, GatewayError>;
}

/// Builds the backend described by `config`. Heuristic backends use the
/// supplied lexicon and patterns.
pub fn connect(
    config: &BackendConfig,
    heuristic_rules: &HeuristicBackend,
) -> Result<Arc<dyn Backend>, GatewayError> {
    config.validate()?;
    Ok(match config.kind {
        BackendKind::HttpChat => Arc::new(HttpChatBackend::new(config.clone())?),
        BackendKind::Heuristic => Arc::new(heuristic_rules.clone().with_id(&config.id)),
    })
}

/// One-shot completion against a config, with default heuristic rules.
pub fn complete(config: &BackendConfig, prompt: &str) -> Result<Completion, GatewayError> {
    if prompt.trim().is_empty() {
        return Err(GatewayError::EmptyPrompt);
    }
    connect(config, &HeuristicBackend::default())?.complete(prompt)
}

/// Failure of a structured request.
#[derive(Debug, Error)]
pub enum RecoveryError<E: std::error::Error + 'static> {
    #[error(transparent)]
    Backend(#[from] GatewayError),
    #[error("output still unparseable after {attempts} completion(s): {error}")]
    Unparseable {
        attempts: usize,
        raw: String,
        #[source]
        error: E,
    },
}

/// Appends the output format, repeated verbatim, and the reminder sentence.
pub fn with_format_reminder(prompt: &str, output_format: Option<&str>) -> String {
    match output_format {
        Some(format) => format!("{prompt}\n\n{format}\n{FORMAT_REMINDER}"),
        None => format!("{prompt}\n\n{FORMAT_REMINDER}"),
    }
}

/// Completes `spec` and parses the reply, re-asking up to `retries` times
/// with a format reminder while parsing fails.
pub fn request_with_recovery<T, E, F>(
    backend: &dyn Backend,
    spec: &PromptSpec,
    retries: usize,
    mut parse: F,
) -> Result<(T, Completion), RecoveryError<E>>
where
    E: std::error::Error + 'static,
    F: FnMut(&str) -> Result<T, E>,
{
    let prompt = spec.render();
    let mut attempts = 0;
    loop {
        let text = if attempts == 0 {
            prompt.clone()
        } else {
            with_format_reminder(&prompt, spec.output_format())
        };
        let completion = backend.complete(&text)?;
        attempts += 1;
        match parse(&completion.text) {
            Ok(value) => return Ok((value, completion)),
            Err(error) if attempts > retries => {
                return Err(RecoveryError::Unparseable {
                    attempts,
                    raw: completion.text,
                    error,
                })
            }
            Err(error) => {
                tracing::warn!(backend = backend.id(), %error, "unparseable reply, re-asking");
            }
        }
    }
}
