use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use super::{Backend, BackendConfig, Completion, GatewayError};

/// Where the request and response fields live in a provider's JSON.
///
/// Paths are dot-separated; numeric segments index arrays. The defaults fit
/// the common chat-completions shape.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct WireMapping {
    pub model_path: String,
    pub messages_path: String,
    pub temperature_path: String,
    pub response_text_path: String,
}

impl Default for WireMapping {
    fn default() -> Self {
        Self {
            model_path: "model".into(),
            messages_path: "messages".into(),
            temperature_path: "temperature".into(),
            response_text_path: "choices.0.message.content".into(),
        }
    }
}

fn set_path(root: &mut Value, path: &str, value: Value) {
    let mut cursor = root;
    let segments: Vec<&str> = path.split('.').collect();
    for (i, segment) in segments.iter().enumerate() {
        if !cursor.is_object() {
            *cursor = Value::Object(Map::new());
        }
        let object = cursor.as_object_mut().expect("just made an object");
        if i + 1 == segments.len() {
            object.insert(segment.to_string(), value);
            return;
        }
        cursor = object
            .entry(segment.to_string())
            .or_insert_with(|| Value::Object(Map::new()));
    }
}

fn get_path<'a>(root: &'a Value, path: &str) -> Option<&'a Value> {
    path.split('.').try_fold(root, |value, segment| match value {
        Value::Array(items) => segment.parse::<usize>().ok().and_then(|i| items.get(i)),
        Value::Object(map) => map.get(segment),
        _ => None,
    })
}

/// Chat-completion style provider over HTTP.
pub struct HttpChatBackend {
    config: BackendConfig,
    agent: ureq::Agent,
}

impl HttpChatBackend {
    pub fn new(config: BackendConfig) -> Result<Self, GatewayError> {
        config.validate()?;
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .build()
            .new_agent();
        Ok(Self { config, agent })
    }

    /// The JSON body sent for `prompt`.
    pub fn request_body(&self, prompt: &str) -> Value {
        let wire = &self.config.wire;
        let mut body = json!({});
        set_path(
            &mut body,
            &wire.model_path,
            Value::String(self.config.model_name.clone().unwrap_or_default()),
        );
        set_path(
            &mut body,
            &wire.messages_path,
            json!([{ "role": "user", "content": prompt }]),
        );
        set_path(
            &mut body,
            &wire.temperature_path,
            json!(self.config.temperature.unwrap_or(0.0)),
        );
        body
    }

    fn secret(&self) -> Result<Option<String>, GatewayError> {
        let Some(var) = &self.config.auth_env_var else {
            return Ok(None);
        };
        match std::env::var(var) {
            Ok(value) if !value.trim().is_empty() => Ok(Some(value)),
            _ => Err(GatewayError::Config {
                backend: self.config.id.clone(),
                message: format!("environment variable {var} is not set"),
            }),
        }
    }
}

enum Attempt {
    Transport(String),
    Done(Result<String, GatewayError>),
}

impl HttpChatBackend {
    fn attempt(&self, body: &Value, secret: Option<&str>, timeout: Duration) -> Attempt {
        let endpoint = self.config.endpoint.as_deref().expect("validated");
        let mut request = self
            .agent
            .post(endpoint)
            .config()
            .timeout_global(Some(timeout))
            .build()
            .header("Content-Type", "application/json");
        if let Some(secret) = secret {
            request = request.header("Authorization", &format!("Bearer {secret}"));
        }
        let mut response = match request.send(body.to_string()) {
            Ok(r) => r,
            Err(e) => return Attempt::Transport(e.to_string()),
        };
        let status = response.status().as_u16();
        let text = match response.body_mut().read_to_string() {
            Ok(t) => t,
            Err(e) => return Attempt::Transport(e.to_string()),
        };
        if !(200..300).contains(&status) {
            let body_excerpt: String = text.chars().take(300).collect();
            return Attempt::Done(Err(GatewayError::Provider {
                backend: self.config.id.clone(),
                status,
                body_excerpt,
            }));
        }
        let bad = |message: String| GatewayError::BadResponse {
            backend: self.config.id.clone(),
            message,
        };
        let parsed: Value = match serde_json::from_str(&text) {
            Ok(v) => v,
            Err(e) => return Attempt::Done(Err(bad(format!("invalid JSON: {e}")))),
        };
        Attempt::Done(
            get_path(&parsed, &self.config.wire.response_text_path)
                .and_then(Value::as_str)
                .map(str::to_string)
                .ok_or_else(|| {
                    bad(format!(
                        "no string at `{}`",
                        self.config.wire.response_text_path
                    ))
                }),
        )
    }
}

impl Backend for HttpChatBackend {
    fn id(&self) -> &str {
        &self.config.id
    }

    fn complete(&self, prompt: &str) -> Result<Completion, GatewayError> {
        if prompt.trim().is_empty() {
            return Err(GatewayError::EmptyPrompt);
        }
        let secret = self.secret()?;
        let body = self.request_body(prompt);
        let started = Instant::now();
        let budget = self.config.request_timeout * (self.config.max_retries + 1);
        let mut last_error = String::new();
        let mut attempt = 0;
        while attempt <= self.config.max_retries {
            let remaining = budget.saturating_sub(started.elapsed());
            if remaining.is_zero() {
                break;
            }
            attempt += 1;
            let timeout = remaining.min(self.config.request_timeout);
            match self.attempt(&body, secret.as_deref(), timeout) {
                Attempt::Done(result) => {
                    return result.map(|text| Completion {
                        text,
                        backend_id: self.config.id.clone(),
                        latency: started.elapsed(),
                        attempt,
                    })
                }
                Attempt::Transport(message) => {
                    tracing::warn!(backend = %self.config.id, attempt, %message, "transport failure");
                    last_error = message;
                }
            }
        }
        Err(GatewayError::Unreachable {
            backend: self.config.id.clone(),
            attempts: attempt,
            message: last_error,
        })
    }
}
