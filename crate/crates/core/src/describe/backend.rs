//! Text generation backends.

use std::time::Duration;

use serde_json::json;

use super::prompt::PromptSpec;
use crate::tkg::{ExampleQuadruple, RelationKind};

#[derive(Debug, thiserror::Error)]
pub enum BackendError {
    #[error("backend configuration: {0}")]
    Config(String),
    #[error("request failed: {0}")]
    Request(String),
    #[error("malformed response: {0}")]
    Response(String),
}

/// One generation request: the rendered prompt and the spec it came from.
#[derive(Debug, Clone, Copy)]
pub struct Request<'a> {
    pub prompt: &'a str,
    pub spec: &'a PromptSpec,
}

pub trait TextBackend: Send + Sync {
    fn name(&self) -> &str;

    fn model(&self) -> Option<&str> {
        None
    }

    fn generate(&self, request: &Request<'_>) -> Result<String, BackendError>;
}

/// Offline backend writing one fixed sentence per fact.
#[derive(Debug, Clone, Copy, Default)]
pub struct TemplateBackend;

/// `memberOf` -> `member of`
pub fn relation_phrase(base: &str) -> String {
    let mut out = String::with_capacity(base.len() + 4);
    for (i, c) in base.chars().enumerate() {
        if c.is_uppercase() && i > 0 {
            out.push(' ');
        }
        if c == '_' {
            out.push(' ');
        } else {
            out.extend(c.to_lowercase());
        }
    }
    out
}

impl TemplateBackend {
    pub fn sentence(spec: &PromptSpec, q: &ExampleQuadruple) -> String {
        let date = spec.style.render(q.timestamp);
        let phrase = relation_phrase(q.relation.base());
        let (s, o) = (&q.subject_label, &q.object_label);
        match q.relation.kind() {
            RelationKind::Start => format!("{s} started being a {phrase} {o} on {date}."),
            RelationKind::End => format!("{s}'s time as a {phrase} {o} came to an end on {date}."),
            RelationKind::Plain => format!("On {date}, {s} ({phrase}) {o}."),
        }
    }
}

impl TextBackend for TemplateBackend {
    fn name(&self) -> &str {
        "template"
    }

    fn generate(&self, request: &Request<'_>) -> Result<String, BackendError> {
        let spec = request.spec;
        let mut parts = Vec::with_capacity(spec.quadruples.len() + 1);
        if let Some(date) = spec.headline {
            parts.push(format!("{}: Breaking News.", spec.style.render(date)));
        }
        parts.extend(spec.quadruples.iter().map(|q| Self::sentence(spec, q)));
        Ok(parts.join(" "))
    }
}

/// Settings of an OpenAI-compatible chat completions endpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct HttpConfig {
    /// Full URL of the chat completions endpoint.
    pub endpoint: String,
    pub token: Option<String>,
    pub model: String,
    pub timeout: Duration,
    pub temperature: Option<f64>,
}

impl HttpConfig {
    pub const ENDPOINT_VAR: &'static str = "TKGF_API_ENDPOINT";
    pub const TOKEN_VAR: &'static str = "TKGF_API_TOKEN";
    pub const MODEL_VAR: &'static str = "TKGF_API_MODEL";

    /// Reads endpoint, token and model from the environment. Endpoint and
    /// model are required.
    pub fn from_env() -> Result<Self, BackendError> {
        Self::from_lookup(|k| std::env::var(k).ok())
    }

    pub fn from_lookup(get: impl Fn(&str) -> Option<String>) -> Result<Self, BackendError> {
        let need = |k: &str| {
            get(k)
                .filter(|v| !v.trim().is_empty())
                .ok_or_else(|| BackendError::Config(format!("{k} is not set")))
        };
        Ok(Self {
            endpoint: need(Self::ENDPOINT_VAR)?,
            model: need(Self::MODEL_VAR)?,
            token: get(Self::TOKEN_VAR).filter(|v| !v.is_empty()),
            timeout: Duration::from_secs(60),
            temperature: None,
        })
    }
}

pub struct HttpBackend {
    config: HttpConfig,
    agent: ureq::Agent,
}

impl HttpBackend {
    pub fn new(config: HttpConfig) -> Result<Self, BackendError> {
        if !(config.endpoint.starts_with("http://") || config.endpoint.starts_with("https://")) {
            return Err(BackendError::Config(format!("endpoint {:?} is not an http(s) URL", config.endpoint)));
        }
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .build()
            .into();
        Ok(Self { config, agent })
    }
}

impl TextBackend for HttpBackend {
    fn name(&self) -> &str {
        "http"
    }

    fn model(&self) -> Option<&str> {
        Some(&self.config.model)
    }

    fn generate(&self, request: &Request<'_>) -> Result<String, BackendError> {
        let mut body = json!({
            "model": self.config.model,
            "messages": [{"role": "user", "content": request.prompt}],
        });
        if let Some(t) = self.config.temperature {
            body["temperature"] = json!(t);
        }
        let mut req = self.agent.post(&self.config.endpoint);
        if let Some(token) = &self.config.token {
            req = req.header("Authorization", &format!("Bearer {token}"));
        }
        let response = req.send_json(&body).map_err(|e| BackendError::Request(e.to_string()))?;
        let value: serde_json::Value = response
            .into_body()
            .read_json()
            .map_err(|e| BackendError::Response(e.to_string()))?;
        value["choices"][0]["message"]["content"]
            .as_str()
            .map(|s| s.trim().to_owned())
            .filter(|s| !s.is_empty())
            .ok_or_else(|| BackendError::Response("no choices[0].message.content".into()))
    }
}
