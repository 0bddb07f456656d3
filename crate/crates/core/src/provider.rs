//! Pluggable language-model backends.
//!
//! Every stage that can consult a model runs in one of three modes: `oracle` reads
//! gold annotations, `mock` applies deterministic rules, `remote` calls an HTTP
//! chat-completion endpoint. Remote replies must be JSON; malformed replies are
//! re-asked with a format reminder up to `max_retries` times.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProviderError {
    #[error("provider unavailable: {0}")]
    Unavailable(String),
    #[error("malformed provider output after {attempts} attempt(s): {last}")]
    MalformedOutput { attempts: usize, last: String },
    #[error("provider misconfigured: {0}")]
    Config(String),
}

/// A text-in, text-out model endpoint.
pub trait ChatProvider: Send + Sync {
    fn complete(&self, prompt: &str) -> Result<String, ProviderError>;

    /// Identifies the backend and its parameters in run manifests.
    fn fingerprint(&self) -> String;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ProviderMode {
    Oracle,
    #[default]
    Mock,
    Remote,
}

impl FromStr for ProviderMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "oracle" => Ok(Self::Oracle),
            "mock" => Ok(Self::Mock),
            "remote" => Ok(Self::Remote),
            other => Err(format!("unknown mode `{other}` (expected oracle|mock|remote)")),
        }
    }
}

impl fmt::Display for ProviderMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Oracle => "oracle",
            Self::Mock => "mock",
            Self::Remote => "remote",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProviderConfig {
    pub mode: ProviderMode,
    pub endpoint: Option<String>,
    pub model_name: Option<String>,
    #[serde(skip_serializing)]
    pub api_key: Option<String>,
    pub max_retries: u32,
    pub timeout_secs: u64,
    /// Concurrent remote requests.
    pub max_in_flight: usize,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        Self {
            mode: ProviderMode::Mock,
            endpoint: None,
            model_name: None,
            api_key: None,
            max_retries: 2,
            timeout_secs: 60,
            max_in_flight: 4,
        }
    }
}

impl ProviderConfig {
    pub fn with_mode(mode: ProviderMode) -> Self {
        Self {
            mode,
            ..Self::default()
        }
    }

    /// Overrides fields from `LKG_LLM_ENDPOINT`, `LKG_LLM_API_KEY` and `LKG_LLM_MODEL`.
    pub fn apply_env(&mut self) {
        self.apply_vars(|k| std::env::var(k).ok());
    }

    pub fn apply_vars(&mut self, get: impl Fn(&str) -> Option<String>) {
        if let Some(v) = get("LKG_LLM_ENDPOINT") {
            self.endpoint = Some(v);
        }
        if let Some(v) = get("LKG_LLM_API_KEY") {
            self.api_key = Some(v);
        }
        if let Some(v) = get("LKG_LLM_MODEL") {
            self.model_name = Some(v);
        }
    }

    pub fn validate(&self) -> Result<(), ProviderError> {
        if self.mode == ProviderMode::Remote && self.endpoint.as_deref().unwrap_or("").is_empty() {
            return Err(ProviderError::Config(
                "remote mode requires an endpoint (LKG_LLM_ENDPOINT)".into(),
            ));
        }
        Ok(())
    }

    /// Builds the HTTP provider for remote mode; `None` for oracle and mock.
    pub fn connect(&self) -> Result<Option<Arc<dyn ChatProvider>>, ProviderError> {
        self.validate()?;
        match self.mode {
            ProviderMode::Remote => Ok(Some(Arc::new(HttpChatProvider::new(self)?))),
            _ => Ok(None),
        }
    }
}

/// OpenAI-compatible chat-completion client.
pub struct HttpChatProvider {
    agent: ureq::Agent,
    endpoint: String,
    model: String,
    api_key: Option<String>,
}

impl HttpChatProvider {
    pub fn new(config: &ProviderConfig) -> Result<Self, ProviderError> {
        let endpoint = config
            .endpoint
            .clone()
            .ok_or_else(|| ProviderError::Config("missing endpoint".into()))?;
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_secs.max(1))))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(Self {
            agent,
            endpoint,
            model: config.model_name.clone().unwrap_or_else(|| "default".into()),
            api_key: config.api_key.clone(),
        })
    }
}

/// Pulls the assistant text out of a chat-completion style reply. Plain `{"content": ..}`
/// bodies are accepted too.
fn reply_content(body: &Value) -> Option<String> {
    body.pointer("/choices/0/message/content")
        .or_else(|| body.get("content"))
        .and_then(Value::as_str)
        .map(str::to_string)
}

impl ChatProvider for HttpChatProvider {
    fn complete(&self, prompt: &str) -> Result<String, ProviderError> {
        let payload = json!({
            "model": self.model,
            "temperature": 0,
            "response_format": {"type": "json_object"},
            "messages": [{"role": "user", "content": prompt}],
        });
        let mut req = self.agent.post(&self.endpoint);
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = req
            .send_json(&payload)
            .map_err(|e| ProviderError::Unavailable(e.to_string()))?;
        let status = resp.status();
        if !status.is_success() {
            return Err(ProviderError::Unavailable(format!("HTTP {status}")));
        }
        let body: Value = resp
            .body_mut()
            .read_json()
            .map_err(|e| ProviderError::Unavailable(format!("unreadable reply: {e}")))?;
        reply_content(&body).ok_or_else(|| ProviderError::Unavailable("reply has no content".into()))
    }

    fn fingerprint(&self) -> String {
        format!("remote:{}:{}", self.endpoint, self.model)
    }
}

pub(crate) const FORMAT_REMINDER: &str =
    "\n\nYour previous reply could not be parsed. Reply with a single JSON value only, no prose and no code fences.";

/// Extracts the first JSON object or array from a model reply, tolerating code fences
/// and surrounding prose.
pub fn extract_json(text: &str) -> Option<Value> {
    let t = text.trim();
    if let Ok(v) = serde_json::from_str(t) {
        return Some(v);
    }
    let start = t.find(['{', '['])?;
    let open = t.as_bytes()[start];
    let close = if open == b'{' { '}' } else { ']' };
    let end = t.rfind(close)?;
    (end > start)
        .then(|| serde_json::from_str(&t[start..=end]).ok())
        .flatten()
}

/// Sends `prompt` and parses the reply as JSON, re-asking with a format reminder on
/// malformed output. At most `max_retries + 1` calls are made. Transport failures are
/// returned immediately.
pub fn request_json(
    provider: &dyn ChatProvider,
    prompt: &str,
    max_retries: u32,
    accept: impl Fn(&Value) -> bool,
) -> Result<Value, ProviderError> {
    let attempts = max_retries as usize + 1;
    let mut last = String::new();
    for attempt in 0..attempts {
        let p = if attempt == 0 {
            prompt.to_string()
        } else {
            format!("{prompt}{FORMAT_REMINDER}")
        };
        let reply = provider.complete(&p)?;
        match extract_json(&reply) {
            Some(v) if accept(&v) => return Ok(v),
            _ => last = reply,
        }
    }
    Err(ProviderError::MalformedOutput { attempts, last })
}

/// Fills `{{key}}` placeholders in one pass, so substituted text is never rescanned.
/// Lines of the template starting with `#` are asset comments and are dropped.
pub fn fill_template(template: &str, vars: &[(&str, &str)]) -> String {
    let body: Vec<&str> = template.lines().filter(|l| !l.starts_with('#')).collect();
    let body = body.join("\n");
    let mut out = String::with_capacity(body.len());
    let mut rest = body.as_str();
    while let Some(open) = rest.find("{{") {
        out.push_str(&rest[..open]);
        let after = &rest[open + 2..];
        match after.find("}}").map(|close| (&after[..close], close)) {
            Some((key, close)) if vars.iter().any(|(k, _)| *k == key) => {
                let (_, v) = vars.iter().find(|(k, _)| *k == key).expect("checked");
                out.push_str(v);
                rest = &after[close + 2..];
            }
            _ => {
                out.push_str("{{");
                rest = after;
            }
        }
    }
    out.push_str(rest);
    out
}

/// Replays canned replies in order and records every prompt it receives.
#[derive(Default)]
pub struct ScriptedProvider {
    replies: Mutex<VecDeque<Result<String, ProviderError>>>,
    prompts: Mutex<Vec<String>>,
}

impl ScriptedProvider {
    pub fn new<I, S>(replies: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            replies: Mutex::new(replies.into_iter().map(|r| Ok(r.into())).collect()),
            prompts: Mutex::new(Vec::new()),
        }
    }

    pub fn push_error(&self, err: ProviderError) {
        self.replies.lock().expect("lock").push_back(Err(err));
    }

    pub fn prompts(&self) -> Vec<String> {
        self.prompts.lock().expect("lock").clone()
    }
}

impl ChatProvider for ScriptedProvider {
    fn complete(&self, prompt: &str) -> Result<String, ProviderError> {
        self.prompts.lock().expect("lock").push(prompt.to_string());
        self.replies
            .lock()
            .expect("lock")
            .pop_front()
            .unwrap_or_else(|| Err(ProviderError::Unavailable("script exhausted".into())))
    }

    fn fingerprint(&self) -> String {
        "scripted".into()
    }
}

/// Answers every prompt with a closure. Handy for deterministic fixtures that depend on
/// prompt content.
pub struct FnProvider<F>(pub F);

impl<F> ChatProvider for FnProvider<F>
where
    F: Fn(&str) -> Result<String, ProviderError> + Send + Sync,
{
    fn complete(&self, prompt: &str) -> Result<String, ProviderError> {
        (self.0)(prompt)
    }

    fn fingerprint(&self) -> String {
        "fn".into()
    }
}
