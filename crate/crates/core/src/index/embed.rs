//! Text embedders: a hashed character n-gram projection and an HTTP client.

use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{EmbeddingVector, IndexError};
use crate::scalar::Scalar;
use crate::text::{fnv1a64, normalize_ws, sha256_hex};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbedMode {
    #[default]
    Mock,
    Remote,
}

impl FromStr for EmbedMode {
    type Err = IndexError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mock" => Ok(Self::Mock),
            "remote" => Ok(Self::Remote),
            other => Err(IndexError::Config(format!("unknown embedder mode `{other}`"))),
        }
    }
}

impl fmt::Display for EmbedMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Mock => "mock",
            Self::Remote => "remote",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmbedderConfig {
    pub mode: EmbedMode,
    /// Output dimension of the mock projection.
    pub dim: usize,
    /// Character n-gram lengths hashed by the mock embedder.
    pub ngrams: Vec<usize>,
    pub endpoint: Option<String>,
    pub model_name: Option<String>,
    #[serde(skip_serializing)]
    pub api_key: Option<String>,
    pub timeout_secs: u64,
}

impl Default for EmbedderConfig {
    fn default() -> Self {
        Self {
            mode: EmbedMode::Mock,
            dim: 256,
            ngrams: vec![2, 3],
            endpoint: None,
            model_name: None,
            api_key: None,
            timeout_secs: 60,
        }
    }
}

impl EmbedderConfig {
    /// Overrides fields from `LKG_EMBED_MODE`, `LKG_EMBED_ENDPOINT` and `LKG_EMBED_API_KEY`.
    pub fn apply_env(&mut self) -> Result<(), IndexError> {
        self.apply_vars(|k| std::env::var(k).ok())
    }

    pub fn apply_vars(&mut self, get: impl Fn(&str) -> Option<String>) -> Result<(), IndexError> {
        if let Some(v) = get("LKG_EMBED_MODE") {
            self.mode = v.parse()?;
        }
        if let Some(v) = get("LKG_EMBED_ENDPOINT") {
            self.endpoint = Some(v);
        }
        if let Some(v) = get("LKG_EMBED_API_KEY") {
            self.api_key = Some(v);
        }
        Ok(())
    }

    /// Mode plus a hash of every parameter that changes the vectors.
    pub fn fingerprint(&self) -> String {
        let params = match self.mode {
            EmbedMode::Mock => format!("dim={};ngrams={:?}", self.dim, self.ngrams),
            EmbedMode::Remote => format!(
                "endpoint={};model={}",
                self.endpoint.as_deref().unwrap_or(""),
                self.model_name.as_deref().unwrap_or("")
            ),
        };
        format!("{}:{}", self.mode, sha256_hex(params.as_bytes(), 12))
    }
}

/// A configured embedder. Cheap to share across threads.
pub struct Embedder {
    config: EmbedderConfig,
    agent: Option<ureq::Agent>,
}

impl fmt::Debug for Embedder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Embedder").field("config", &self.config).finish()
    }
}

impl Embedder {
    pub fn new(config: EmbedderConfig) -> Result<Self, IndexError> {
        match config.mode {
            EmbedMode::Mock => {
                if config.dim == 0 || config.ngrams.is_empty() || config.ngrams.contains(&0) {
                    return Err(IndexError::Config("mock embedder needs dim > 0 and positive n-gram sizes".into()));
                }
                Ok(Self { config, agent: None })
            }
            EmbedMode::Remote => {
                if config.endpoint.as_deref().unwrap_or("").is_empty() {
                    return Err(IndexError::Config("remote embedder requires LKG_EMBED_ENDPOINT".into()));
                }
                let agent: ureq::Agent = ureq::Agent::config_builder()
                    .timeout_global(Some(Duration::from_secs(config.timeout_secs.max(1))))
                    .http_status_as_error(false)
                    .build()
                    .into();
                Ok(Self { config, agent: Some(agent) })
            }
        }
    }

    /// Mock embedder with default n-grams and the given dimension.
    pub fn mock(dim: usize) -> Self {
        Self::new(EmbedderConfig { dim, ..EmbedderConfig::default() }).expect("valid mock config")
    }

    pub fn config(&self) -> &EmbedderConfig {
        &self.config
    }

    pub fn fingerprint(&self) -> String {
        self.config.fingerprint()
    }

    pub fn embed<S: Scalar>(&self, text: &str) -> Result<EmbeddingVector<S>, IndexError> {
        if text.trim().is_empty() {
            return Err(IndexError::EmptyText);
        }
        match &self.agent {
            None => Ok(EmbeddingVector::normalized(mock_projection(text, self.config.dim, &self.config.ngrams))),
            Some(agent) => {
                let mut v = self.remote_batch(agent, &[text])?;
                Ok(EmbeddingVector::normalized(v.remove(0)))
            }
        }
    }

    pub fn embed_batch<S: Scalar>(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector<S>>, IndexError> {
        if texts.iter().any(|t| t.trim().is_empty()) {
            return Err(IndexError::EmptyText);
        }
        match &self.agent {
            None => texts.iter().map(|t| self.embed(t)).collect(),
            Some(agent) => {
                let mut out = Vec::with_capacity(texts.len());
                for chunk in texts.chunks(64) {
                    out.extend(self.remote_batch::<S>(agent, chunk)?.into_iter().map(EmbeddingVector::normalized));
                }
                Ok(out)
            }
        }
    }

    /// OpenAI-compatible `{"model", "input": [..]}` request; reads `data[i].embedding`.
    fn remote_batch<S: Scalar>(&self, agent: &ureq::Agent, texts: &[&str]) -> Result<Vec<Vec<S>>, IndexError> {
        let endpoint = self.config.endpoint.as_deref().unwrap_or_default();
        let payload = json!({
            "model": self.config.model_name.as_deref().unwrap_or("default"),
            "input": texts,
        });
        let mut req = agent.post(endpoint);
        if let Some(key) = &self.config.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let unavailable = |m: String| IndexError::ProviderUnavailable(m);
        let mut resp = req.send_json(&payload).map_err(|e| unavailable(e.to_string()))?;
        if !resp.status().is_success() {
            return Err(unavailable(format!("HTTP {}", resp.status())));
        }
        let body: Value = resp
            .body_mut()
            .read_json()
            .map_err(|e| unavailable(format!("unreadable reply: {e}")))?;
        let rows = body
            .get("data")
            .and_then(Value::as_array)
            .ok_or_else(|| unavailable("reply has no `data` array".into()))?;
        if rows.len() != texts.len() {
            return Err(unavailable(format!("{} embeddings for {} inputs", rows.len(), texts.len())));
        }
        rows.iter()
            .map(|r| {
                r.get("embedding")
                    .and_then(Value::as_array)
                    .filter(|a| !a.is_empty())
                    .map(|a| a.iter().map(|x| S::from_f64_lossy(x.as_f64().unwrap_or(0.0))).collect())
                    .ok_or_else(|| unavailable("row without embedding".into()))
            })
            .collect()
    }
}

/// Unnormalized hashed n-gram counts. Each n-gram of the lowercased, whitespace-collapsed
/// text (padded with one space on each side) adds ±1 to bucket `h mod dim`, the sign
/// taken from the top bit of its FNV-1a hash.
pub fn mock_projection<S: Scalar>(text: &str, dim: usize, ngrams: &[usize]) -> Vec<S> {
    let padded: Vec<char> = format!(" {} ", normalize_ws(&text.to_lowercase())).chars().collect();
    let mut v = vec![S::zero(); dim];
    let mut buf = String::new();
    for &n in ngrams {
        for w in padded.windows(n) {
            buf.clear();
            buf.extend(w.iter());
            let h = fnv1a64(buf.as_bytes());
            let slot = (h % dim as u64) as usize;
            if h >> 63 == 1 {
                v[slot] = v[slot] - S::one();
            } else {
                v[slot] = v[slot] + S::one();
            }
        }
    }
    v
}
