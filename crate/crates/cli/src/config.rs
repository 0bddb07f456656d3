//! Run configuration: one TOML file, then `LKG_*` environment overrides, then flags.
//!
//! ```toml
//! seeds = [7]
//!
//! [paths]
//! corpus = "corpus.json"
//! docs = "work/docs.json"
//! extraction = "work/extraction.json"
//! nodes = "work/nodes.json"
//! snapshot = "work/graph.json"
//! index = "work/index.json"
//! report = "work/report.csv"
//! catalog = "statutes.json"
//!
//! [provider]          # mode, endpoint, model_name, max_retries, timeout_secs, max_in_flight
//! [embedder]          # mode, dim, ngrams, endpoint, model_name, timeout_secs
//! [link]              # input_budget_tokens, mock_threshold
//! [service]           # addr, cors_origins
//! ```

use std::path::{Path, PathBuf};

use anyhow::Context;
use lkg_core::index::EmbedderConfig;
use lkg_core::linker::LinkConfig;
use lkg_core::provider::ProviderConfig;
use lkg_service::ServiceConfig;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub corpus: Option<PathBuf>,
    pub docs: Option<PathBuf>,
    pub extraction: Option<PathBuf>,
    pub nodes: Option<PathBuf>,
    pub snapshot: Option<PathBuf>,
    pub index: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub catalog: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub paths: Paths,
    pub provider: ProviderConfig,
    pub embedder: EmbedderConfig,
    pub link: LinkConfig,
    pub service: ServiceConfig,
    pub seeds: Vec<u64>,
}

impl RunConfig {
    /// Reads `path` (if any) and applies environment overrides.
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        let mut cfg = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
                toml::from_str(&text).with_context(|| format!("parsing config {}", p.display()))?
            }
            None => Self::default(),
        };
        cfg.apply_vars(|k| std::env::var(k).ok())?;
        Ok(cfg)
    }

    pub fn apply_vars(&mut self, get: impl Fn(&str) -> Option<String>) -> anyhow::Result<()> {
        self.provider.apply_vars(&get);
        if let Some(m) = get("LKG_LLM_MODE") {
            self.provider.mode = m.parse().map_err(anyhow::Error::msg)?;
        }
        self.embedder.apply_vars(&get)?;
        self.service.apply_vars(&get);
        if let Some(p) = get("LKG_SNAPSHOT_PATH") {
            self.paths.snapshot = Some(p.into());
        }
        if let Some(p) = get("LKG_INDEX_PATH") {
            self.paths.index = Some(p.into());
        }
        Ok(())
    }
}
