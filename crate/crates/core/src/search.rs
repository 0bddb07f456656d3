//! Fact-first provision retrieval: embed a fact, find similar facts, follow their
//! reasoning chains to provisions.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{GraphError, LkgGraph, ReasoningPath};
use crate::index::{Embedder, IndexError, VectorIndex};
use crate::normalize::ProvisionId;
use crate::scalar::Scalar;
use crate::schema::NodeLabel;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SearchError {
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("unknown fact `{0}`")]
    UnknownNode(String),
    #[error("node `{0}` is not a Fact")]
    NotAFact(String),
    #[error("index is empty")]
    EmptyIndex,
    #[error(transparent)]
    Index(IndexError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

impl From<IndexError> for SearchError {
    fn from(e: IndexError) -> Self {
        match e {
            IndexError::EmptyIndex => Self::EmptyIndex,
            other => Self::Index(other),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchQuery {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fact_id: Option<String>,
    pub k: usize,
    /// Exclude the query fact (node-id queries only) from the neighbor pool.
    pub mask: bool,
}

impl SearchQuery {
    pub fn text(text: impl Into<String>, k: usize) -> Self {
        Self {
            text: Some(text.into()),
            fact_id: None,
            k,
            mask: true,
        }
    }

    pub fn fact(fact_id: impl Into<String>, k: usize) -> Self {
        Self {
            text: None,
            fact_id: Some(fact_id.into()),
            k,
            mask: true,
        }
    }

    pub fn with_mask(mut self, mask: bool) -> Self {
        self.mask = mask;
        self
    }

    pub fn validate(&self) -> Result<(), SearchError> {
        match (&self.text, &self.fact_id) {
            (Some(_), Some(_)) | (None, None) => {
                return Err(SearchError::InvalidQuery("exactly one of text and fact_id must be set".into()))
            }
            (Some(t), None) if t.trim().is_empty() => {
                return Err(SearchError::InvalidQuery("text is empty".into()))
            }
            _ => {}
        }
        if self.k == 0 {
            return Err(SearchError::InvalidQuery("k must be at least 1".into()));
        }
        Ok(())
    }
}

/// One complete chain from a retrieved neighbor fact to the provision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct SupportingPath<S: Scalar> {
    pub neighbor: String,
    pub similarity: S,
    pub path: ReasoningPath,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct ProvisionHit<S: Scalar> {
    pub provision: ProvisionId,
    /// Highest similarity among the supporting neighbors.
    pub score: S,
    pub supporting_paths: Vec<SupportingPath<S>>,
}

impl<S: Scalar> ProvisionHit<S> {
    pub fn supporting_facts(&self) -> usize {
        self.supporting_paths
            .iter()
            .map(|p| p.neighbor.as_str())
            .collect::<HashSet<_>>()
            .len()
    }
}

/// The similar facts a query would draw on, in rank order. Non-positive similarities
/// are dropped so every hit has a positive score.
pub fn neighbors<S: Scalar>(
    query: &SearchQuery,
    graph: &LkgGraph,
    index: &VectorIndex<S>,
    embedder: &Embedder,
) -> Result<Vec<(String, S)>, SearchError> {
    query.validate()?;
    if index.is_empty() {
        return Err(SearchError::EmptyIndex);
    }
    let mut exclude = HashSet::new();
    let text = match (&query.text, &query.fact_id) {
        (Some(t), _) => t.clone(),
        (None, Some(id)) => {
            let node = graph.node(id).ok_or_else(|| SearchError::UnknownNode(id.clone()))?;
            if node.label != NodeLabel::Fact {
                return Err(SearchError::NotAFact(id.clone()));
            }
            if query.mask {
                exclude.insert(id.clone());
            }
            node.text.clone()
        }
        (None, None) => unreachable!("validated"),
    };
    let v = embedder.embed(&text)?;
    let mut hits = index.query(&v, query.k, &exclude)?;
    hits.retain(|(_, s)| *s > S::zero());
    Ok(hits)
}

/// Ranked provisions for `query`. Hits are ordered by score, then by the number of
/// distinct supporting facts (descending), then by canonical string.
pub fn retrieve_provisions<S: Scalar>(
    query: &SearchQuery,
    graph: &LkgGraph,
    index: &VectorIndex<S>,
    embedder: &Embedder,
) -> Result<Vec<ProvisionHit<S>>, SearchError> {
    let mut by_canonical: BTreeMap<String, ProvisionHit<S>> = BTreeMap::new();
    for (neighbor, sim) in neighbors(query, graph, index, embedder)? {
        if graph.node(&neighbor).is_none_or(|n| n.label != NodeLabel::Fact) {
            tracing::debug!(%neighbor, "indexed fact missing from graph; skipped");
            continue;
        }
        for path in graph.reasoning_paths(&neighbor, usize::MAX, false)? {
            let Some(prov) = path
                .provision
                .as_deref()
                .and_then(|p| graph.node(p))
                .and_then(|n| n.provision.clone())
            else {
                continue;
            };
            let hit = by_canonical
                .entry(prov.canonical_string())
                .or_insert_with(|| ProvisionHit {
                    provision: prov,
                    score: sim,
                    supporting_paths: Vec::new(),
                });
            hit.score = hit.score.max(sim);
            hit.supporting_paths.push(SupportingPath {
                neighbor: neighbor.clone(),
                similarity: sim,
                path,
            });
        }
    }
    let mut hits: Vec<(String, ProvisionHit<S>)> = by_canonical.into_iter().collect();
    hits.sort_by(|(ca, a), (cb, b)| {
        b.score
            .partial_cmp(&a.score)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| b.supporting_facts().cmp(&a.supporting_facts()))
            .then_with(|| ca.cmp(cb))
    });
    Ok(hits.into_iter().map(|(_, h)| h).collect())
}

/// Deduplicated provision set of a result list.
pub fn provision_set<S: Scalar>(hits: &[ProvisionHit<S>]) -> HashSet<ProvisionId> {
    hits.iter().map(|h| h.provision.clone()).collect()
}

/// Plain-text trace of a hit: one block per supporting path, each listing the fact, the
/// application, the norm and the provision.
pub fn explain<S: Scalar>(hit: &ProvisionHit<S>, graph: &LkgGraph) -> String {
    let text = |id: Option<&str>| {
        id.and_then(|i| graph.node(i))
            .map(|n| n.text.as_str())
            .unwrap_or("(missing)")
    };
    let mut out = format!("{}  score {:.3}\n", hit.provision, hit.score.to_f64_lossy());
    for (i, sp) in hit.supporting_paths.iter().enumerate() {
        let _ = writeln!(out, "[{}] neighbor {} (similarity {:.3})", i + 1, sp.neighbor, sp.similarity.to_f64_lossy());
        let _ = writeln!(out, "    Fact:        {}", text(Some(&sp.path.fact)));
        let _ = writeln!(out, "    Application: {}", text(Some(&sp.path.application)));
        let _ = writeln!(out, "    Norm:        {}", text(sp.path.norm.as_deref()));
        let _ = writeln!(out, "    Provision:   {} ({})", hit.provision, text(sp.path.provision.as_deref()));
    }
    out
}
