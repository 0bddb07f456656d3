//! Edge construction.
//!
//! Provision→Norm edges pair nodes of one section. Norm→Application and
//! Fact→Application edges are chosen from the *history* of an application: every norm
//! or fact at or before its segment in reading order, across sections. Long histories
//! are split into chunks that fit the provider's input budget.

use std::collections::{HashMap, HashSet};
use std::ops::Range;
use std::sync::{Arc, LazyLock};

use regex::Regex;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::corpus::JudgmentDoc;
use crate::extraction::{ValidationWarning, WarningKind};
use crate::graph::{LkgGraph, LkgNode};
use crate::parallel::map_bounded;
use crate::provider::{fill_template, request_json, ChatProvider, ProviderError};
use crate::schema::{EdgeKind, NodeLabel, Provenance};
use crate::text::{containment_overlap, normalize_ws};

/// Default provider input budget, in estimated tokens.
pub const DEFAULT_INPUT_BUDGET: usize = 8000;
/// Mock linking threshold on [`containment_overlap`]. Facts sharing the party name and
/// the activity with an application clear it; unrelated facts do not.
pub const MOCK_LINK_THRESHOLD: f64 = 0.4;

const PROVISION_NORM_PROMPT: &str = include_str!("../../assets/link_provision_norm.txt");
const NORM_APPLICATION_PROMPT: &str = include_str!("../../assets/link_norm_application.txt");
const FACT_APPLICATION_PROMPT: &str = include_str!("../../assets/link_fact_application.txt");

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LinkError {
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("node `{0}` is not a {1}")]
    WrongLabel(String, NodeLabel),
    #[error("node `{node}` sits on segment `{segment}`, which is not in document `{doc}`")]
    UnknownSegment {
        node: String,
        segment: String,
        doc: String,
    },
    #[error("document `{0}` has no gold annotations for oracle linking")]
    OracleMissing(String),
    #[error("provider unavailable: {0}")]
    ProviderUnavailable(String),
}

/// Characters-over-three token estimate.
pub fn estimate_tokens(s: &str) -> usize {
    s.chars().count().div_ceil(3)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HistoryKind {
    Norm,
    Fact,
}

impl HistoryKind {
    pub fn label(self) -> NodeLabel {
        match self {
            Self::Norm => NodeLabel::LegalNorm,
            Self::Fact => NodeLabel::Fact,
        }
    }

    pub fn edge_kind(self) -> EdgeKind {
        match self {
            Self::Norm => EdgeKind::AppliesNorm,
            Self::Fact => EdgeKind::ToFact,
        }
    }

    fn item_name(self) -> &'static str {
        match self {
            Self::Norm => "Norm",
            Self::Fact => "Fact",
        }
    }

    fn template(self) -> &'static str {
        match self {
            Self::Norm => NORM_APPLICATION_PROMPT,
            Self::Fact => FACT_APPLICATION_PROMPT,
        }
    }
}

/// One prompt's worth of history for an application.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkRequest {
    pub target: String,
    pub kind: HistoryKind,
    /// Earlier nodes, oldest first. Prompt index `n` names `candidates[n - 1]`.
    pub candidates: Vec<String>,
    pub source_excerpt: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ProposedEdge {
    pub kind: EdgeKind,
    pub src: String,
    pub dst: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LinkOutcome {
    pub edges: Vec<ProposedEdge>,
    pub warnings: Vec<ValidationWarning>,
}

impl LinkOutcome {
    fn extend(&mut self, other: LinkOutcome) {
        self.edges.extend(other.edges);
        self.warnings.extend(other.warnings);
    }
}

#[derive(Clone)]
pub enum LinkBackend {
    Oracle,
    Mock,
    Remote {
        provider: Arc<dyn ChatProvider>,
        max_retries: u32,
        max_in_flight: usize,
    },
}

impl LinkBackend {
    pub fn provenance(&self) -> Provenance {
        match self {
            Self::Oracle => Provenance::Oracle,
            Self::Mock => Provenance::Mock,
            Self::Remote { .. } => Provenance::Remote,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LinkConfig {
    pub input_budget_tokens: usize,
    pub mock_threshold: f64,
}

impl Default for LinkConfig {
    fn default() -> Self {
        Self {
            input_budget_tokens: DEFAULT_INPUT_BUDGET,
            mock_threshold: MOCK_LINK_THRESHOLD,
        }
    }
}

/// Splits items with the given costs into consecutive chunks of total cost at most
/// `available`. An item costlier than `available` gets a chunk of its own.
pub fn chunk_by_budget(costs: &[usize], available: usize) -> Vec<Range<usize>> {
    let mut out = Vec::new();
    let (mut start, mut used) = (0, 0);
    for (i, &c) in costs.iter().enumerate() {
        if i > start && used + c > available {
            out.push(start..i);
            start = i;
            used = 0;
        }
        used += c;
    }
    if start < costs.len() {
        out.push(start..costs.len());
    }
    out
}

static INDEX_LABEL: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)^\s*(?:norm|fact|law|application)?\s*[(（]?\s*(\d+)\s*[)）]?\s*$").expect("valid regex")
});

fn index_of_label(v: &Value) -> Option<usize> {
    match v {
        Value::Number(n) => n.as_u64().map(|n| n as usize),
        Value::String(s) => INDEX_LABEL.captures(s).and_then(|c| c[1].parse().ok()),
        _ => None,
    }
}

fn reply_targets(v: &Value) -> Vec<&Value> {
    match v {
        Value::Array(a) => a.iter().collect(),
        Value::Null => Vec::new(),
        other => vec![other],
    }
}

/// Links the nodes of one document.
pub struct DocLinker<'a> {
    doc: &'a JudgmentDoc,
    graph: &'a LkgGraph,
    backend: &'a LinkBackend,
    config: LinkConfig,
    /// Node id → (segment position, insertion order).
    order: HashMap<&'a str, (usize, usize)>,
    nodes: Vec<&'a LkgNode>,
    gold: Vec<ProposedEdge>,
}

impl<'a> DocLinker<'a> {
    pub fn new(
        doc: &'a JudgmentDoc,
        graph: &'a LkgGraph,
        backend: &'a LinkBackend,
        config: LinkConfig,
    ) -> Result<Self, LinkError> {
        let positions = doc.segment_positions();
        let mut order = HashMap::new();
        let mut nodes = Vec::new();
        for (i, n) in graph.nodes().iter().enumerate() {
            if n.doc_id != doc.doc_id {
                continue;
            }
            let pos = *positions.get(n.segment_id.as_str()).ok_or_else(|| LinkError::UnknownSegment {
                node: n.node_id.clone(),
                segment: n.segment_id.clone(),
                doc: doc.doc_id.clone(),
            })?;
            order.insert(n.node_id.as_str(), (pos, i));
            nodes.push(n);
        }
        nodes.sort_by_key(|n| order[n.node_id.as_str()]);
        let mut linker = Self {
            doc,
            graph,
            backend,
            config,
            order,
            nodes,
            gold: Vec::new(),
        };
        if matches!(backend, LinkBackend::Oracle) {
            linker.gold = linker.gold_edges()?;
        }
        Ok(linker)
    }

    /// Gold edges mapped onto graph nodes by (segment, label, text) and, for provisions
    /// with a known canonical id, by that id.
    fn gold_edges(&self) -> Result<Vec<ProposedEdge>, LinkError> {
        let gold = self
            .doc
            .gold
            .as_ref()
            .ok_or_else(|| LinkError::OracleMissing(self.doc.doc_id.clone()))?;
        let mut by_key: HashMap<(&str, NodeLabel, String), Vec<&LkgNode>> = HashMap::new();
        for n in &self.nodes {
            by_key
                .entry((n.segment_id.as_str(), n.label, normalize_ws(&n.text)))
                .or_default()
                .push(n);
        }
        let resolve = |i: usize| -> Vec<&str> {
            let Some(g) = gold.nodes.get(i) else { return Vec::new() };
            by_key
                .get(&(g.segment_id.as_str(), g.label, normalize_ws(&g.text)))
                .into_iter()
                .flatten()
                .filter(|n| match (&g.provision, &n.provision) {
                    (Some(c), Some(p)) => *c == p.canonical_string(),
                    _ => true,
                })
                .map(|n| n.node_id.as_str())
                .collect()
        };
        let mut out = Vec::new();
        for e in &gold.edges {
            for s in resolve(e.src) {
                for d in resolve(e.dst) {
                    out.push(ProposedEdge {
                        kind: e.kind,
                        src: s.to_string(),
                        dst: d.to_string(),
                    });
                }
            }
        }
        Ok(out)
    }

    fn node(&self, id: &str) -> Result<&'a LkgNode, LinkError> {
        self.graph
            .node(id)
            .filter(|n| n.doc_id == self.doc.doc_id)
            .ok_or_else(|| LinkError::UnknownNode(id.to_string()))
    }

    fn warning(&self, segment_id: &str, kind: WarningKind, detail: String) -> ValidationWarning {
        ValidationWarning {
            kind,
            doc_id: self.doc.doc_id.clone(),
            segment_id: segment_id.to_string(),
            detail,
        }
    }

    fn section_path(&self, n: &LkgNode) -> Vec<usize> {
        self.doc
            .segment(&n.segment_id)
            .map(|s| s.section_path.clone())
            .unwrap_or_default()
    }

    /// Nodes grouped by section, in reading order of first appearance.
    pub fn sections(&self) -> Vec<Vec<&'a LkgNode>> {
        let mut groups: Vec<(Vec<usize>, Vec<&LkgNode>)> = Vec::new();
        for n in &self.nodes {
            let path = self.section_path(n);
            match groups.iter_mut().find(|(p, _)| *p == path) {
                Some((_, g)) => g.push(n),
                None => groups.push((path, vec![n])),
            }
        }
        groups.into_iter().map(|(_, g)| g).collect()
    }

    /// Candidates for `app`: nodes of the requested label at or before its segment,
    /// chunked oldest-first to fit the input budget. Always at least one request.
    pub fn assemble_history(&self, app: &str, kind: HistoryKind) -> Result<Vec<LinkRequest>, LinkError> {
        let target = self.node(app)?;
        if target.label != NodeLabel::LegalApplication {
            return Err(LinkError::WrongLabel(app.to_string(), NodeLabel::LegalApplication));
        }
        let limit = self.order[app].0;
        let cands: Vec<&LkgNode> = self
            .nodes
            .iter()
            .copied()
            .filter(|n| n.label == kind.label() && self.order[n.node_id.as_str()].0 <= limit)
            .collect();
        let excerpt = self
            .doc
            .segment(&target.segment_id)
            .map(|s| s.text.clone())
            .unwrap_or_default();
        let overhead = estimate_tokens(kind.template()) + estimate_tokens(&target.text);
        let available = self.config.input_budget_tokens.saturating_sub(overhead).max(1);
        let costs: Vec<usize> = cands.iter().map(|c| estimate_tokens(&c.text) + 3).collect();
        let mut chunks = chunk_by_budget(&costs, available);
        if chunks.is_empty() {
            chunks.push(0..0);
        }
        Ok(chunks
            .into_iter()
            .map(|r| LinkRequest {
                target: app.to_string(),
                kind,
                candidates: cands[r].iter().map(|n| n.node_id.clone()).collect(),
                source_excerpt: excerpt.clone(),
            })
            .collect())
    }

    /// DerivesNorm edges among the nodes of one section.
    pub fn pair_provision_norm(&self, section_nodes: &[&LkgNode]) -> Result<LinkOutcome, LinkError> {
        let provs: Vec<&LkgNode> = section_nodes.iter().copied().filter(|n| n.label == NodeLabel::Provision).collect();
        let norms: Vec<&LkgNode> = section_nodes.iter().copied().filter(|n| n.label == NodeLabel::LegalNorm).collect();
        let mut out = LinkOutcome::default();
        if provs.is_empty() || norms.is_empty() {
            return Ok(out);
        }
        let edge = |p: &LkgNode, n: &LkgNode| ProposedEdge {
            kind: EdgeKind::DerivesNorm,
            src: p.node_id.clone(),
            dst: n.node_id.clone(),
        };
        match self.backend {
            LinkBackend::Oracle => {
                let ps: HashSet<&str> = provs.iter().map(|n| n.node_id.as_str()).collect();
                let ns: HashSet<&str> = norms.iter().map(|n| n.node_id.as_str()).collect();
                out.edges = self
                    .gold
                    .iter()
                    .filter(|e| e.kind == EdgeKind::DerivesNorm && ps.contains(e.src.as_str()) && ns.contains(e.dst.as_str()))
                    .cloned()
                    .collect();
            }
            LinkBackend::Mock => {
                for n in &norms {
                    let lower = n.text.to_lowercase();
                    let cited: Vec<&&LkgNode> = provs
                        .iter()
                        .filter(|p| {
                            p.provision.as_ref().is_some_and(|id| {
                                lower.contains(&id.law_title.to_lowercase())
                                    || lower.contains(&format!("article {}", id.article))
                            })
                        })
                        .collect();
                    let sources: Vec<&&LkgNode> = if cited.is_empty() { provs.iter().collect() } else { cited };
                    out.edges.extend(sources.into_iter().map(|p| edge(p, n)));
                }
            }
            LinkBackend::Remote { provider, max_retries, .. } => {
                let laws: Vec<String> = provs
                    .iter()
                    .enumerate()
                    .map(|(i, p)| {
                        let canon = p.provision.as_ref().map(|x| x.canonical_string()).unwrap_or_default();
                        format!("Law {}: {} ({canon})", i + 1, p.text)
                    })
                    .collect();
                let norm_lines: Vec<String> =
                    norms.iter().enumerate().map(|(i, n)| format!("Norm {}: {}", i + 1, n.text)).collect();
                let excerpt: Vec<String> = section_nodes
                    .first()
                    .and_then(|n| self.doc.section(&self.section_path(n)))
                    .map(|s| s.segments.iter().map(|x| x.text.clone()).collect())
                    .unwrap_or_default();
                let prompt = fill_template(
                    PROVISION_NORM_PROMPT,
                    &[
                        ("laws", &laws.join("\n")),
                        ("norms", &norm_lines.join("\n")),
                        ("excerpt", &excerpt.join("\n")),
                    ],
                );
                let seg = provs[0].segment_id.as_str();
                match request_json(provider.as_ref(), &prompt, *max_retries, Value::is_object) {
                    Ok(reply) => {
                        for (key, val) in reply.as_object().expect("object") {
                            let law = INDEX_LABEL
                                .captures(key)
                                .and_then(|c| c[1].parse::<usize>().ok())
                                .and_then(|i| i.checked_sub(1))
                                .or_else(|| provs.iter().position(|p| key.contains(p.text.as_str()) || p.text.contains(key.as_str())));
                            let Some(p) = law.and_then(|i| provs.get(i)) else {
                                out.warnings.push(self.warning(seg, WarningKind::DroppedLink, format!("unknown law key `{key}`")));
                                continue;
                            };
                            for t in reply_targets(val) {
                                let by_index = index_of_label(t).and_then(|i| i.checked_sub(1)).and_then(|i| norms.get(i));
                                let by_text = t.as_str().and_then(|s| {
                                    let s = normalize_ws(s.trim_end_matches("..."));
                                    norms.iter().find(|n| !s.is_empty() && normalize_ws(&n.text).starts_with(&s))
                                });
                                match by_index.or(by_text) {
                                    Some(n) => out.edges.push(edge(p, n)),
                                    None => out.warnings.push(self.warning(
                                        seg,
                                        WarningKind::DroppedLink,
                                        format!("norm reference {t} out of range"),
                                    )),
                                }
                            }
                        }
                    }
                    Err(ProviderError::MalformedOutput { .. }) => out.warnings.push(self.warning(
                        seg,
                        WarningKind::FailedSection,
                        "provision-norm reply unusable; section skipped".into(),
                    )),
                    Err(e) => return Err(LinkError::ProviderUnavailable(e.to_string())),
                }
            }
        }
        Ok(out)
    }

    pub fn link_norm_application(&self, req: &LinkRequest) -> Result<LinkOutcome, LinkError> {
        self.link_history(req, HistoryKind::Norm)
    }

    pub fn link_fact_application(&self, req: &LinkRequest) -> Result<LinkOutcome, LinkError> {
        self.link_history(req, HistoryKind::Fact)
    }

    fn link_history(&self, req: &LinkRequest, kind: HistoryKind) -> Result<LinkOutcome, LinkError> {
        let target = self.node(&req.target)?;
        let cands: Vec<&LkgNode> = req
            .candidates
            .iter()
            .map(|c| self.node(c))
            .collect::<Result<_, _>>()?;
        if let Some(bad) = cands.iter().find(|c| c.label != kind.label()) {
            return Err(LinkError::WrongLabel(bad.node_id.clone(), kind.label()));
        }
        let mut out = LinkOutcome::default();
        let edge = |c: &LkgNode| ProposedEdge {
            kind: kind.edge_kind(),
            src: c.node_id.clone(),
            dst: target.node_id.clone(),
        };
        match self.backend {
            LinkBackend::Oracle => {
                let ids: HashSet<&str> = req.candidates.iter().map(String::as_str).collect();
                out.edges = self
                    .gold
                    .iter()
                    .filter(|e| e.kind == kind.edge_kind() && e.dst == target.node_id && ids.contains(e.src.as_str()))
                    .cloned()
                    .collect();
            }
            LinkBackend::Mock => {
                let quoted = quoted_terms(&target.text);
                for c in &cands {
                    let shares_term = kind == HistoryKind::Norm && !quoted.is_disjoint(&quoted_terms(&c.text));
                    if shares_term || containment_overlap(&c.text, &target.text) >= self.config.mock_threshold {
                        out.edges.push(edge(c));
                    }
                }
            }
            LinkBackend::Remote { provider, max_retries, .. } => {
                if cands.is_empty() {
                    return Ok(out);
                }
                let lines: Vec<String> = cands
                    .iter()
                    .enumerate()
                    .map(|(i, c)| format!("({}) {}", i + 1, c.text))
                    .collect();
                let prompt = fill_template(
                    kind.template(),
                    &[("candidates", &lines.join("\n")), ("target", &target.text)],
                );
                let accept = |v: &Value| v.is_object() || v.as_array().is_some_and(Vec::is_empty);
                match request_json(provider.as_ref(), &prompt, *max_retries, accept) {
                    Ok(reply) => {
                        let picks: Vec<&Value> = match &reply {
                            Value::Object(o) => o.values().flat_map(reply_targets).collect(),
                            _ => Vec::new(),
                        };
                        for p in picks {
                            match index_of_label(p).and_then(|i| i.checked_sub(1)).and_then(|i| cands.get(i)) {
                                Some(c) => out.edges.push(edge(c)),
                                None => out.warnings.push(self.warning(
                                    &target.segment_id,
                                    WarningKind::DroppedLink,
                                    format!("{} reference {p} out of range 1..={}", kind.item_name(), cands.len()),
                                )),
                            }
                        }
                    }
                    Err(ProviderError::MalformedOutput { .. }) => out.warnings.push(self.warning(
                        &target.segment_id,
                        WarningKind::FailedSection,
                        format!("{} link reply unusable for `{}`", kind.item_name(), target.node_id),
                    )),
                    Err(e) => return Err(LinkError::ProviderUnavailable(e.to_string())),
                }
            }
        }
        Ok(out)
    }

    /// Every edge of the document: section pairing, then both histories of each
    /// application. Duplicate proposals from overlapping work are kept once.
    pub fn link_all(&self) -> Result<LinkOutcome, LinkError> {
        enum Job<'b> {
            Section(Vec<&'b LkgNode>),
            History(LinkRequest),
        }
        let mut jobs: Vec<Job> = self.sections().into_iter().map(Job::Section).collect();
        for app in self.nodes.iter().filter(|n| n.label == NodeLabel::LegalApplication) {
            for kind in [HistoryKind::Norm, HistoryKind::Fact] {
                jobs.extend(self.assemble_history(&app.node_id, kind)?.into_iter().map(Job::History));
            }
        }
        let cap = match self.backend {
            LinkBackend::Remote { max_in_flight, .. } => *max_in_flight,
            _ => 1,
        };
        let results = map_bounded(&jobs, cap, |job| match job {
            Job::Section(nodes) => self.pair_provision_norm(nodes),
            Job::History(req) => self.link_history(req, req.kind),
        });
        let mut out = LinkOutcome::default();
        for r in results {
            out.extend(r?);
        }
        Ok(out)
    }
}

fn quoted_terms(s: &str) -> HashSet<String> {
    static QUOTED: LazyLock<Regex> =
        LazyLock::new(|| Regex::new(r#"["“「'‘]([^"”」'’]{2,60})["”」'’]"#).expect("valid regex"));
    QUOTED
        .captures_iter(s)
        .map(|c| normalize_ws(&c[1].to_lowercase()))
        .collect()
}

/// Links one document's nodes in `graph` and inserts the edges.
pub fn link_document(
    doc: &JudgmentDoc,
    graph: &mut LkgGraph,
    backend: &LinkBackend,
    config: LinkConfig,
) -> Result<Vec<ValidationWarning>, LinkError> {
    let outcome = DocLinker::new(doc, graph, backend, config)?.link_all()?;
    let mut warnings = outcome.warnings;
    for e in outcome.edges {
        if let Err(err) = graph.add_edge(e.kind, &e.src, &e.dst, backend.provenance()) {
            warnings.push(ValidationWarning {
                kind: WarningKind::DroppedLink,
                doc_id: doc.doc_id.clone(),
                segment_id: String::new(),
                detail: err.to_string(),
            });
        }
    }
    Ok(warnings)
}
