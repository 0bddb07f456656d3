//! Section-level node extraction.
//!
//! Each section of a judgment is labeled independently by one of three backends:
//! gold annotations (oracle), sentence rules (mock) or a chat model (remote).

mod mock;

use std::collections::HashSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::corpus::{JudgmentDoc, Section};
use crate::provider::{fill_template, request_json, ChatProvider, ProviderError};
use crate::schema::{NodeLabel, Provenance};
use crate::text::{contains_normalized, containment_overlap, normalize_ws};

pub use mock::{mock_extract_segment, MockRules};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExtractionError {
    #[error("document `{0}` has no gold annotations for oracle extraction")]
    OracleMissing(String),
    #[error("malformed provider output: {0}")]
    MalformedOutput(String),
    #[error("provider unavailable: {0}")]
    ProviderUnavailable(String),
    #[error("section {0:?} does not belong to document `{1}`")]
    ForeignSection(Vec<usize>, String),
}

impl From<ProviderError> for ExtractionError {
    fn from(e: ProviderError) -> Self {
        match e {
            ProviderError::MalformedOutput { .. } => Self::MalformedOutput(e.to_string()),
            other => Self::ProviderUnavailable(other.to_string()),
        }
    }
}

/// A labeled span proposed for the graph.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NodeCandidate {
    pub label: NodeLabel,
    pub text: String,
    pub segment_id: String,
    pub provenance: Provenance,
    /// Canonical provision string known in advance (gold annotations only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub canonical_hint: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WarningKind {
    NonVerbatimSpan,
    SurfaceCopy,
    UnresolvedProvision,
    FailedSection,
    DroppedLink,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationWarning {
    pub kind: WarningKind,
    pub doc_id: String,
    pub segment_id: String,
    pub detail: String,
}

/// How sections are labeled.
#[derive(Clone)]
pub enum ExtractionBackend {
    Oracle,
    Mock(MockRules),
    Remote {
        provider: Arc<dyn ChatProvider>,
        max_retries: u32,
        max_in_flight: usize,
    },
}

impl ExtractionBackend {
    pub fn provenance(&self) -> Provenance {
        match self {
            Self::Oracle => Provenance::Oracle,
            Self::Mock(_) => Provenance::Mock,
            Self::Remote { .. } => Provenance::Remote,
        }
    }
}

const NODE_PROMPT: &str = include_str!("../../assets/node_extraction.txt");

/// Tokens of the prompt's invented example; seeing them in output signals copying.
pub const SURFACE_COPY_TOKENS: [&str; 3] = ["martian", "nerith", "oolan"];

/// Renders the node-extraction prompt: instructions, label definitions with the
/// invented example, output format, then the overview and section blocks.
pub fn build_node_prompt(overview: &str, section_text: &str) -> String {
    fill_template(
        NODE_PROMPT,
        &[("overview", overview.trim()), ("section", section_text.trim())],
    )
}

fn section_of<'a>(doc: &'a JudgmentDoc, section: &Section) -> Option<&'a Section> {
    doc.section(&section.path)
        .filter(|s| s.segments.first().map(|x| &x.segment_id) == section.segments.first().map(|x| &x.segment_id))
}

/// Labels one section. The result is validated (deduplicated) but warnings are
/// discarded; use [`extract_document`] to keep them.
pub fn extract_nodes(
    doc: &JudgmentDoc,
    section: &Section,
    backend: &ExtractionBackend,
) -> Result<Vec<NodeCandidate>, ExtractionError> {
    let sec = section_of(doc, section)
        .ok_or_else(|| ExtractionError::ForeignSection(section.path.clone(), doc.doc_id.clone()))?;
    let raw = raw_candidates(doc, sec, backend)?;
    Ok(validate_candidates(raw, &sec.text(), &doc.doc_id).0)
}

fn raw_candidates(
    doc: &JudgmentDoc,
    sec: &Section,
    backend: &ExtractionBackend,
) -> Result<Vec<NodeCandidate>, ExtractionError> {
    match backend {
        ExtractionBackend::Oracle => {
            let gold = doc
                .gold
                .as_ref()
                .ok_or_else(|| ExtractionError::OracleMissing(doc.doc_id.clone()))?;
            let ids: HashSet<&str> = sec.segments.iter().map(|s| s.segment_id.as_str()).collect();
            Ok(gold
                .nodes
                .iter()
                .filter(|n| ids.contains(n.segment_id.as_str()))
                .map(|n| NodeCandidate {
                    label: n.label,
                    text: n.text.clone(),
                    segment_id: n.segment_id.clone(),
                    provenance: Provenance::Oracle,
                    canonical_hint: n.provision.clone(),
                })
                .collect())
        }
        ExtractionBackend::Mock(rules) => Ok(sec
            .body()
            .flat_map(|seg| mock_extract_segment(rules, &seg.segment_id, &seg.text))
            .collect()),
        ExtractionBackend::Remote {
            provider,
            max_retries,
            ..
        } => {
            let prompt = build_node_prompt(&doc.case_overview, &sec.text());
            let reply = request_json(provider.as_ref(), &prompt, *max_retries, is_node_reply)?;
            Ok(parse_node_reply(&reply, sec))
        }
    }
}

const REPLY_KEYS: [(&str, NodeLabel); 4] = [
    ("facts", NodeLabel::Fact),
    ("provisions", NodeLabel::Provision),
    ("legal_norms", NodeLabel::LegalNorm),
    ("legal_applications", NodeLabel::LegalApplication),
];

fn is_node_reply(v: &Value) -> bool {
    let Some(obj) = v.as_object() else { return false };
    REPLY_KEYS.iter().any(|(k, _)| obj.contains_key(*k))
        && REPLY_KEYS
            .iter()
            .all(|(k, _)| obj.get(*k).is_none_or(Value::is_array))
}

/// Maps each labeled span of a provider reply onto the section segment containing it,
/// falling back to the segment with the largest token overlap.
pub fn parse_node_reply(reply: &Value, sec: &Section) -> Vec<NodeCandidate> {
    let segments: Vec<_> = sec.segments.iter().collect();
    let mut out = Vec::new();
    for (key, label) in REPLY_KEYS {
        for item in reply.get(key).and_then(Value::as_array).into_iter().flatten() {
            let text = match item {
                Value::String(s) => s.as_str(),
                Value::Object(o) => match o.get("text").and_then(Value::as_str) {
                    Some(t) => t,
                    None => continue,
                },
                _ => continue,
            };
            let text = normalize_ws(text);
            if text.is_empty() || segments.is_empty() {
                continue;
            }
            let seg = segments
                .iter()
                .copied()
                .find(|s| contains_normalized(&s.text, &text))
                .unwrap_or_else(|| {
                    let mut best = (f64::NEG_INFINITY, segments[0]);
                    for &s in &segments {
                        let o = containment_overlap(&s.text, &text);
                        if o > best.0 {
                            best = (o, s);
                        }
                    }
                    best.1
                });
            out.push(NodeCandidate {
                label,
                text,
                segment_id: seg.segment_id.clone(),
                provenance: Provenance::Remote,
                canonical_hint: None,
            });
        }
    }
    out
}

/// Flags spans absent from the section text and spans that echo the prompt's invented
/// example, and drops repeated (label, text) pairs. Flagged candidates are kept.
pub fn validate_candidates(
    candidates: Vec<NodeCandidate>,
    section_text: &str,
    doc_id: &str,
) -> (Vec<NodeCandidate>, Vec<ValidationWarning>) {
    let mut seen = HashSet::new();
    let mut kept = Vec::new();
    let mut warnings = Vec::new();
    for c in candidates {
        if c.text.trim().is_empty()
            || !seen.insert((c.label, normalize_ws(&c.text), c.canonical_hint.clone()))
        {
            continue;
        }
        let warn = |kind, detail: String| ValidationWarning {
            kind,
            doc_id: doc_id.to_string(),
            segment_id: c.segment_id.clone(),
            detail,
        };
        if !contains_normalized(section_text, &c.text) {
            warnings.push(warn(
                WarningKind::NonVerbatimSpan,
                format!("{} span not found verbatim: {}", c.label, c.text),
            ));
        }
        let lower = c.text.to_lowercase();
        let copied: Vec<&str> = SURFACE_COPY_TOKENS
            .iter()
            .copied()
            .filter(|t| lower.contains(t) && !section_text.to_lowercase().contains(t))
            .collect();
        if !copied.is_empty() {
            warnings.push(warn(
                WarningKind::SurfaceCopy,
                format!("span repeats example tokens {copied:?}: {}", c.text),
            ));
        }
        kept.push(c);
    }
    (kept, warnings)
}

/// Candidates and diagnostics for one document.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocExtraction {
    pub doc_id: String,
    pub candidates: Vec<NodeCandidate>,
    pub warnings: Vec<ValidationWarning>,
}

/// Labels every section of `doc`. In remote mode sections run concurrently, at most
/// `max_in_flight` at a time; a section whose reply stays malformed is recorded as a
/// warning and skipped. Results are ordered by section then segment.
pub fn extract_document(
    doc: &JudgmentDoc,
    backend: &ExtractionBackend,
) -> Result<DocExtraction, ExtractionError> {
    let sections: Vec<&Section> = doc.sections().into_iter().filter(|s| !s.segments.is_empty()).collect();
    if matches!(backend, ExtractionBackend::Oracle) && doc.gold.is_none() {
        return Err(ExtractionError::OracleMissing(doc.doc_id.clone()));
    }
    let cap = match backend {
        ExtractionBackend::Remote { max_in_flight, .. } => (*max_in_flight).max(1),
        _ => 1,
    };
    let results = crate::parallel::map_bounded(&sections, cap, |sec| raw_candidates(doc, sec, backend));
    let mut out = DocExtraction {
        doc_id: doc.doc_id.clone(),
        ..Default::default()
    };
    for (sec, res) in sections.iter().zip(results) {
        match res {
            Ok(raw) => {
                let (kept, warnings) = validate_candidates(raw, &sec.text(), &doc.doc_id);
                out.candidates.extend(kept);
                out.warnings.extend(warnings);
            }
            Err(ExtractionError::MalformedOutput(msg)) => out.warnings.push(ValidationWarning {
                kind: WarningKind::FailedSection,
                doc_id: doc.doc_id.clone(),
                segment_id: sec.segments[0].segment_id.clone(),
                detail: msg,
            }),
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{synth_corpus, SynthParams};
    use crate::provider::ScriptedProvider;

    #[test]
    fn prompt_layout() {
        let p = build_node_prompt("", "X");
        assert!(p.contains("<<<OVERVIEW\n\nOVERVIEW>>>"));
        assert!(p.contains("<<<SECTION\nX\nSECTION>>>"));
        for label in ["Fact", "Legal Norm", "Legal Application", "Provision"] {
            assert!(p.contains(label), "{label}");
        }
        let order = ["Labels:", "Output format", "<<<OVERVIEW", "<<<SECTION"];
        let pos: Vec<usize> = order.iter().map(|k| p.find(k).unwrap()).collect();
        assert!(pos.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(p, build_node_prompt("", "X"));
        assert!(!p.contains("{{"));
        assert!(!p.lines().any(|l| l.starts_with('#')));
    }

    #[test]
    fn validation_flags_and_dedupes() {
        let c = |label, text: &str| NodeCandidate {
            label,
            text: text.into(),
            segment_id: "d:1:1".into(),
            provenance: Provenance::Mock,
            canonical_hint: None,
        };
        let section = "Quill drew water on 3 May.";
        let (kept, warns) = validate_candidates(
            vec![
                c(NodeLabel::Fact, "Quill drew water on 3 May."),
                c(NodeLabel::Fact, "Quill  drew water on 3 May."),
                c(NodeLabel::Fact, "Nerith Oolan drew water."),
            ],
            section,
            "d",
        );
        assert_eq!(kept.len(), 2);
        let kinds: Vec<_> = warns.iter().map(|w| w.kind).collect();
        assert_eq!(kinds, [WarningKind::NonVerbatimSpan, WarningKind::SurfaceCopy]);
    }

    #[test]
    fn oracle_requires_gold() {
        let mut doc = synth_corpus(1, 1, &SynthParams::default()).unwrap().remove(0);
        doc.gold = None;
        assert!(matches!(
            extract_document(&doc, &ExtractionBackend::Oracle),
            Err(ExtractionError::OracleMissing(_))
        ));
    }

    #[test]
    fn remote_failure_skips_section() {
        let doc = synth_corpus(1, 1, &SynthParams::default()).unwrap().remove(0);
        let n_sections = doc.sections().iter().filter(|s| !s.segments.is_empty()).count();
        let provider = Arc::new(ScriptedProvider::new(vec!["not json"; 3 * n_sections]));
        let backend = ExtractionBackend::Remote {
            provider,
            max_retries: 2,
            max_in_flight: 1,
        };
        let out = extract_document(&doc, &backend).unwrap();
        assert!(out.candidates.is_empty());
        assert_eq!(out.warnings.len(), n_sections);
        assert!(out.warnings.iter().all(|w| w.kind == WarningKind::FailedSection));
    }
}
