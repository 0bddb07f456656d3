//! The structured-JSON corpus format, `lkg-corpus/1`.
//!
//! ```json
//! {"version": "lkg-corpus/1",
//!  "documents": [{"doc_id": "...", "case_overview": "...",
//!                 "sections": [{"heading": "...", "paragraphs": ["..."]}],
//!                 "gold": {"nodes": [{"segment": "...", "label": "Fact", "text": "..."}],
//!                          "edges": [{"type": "ToFact", "src": 0, "dst": 1}]}}]}
//! ```
//!
//! Sections are flat. Section `i` (1-based) gets segment ids `<doc>:<i>:<ordinal>`, the
//! heading at ordinal 0 when it is nonempty. Gold edge endpoints index `gold.nodes`.
//! Gold Provision nodes may carry an optional `"provision"` canonical string.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::{
    segment_id, CorpusError, GoldAnnotations, GoldEdge, GoldNode, JudgmentDoc, Section, Segment,
};
use crate::schema::{EdgeKind, NodeLabel};

pub const CORPUS_VERSION: &str = "lkg-corpus/1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusFile {
    pub version: String,
    pub documents: Vec<CorpusDocument>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusDocument {
    pub doc_id: String,
    #[serde(default)]
    pub case_overview: String,
    pub sections: Vec<CorpusSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold: Option<CorpusGold>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusSection {
    #[serde(default)]
    pub heading: String,
    pub paragraphs: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CorpusGold {
    pub nodes: Vec<GoldNodeRecord>,
    pub edges: Vec<GoldEdgeRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldNodeRecord {
    pub segment: String,
    pub label: NodeLabel,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provision: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldEdgeRecord {
    #[serde(rename = "type")]
    pub kind: EdgeKind,
    pub src: usize,
    pub dst: usize,
}

impl CorpusFile {
    pub fn new(documents: Vec<CorpusDocument>) -> Self {
        Self {
            version: CORPUS_VERSION.to_string(),
            documents,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("corpus serializes")
    }

    pub fn into_judgments(self) -> Result<Vec<JudgmentDoc>, CorpusError> {
        if self.version != CORPUS_VERSION {
            return Err(CorpusError::InvalidCorpus(format!(
                "unsupported version `{}`, expected `{CORPUS_VERSION}`",
                self.version
            )));
        }
        let mut seen = HashSet::new();
        let mut out = Vec::with_capacity(self.documents.len());
        for d in self.documents {
            if d.doc_id.is_empty() || !seen.insert(d.doc_id.clone()) {
                return Err(CorpusError::InvalidCorpus(format!(
                    "doc_id `{}` is empty or duplicated",
                    d.doc_id
                )));
            }
            out.push(d.into_judgment()?);
        }
        Ok(out)
    }
}

impl CorpusDocument {
    pub fn into_judgment(self) -> Result<JudgmentDoc, CorpusError> {
        let mut root = Section::default();
        for (i, sec) in self.sections.into_iter().enumerate() {
            let path = vec![i + 1];
            let mut segments = Vec::new();
            let heading = sec.heading.trim();
            let lines = (!heading.is_empty())
                .then_some((heading.to_string(), true))
                .into_iter()
                .chain(sec.paragraphs.into_iter().map(|p| (p, false)));
            for (text, is_heading) in lines {
                if text.trim().is_empty() {
                    return Err(CorpusError::InvalidCorpus(format!(
                        "{}: empty paragraph in section {}",
                        self.doc_id,
                        i + 1
                    )));
                }
                segments.push(Segment {
                    segment_id: segment_id(&self.doc_id, &path, segments.len()),
                    text,
                    is_heading,
                    section_path: path.clone(),
                });
            }
            root.children.push(Section {
                path,
                segments,
                children: Vec::new(),
            });
        }
        let gold = self.gold.map(|g| GoldAnnotations {
            nodes: g
                .nodes
                .into_iter()
                .map(|n| GoldNode {
                    segment_id: n.segment,
                    label: n.label,
                    text: n.text,
                    provision: n.provision,
                })
                .collect(),
            edges: g
                .edges
                .into_iter()
                .map(|e| GoldEdge {
                    kind: e.kind,
                    src: e.src,
                    dst: e.dst,
                })
                .collect(),
        });
        let doc = JudgmentDoc {
            doc_id: self.doc_id,
            case_overview: self.case_overview,
            root,
            gold,
        };
        if super::segments_in_reading_order(&doc).is_empty() {
            return Err(CorpusError::EmptyDocument(doc.doc_id));
        }
        doc.validate()?;
        Ok(doc)
    }
}

/// Parses an `lkg-corpus/1` file.
pub fn load_corpus(json: &str) -> Result<Vec<JudgmentDoc>, CorpusError> {
    let file: CorpusFile =
        serde_json::from_str(json).map_err(|e| CorpusError::InvalidCorpus(e.to_string()))?;
    file.into_judgments()
}
