//! Judgment documents: parsing raw sources into a section tree of segments, the
//! structured-JSON corpus format, and the seeded synthetic corpus generator.

mod format;
mod markup;
mod synth;

use std::collections::HashSet;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use format::{
    load_corpus, CorpusDocument, CorpusFile, CorpusSection, GoldEdgeRecord, GoldNodeRecord,
    CORPUS_VERSION,
};
pub use markup::strip_markup;
pub use synth::{statute_catalog, synth_corpus, synth_corpus_file, StatuteCatalogEntry, SynthParams};

use crate::schema::{EdgeKind, NodeLabel};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CorpusError {
    #[error("document `{0}` has no extractable text")]
    EmptyDocument(String),
    #[error("malformed markup in `{doc_id}` at byte {offset}: {reason}")]
    MalformedMarkup {
        doc_id: String,
        offset: usize,
        reason: String,
    },
    #[error("document `{0}` is not valid UTF-8")]
    InvalidUtf8(String),
    #[error("invalid corpus: {0}")]
    InvalidCorpus(String),
    #[error("invalid synthetic corpus parameters: {0}")]
    InvalidParams(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SourceKind {
    Markup,
    StructuredJson,
}

/// An unparsed judgment as it arrives from disk.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawDocument {
    pub doc_id: String,
    pub source_kind: SourceKind,
    pub text: String,
}

impl RawDocument {
    pub fn new(doc_id: impl Into<String>, source_kind: SourceKind, text: impl Into<String>) -> Self {
        Self {
            doc_id: doc_id.into(),
            source_kind,
            text: text.into(),
        }
    }

    pub fn from_bytes(
        doc_id: impl Into<String>,
        source_kind: SourceKind,
        bytes: Vec<u8>,
    ) -> Result<Self, CorpusError> {
        let doc_id = doc_id.into();
        let text = String::from_utf8(bytes).map_err(|_| CorpusError::InvalidUtf8(doc_id.clone()))?;
        Ok(Self {
            doc_id,
            source_kind,
            text,
        })
    }
}

/// One heading or paragraph of a judgment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub segment_id: String,
    pub text: String,
    pub is_heading: bool,
    /// 1-based indices of the enclosing sections, outermost first. Empty for the root.
    pub section_path: Vec<usize>,
}

/// A node of the section tree. The root has an empty path and no heading.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Section {
    pub path: Vec<usize>,
    /// Heading segment (if any) followed by body segments, in source order.
    pub segments: Vec<Segment>,
    pub children: Vec<Section>,
}

impl Section {
    pub fn heading(&self) -> Option<&Segment> {
        self.segments.first().filter(|s| s.is_heading)
    }

    pub fn body(&self) -> impl Iterator<Item = &Segment> {
        self.segments.iter().filter(|s| !s.is_heading)
    }

    /// Text of this section's own segments, one per line.
    pub fn text(&self) -> String {
        self.segments
            .iter()
            .map(|s| s.text.as_str())
            .collect::<Vec<_>>()
            .join("\n")
    }

    fn walk<'a>(&'a self, out: &mut Vec<&'a Section>) {
        out.push(self);
        for c in &self.children {
            c.walk(out);
        }
    }
}

/// A gold node annotation: a span of one segment with its label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldNode {
    pub segment_id: String,
    pub label: NodeLabel,
    pub text: String,
    /// Canonical provision string, set on Provision nodes whose canonical id is known.
    pub provision: Option<String>,
}

/// A gold edge between two gold nodes, by index into [`GoldAnnotations::nodes`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldEdge {
    pub kind: EdgeKind,
    pub src: usize,
    pub dst: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GoldAnnotations {
    pub nodes: Vec<GoldNode>,
    pub edges: Vec<GoldEdge>,
}

/// A parsed judgment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JudgmentDoc {
    pub doc_id: String,
    pub case_overview: String,
    pub root: Section,
    pub gold: Option<GoldAnnotations>,
}

impl JudgmentDoc {
    /// All sections in depth-first pre-order, root first.
    pub fn sections(&self) -> Vec<&Section> {
        let mut out = Vec::new();
        self.root.walk(&mut out);
        out
    }

    /// Non-root sections in pre-order.
    pub fn headed_sections(&self) -> Vec<&Section> {
        self.sections().into_iter().skip(1).collect()
    }

    pub fn section(&self, path: &[usize]) -> Option<&Section> {
        let mut cur = &self.root;
        for &i in path {
            cur = cur.children.get(i.checked_sub(1)?)?;
        }
        Some(cur)
    }

    pub fn segment(&self, segment_id: &str) -> Option<&Segment> {
        segments_in_reading_order(self)
            .into_iter()
            .find(|s| s.segment_id == segment_id)
    }

    /// Position of every segment in reading order.
    pub fn segment_positions(&self) -> std::collections::HashMap<&str, usize> {
        segments_in_reading_order(self)
            .into_iter()
            .enumerate()
            .map(|(i, s)| (s.segment_id.as_str(), i))
            .collect()
    }

    /// Checks structural invariants: unique segment ids, nonempty segment text,
    /// contiguous ordinals, resolvable gold annotations with valid edge signatures.
    pub fn validate(&self) -> Result<(), CorpusError> {
        let segs = segments_in_reading_order(self);
        let mut ids = HashSet::new();
        for s in &segs {
            if s.text.trim().is_empty() {
                return Err(CorpusError::InvalidCorpus(format!(
                    "segment `{}` has empty text",
                    s.segment_id
                )));
            }
            if !ids.insert(s.segment_id.as_str()) {
                return Err(CorpusError::InvalidCorpus(format!(
                    "duplicate segment id `{}`",
                    s.segment_id
                )));
            }
        }
        for sec in self.sections() {
            for (i, s) in sec.segments.iter().enumerate() {
                if s.segment_id != segment_id(&self.doc_id, &sec.path, i) {
                    return Err(CorpusError::InvalidCorpus(format!(
                        "segment `{}` breaks ordinal contiguity",
                        s.segment_id
                    )));
                }
            }
        }
        if let Some(gold) = &self.gold {
            for n in &gold.nodes {
                if !ids.contains(n.segment_id.as_str()) {
                    return Err(CorpusError::InvalidCorpus(format!(
                        "gold node references unknown segment `{}`",
                        n.segment_id
                    )));
                }
                if n.text.trim().is_empty() {
                    return Err(CorpusError::InvalidCorpus(format!(
                        "gold node in `{}` has empty text",
                        n.segment_id
                    )));
                }
            }
            for e in &gold.edges {
                let (src, dst) = match (gold.nodes.get(e.src), gold.nodes.get(e.dst)) {
                    (Some(s), Some(d)) => (s, d),
                    _ => {
                        return Err(CorpusError::InvalidCorpus(format!(
                            "gold edge {}→{} references a missing node",
                            e.src, e.dst
                        )))
                    }
                };
                if (src.label, dst.label) != e.kind.signature() {
                    return Err(CorpusError::InvalidCorpus(format!(
                        "gold edge {} has endpoints {}→{}",
                        e.kind, src.label, dst.label
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Segment identifier: `<doc_id>:<dotted section path, root = 0>:<ordinal>`.
pub fn segment_id(doc_id: &str, path: &[usize], ordinal: usize) -> String {
    let path = if path.is_empty() {
        "0".to_string()
    } else {
        path.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(".")
    };
    format!("{doc_id}:{path}:{ordinal}")
}

/// Depth-first pre-order flattening of all segments.
pub fn segments_in_reading_order(doc: &JudgmentDoc) -> Vec<&Segment> {
    doc.sections()
        .into_iter()
        .flat_map(|s| s.segments.iter())
        .collect()
}

/// Assigns a heading level to lines whose text matches `pattern`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelRule {
    pub pattern: String,
    pub level: u8,
}

/// Configuration of the heading detector and overview finder.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct HeadingHeuristics {
    /// Lines longer than this (in characters) are never headings.
    pub max_heading_chars: usize,
    /// A line ending in one of these characters reads as a sentence, not a heading.
    pub terminal_punctuation: Vec<char>,
    /// Leading enumerators that mark a heading even when the line ends in punctuation.
    pub leading_markers: Vec<String>,
    /// First matching rule decides the nesting level of a detected heading.
    pub level_rules: Vec<LevelRule>,
    /// Level for headings no rule matches.
    pub unmarked_level: u8,
    /// Case-insensitive patterns identifying the case-overview section heading.
    pub overview_patterns: Vec<String>,
}

impl Default for HeadingHeuristics {
    fn default() -> Self {
        Self {
            max_heading_chars: 60,
            terminal_punctuation: vec!['.', '。', '!', '?', '！', '？', ';', '；', ',', '、', ':', '：'],
            leading_markers: vec![
                r"^[(（][0-9０-９a-zA-Zア-ン一二三四五六七八九十]{1,3}[)）]".to_string(),
                r"^[0-9０-９]{1,3}\s*[.．]\s".to_string(),
                r"^第[0-9０-９一二三四五六七八九十百]+\s".to_string(),
            ],
            level_rules: vec![
                LevelRule {
                    pattern: r"^(第[0-9０-９一二三四五六七八九十百]+|[IVXLC]+\.\s|(Part|Chapter)\s+\d+)"
                        .to_string(),
                    level: 1,
                },
                LevelRule {
                    pattern: r"^[0-9０-９]{1,3}\s*[.．]".to_string(),
                    level: 2,
                },
                LevelRule {
                    pattern: r"^[(（][0-9０-９]{1,3}[)）]".to_string(),
                    level: 3,
                },
                LevelRule {
                    pattern: r"^[(（][a-zA-Zア-ン][)）]".to_string(),
                    level: 4,
                },
            ],
            unmarked_level: 2,
            overview_patterns: vec![
                r"case overview".to_string(),
                r"overview of the case".to_string(),
                r"summary of the case".to_string(),
                r"事案の概要".to_string(),
            ],
        }
    }
}

/// Compiled form of [`HeadingHeuristics`].
pub struct HeadingDetector {
    config: HeadingHeuristics,
    markers: Vec<Regex>,
    levels: Vec<(Regex, u8)>,
    overview: Vec<Regex>,
}

impl HeadingDetector {
    pub fn new(config: HeadingHeuristics) -> Result<Self, regex::Error> {
        let markers = config
            .leading_markers
            .iter()
            .map(|p| Regex::new(p))
            .collect::<Result<_, _>>()?;
        let levels = config
            .level_rules
            .iter()
            .map(|r| Regex::new(&r.pattern).map(|re| (re, r.level)))
            .collect::<Result<_, _>>()?;
        let overview = config
            .overview_patterns
            .iter()
            .map(|p| Regex::new(&format!("(?i){p}")))
            .collect::<Result<_, _>>()?;
        Ok(Self {
            config,
            markers,
            levels,
            overview,
        })
    }

    pub fn config(&self) -> &HeadingHeuristics {
        &self.config
    }

    /// Pure function of the line text and the configuration.
    pub fn is_heading(&self, line: &str) -> bool {
        let line = line.trim();
        if line.is_empty() || line.chars().count() > self.config.max_heading_chars {
            return false;
        }
        let unterminated = line
            .chars()
            .last()
            .is_some_and(|c| !self.config.terminal_punctuation.contains(&c));
        unterminated || self.markers.iter().any(|m| m.is_match(line))
    }

    pub fn level(&self, line: &str) -> u8 {
        let line = line.trim();
        self.levels
            .iter()
            .find(|(re, _)| re.is_match(line))
            .map_or(self.config.unmarked_level, |(_, l)| *l)
            .max(1)
    }

    pub fn is_overview_heading(&self, heading: &str) -> bool {
        self.overview.iter().any(|re| re.is_match(heading))
    }
}

/// Parses one raw judgment into a [`JudgmentDoc`].
pub fn parse_document(
    raw: &RawDocument,
    heuristics: &HeadingHeuristics,
) -> Result<JudgmentDoc, CorpusError> {
    let detector = HeadingDetector::new(heuristics.clone())
        .map_err(|e| CorpusError::InvalidCorpus(format!("bad heuristic pattern: {e}")))?;
    match raw.source_kind {
        SourceKind::Markup => markup::parse_markup(raw, &detector),
        SourceKind::StructuredJson => {
            let doc: CorpusDocument = serde_json::from_str(&raw.text)
                .map_err(|e| CorpusError::InvalidCorpus(format!("{}: {e}", raw.doc_id)))?;
            let mut parsed = doc.into_judgment()?;
            if parsed.doc_id.is_empty() {
                parsed.doc_id = raw.doc_id.clone();
            }
            if parsed.case_overview.is_empty() {
                parsed.case_overview = overview_from_sections(&parsed, &detector);
            }
            Ok(parsed)
        }
    }
}

/// Body text of the first section whose heading matches an overview pattern.
pub(crate) fn overview_from_sections(doc: &JudgmentDoc, detector: &HeadingDetector) -> String {
    fn subtree_body(sec: &Section, out: &mut Vec<String>) {
        out.extend(sec.body().map(|s| s.text.clone()));
        for c in &sec.children {
            subtree_body(c, out);
        }
    }
    for sec in doc.headed_sections() {
        if sec
            .heading()
            .is_some_and(|h| detector.is_overview_heading(&h.text))
        {
            let mut lines = Vec::new();
            subtree_body(sec, &mut lines);
            return lines.join("\n");
        }
    }
    String::new()
}
