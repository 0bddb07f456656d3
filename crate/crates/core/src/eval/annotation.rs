//! Extraction quality against reference annotations: per-category TP/FP/FN for nodes
//! and for edges.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{f1, ratio, EvalError};
use crate::corpus::JudgmentDoc;
use crate::graph::LkgGraph;
use crate::schema::{EdgeKind, NodeLabel};
use crate::text::token_overlap;

/// Minimum [`token_overlap`] for a system span to match a reference span.
pub const DEFAULT_MATCH_THRESHOLD: f64 = 0.8;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedNode {
    pub doc_id: String,
    pub segment_id: String,
    pub label: NodeLabel,
    pub text: String,
}

/// Endpoints index into the owning set's `nodes`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedEdge {
    pub kind: EdgeKind,
    pub src: usize,
    pub dst: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationSet {
    pub nodes: Vec<AnnotatedNode>,
    pub edges: Vec<AnnotatedEdge>,
}

impl AnnotationSet {
    pub fn from_graph(g: &LkgGraph) -> Self {
        let pos: HashMap<&str, usize> = g.nodes().iter().enumerate().map(|(i, n)| (n.node_id.as_str(), i)).collect();
        Self {
            nodes: g
                .nodes()
                .iter()
                .map(|n| AnnotatedNode {
                    doc_id: n.doc_id.clone(),
                    segment_id: n.segment_id.clone(),
                    label: n.label,
                    text: n.text.clone(),
                })
                .collect(),
            edges: g
                .edges()
                .iter()
                .map(|e| AnnotatedEdge {
                    kind: e.kind,
                    src: pos[e.src.as_str()],
                    dst: pos[e.dst.as_str()],
                })
                .collect(),
        }
    }

    /// The gold annotations of `docs`, concatenated.
    pub fn from_gold(docs: &[JudgmentDoc]) -> Self {
        let mut out = Self::default();
        for d in docs {
            let Some(g) = &d.gold else { continue };
            let base = out.nodes.len();
            out.nodes.extend(g.nodes.iter().map(|n| AnnotatedNode {
                doc_id: d.doc_id.clone(),
                segment_id: n.segment_id.clone(),
                label: n.label,
                text: n.text.clone(),
            }));
            out.edges.extend(g.edges.iter().map(|e| AnnotatedEdge {
                kind: e.kind,
                src: base + e.src,
                dst: base + e.dst,
            }));
        }
        out
    }

    fn doc_ids(&self) -> BTreeSet<&str> {
        self.nodes.iter().map(|n| n.doc_id.as_str()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryRow {
    pub category: String,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl CategoryRow {
    fn new(category: &str, tp: usize, fp: usize, fn_: usize) -> Self {
        let (p, r) = (ratio(tp, tp + fp), ratio(tp, tp + fn_));
        Self {
            category: category.to_string(),
            tp,
            fp,
            fn_,
            precision: p,
            recall: r,
            f1: f1(p, r),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationReport {
    pub nodes: Vec<CategoryRow>,
    pub edges: Vec<CategoryRow>,
}

fn render_rows(out: &mut String, head: &str, rows: &[CategoryRow]) {
    let _ = writeln!(out, "{head:<22} {:>6} {:>6} {:>6} {:>9} {:>9} {:>9}", "TP", "FP", "FN", "Precision", "Recall", "F1");
    for r in rows {
        let _ = writeln!(
            out,
            "{:<22} {:>6} {:>6} {:>6} {:>9.4} {:>9.4} {:>9.4}",
            r.category, r.tp, r.fp, r.fn_, r.precision, r.recall, r.f1
        );
    }
}

impl AnnotationReport {
    /// Node table followed by the edge table.
    pub fn render(&self) -> String {
        let mut out = String::new();
        render_rows(&mut out, "Node Type", &self.nodes);
        out.push('\n');
        render_rows(&mut out, "Edge Type", &self.edges);
        out
    }
}

/// One-to-one node matching: same document, segment and label with text overlap of at
/// least `threshold`, best overlaps first. Returns system index → reference index.
fn match_nodes(system: &AnnotationSet, reference: &AnnotationSet, threshold: f64) -> HashMap<usize, usize> {
    let mut by_key: HashMap<(&str, &str, NodeLabel), Vec<usize>> = HashMap::new();
    for (i, n) in reference.nodes.iter().enumerate() {
        by_key.entry((&n.doc_id, &n.segment_id, n.label)).or_default().push(i);
    }
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (j, s) in system.nodes.iter().enumerate() {
        for &i in by_key.get(&(s.doc_id.as_str(), s.segment_id.as_str(), s.label)).into_iter().flatten() {
            let o = token_overlap(&s.text, &reference.nodes[i].text);
            if o >= threshold {
                pairs.push((o, j, i));
            }
        }
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut sys_to_ref = HashMap::new();
    let mut taken = vec![false; reference.nodes.len()];
    for (_, j, i) in pairs {
        if !taken[i] && !sys_to_ref.contains_key(&j) {
            taken[i] = true;
            sys_to_ref.insert(j, i);
        }
    }
    sys_to_ref
}

/// Compares a system annotation set against a reference. Every document the system
/// covers must appear in the reference.
pub fn compare_annotations(
    system: &AnnotationSet,
    reference: &AnnotationSet,
    threshold: f64,
) -> Result<AnnotationReport, EvalError> {
    let (sd, rd) = (system.doc_ids(), reference.doc_ids());
    let extra: Vec<&&str> = sd.difference(&rd).collect();
    if !extra.is_empty() {
        return Err(EvalError::DocumentMismatch(format!("system-only documents {extra:?}")));
    }
    let m = match_nodes(system, reference, threshold);
    let nodes = NodeLabel::ALL
        .iter()
        .map(|&label| {
            let sys = system.nodes.iter().filter(|n| n.label == label).count();
            let refs = reference.nodes.iter().filter(|n| n.label == label).count();
            let tp = m.iter().filter(|(&j, _)| system.nodes[j].label == label).count();
            CategoryRow::new(label.short_name(), tp, sys - tp, refs - tp)
        })
        .collect();
    let mut remaining: HashMap<(EdgeKind, usize, usize), usize> = HashMap::new();
    for e in &reference.edges {
        *remaining.entry((e.kind, e.src, e.dst)).or_default() += 1;
    }
    let edges = EdgeKind::CANONICAL
        .iter()
        .map(|&kind| {
            let (mut tp, mut fp) = (0, 0);
            for e in system.edges.iter().filter(|e| e.kind == kind) {
                let key = m.get(&e.src).zip(m.get(&e.dst)).map(|(&s, &d)| (kind, s, d));
                match key.and_then(|k| remaining.get_mut(&k)).filter(|c| **c > 0) {
                    Some(c) => {
                        *c -= 1;
                        tp += 1;
                    }
                    None => fp += 1,
                }
            }
            let refs = reference.edges.iter().filter(|e| e.kind == kind).count();
            CategoryRow::new(kind.arrow_name(), tp, fp, refs - tp)
        })
        .collect();
    Ok(AnnotationReport { nodes, edges })
}
