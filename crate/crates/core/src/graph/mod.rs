//! The typed multigraph of Fact, Provision, LegalNorm and LegalApplication nodes.
//!
//! Edges are stored in reasoning direction (Provision→Norm, Norm→Application,
//! Fact→Application). A single segment may host several nodes; an edge between two
//! nodes of the same segment is a *segment self-loop*.
//!
//! Building is single-writer through [`LkgGraph`]; [`LkgGraph::freeze`] yields a
//! cheaply clonable read-only [`FrozenGraph`] on which statistics and traversal run.

mod jsonld;
mod paths;
mod snapshot;
mod stats;

use std::collections::{HashMap, HashSet};
use std::ops::Deref;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::normalize::ProvisionId;
use crate::schema::{EdgeKind, NodeLabel, Provenance};
use crate::text::sha256_hex;

pub use jsonld::{export_jsonld, import_jsonld, jsonld_context, schema_jsonld, DERIVES_NORM_FLAG};
pub use paths::ReasoningPath;
pub use snapshot::{GraphSnapshot, SNAPSHOT_VERSION};
pub use stats::{density, EdgeKindStats, GraphStats, NetworkStats, NodeLabelStats};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("{kind} requires {expected_src:?} → {expected_dst:?}, got {src:?} → {dst:?}")]
    LabelMismatch {
        kind: EdgeKind,
        expected_src: NodeLabel,
        expected_dst: NodeLabel,
        src: NodeLabel,
        dst: NodeLabel,
    },
    #[error("unknown edge endpoint `{0}`")]
    UnknownEndpoint(String),
    #[error("edge crosses documents: `{src_doc}` → `{dst_doc}`")]
    CrossDocumentEdge { src_doc: String, dst_doc: String },
    #[error("invalid node: {0}")]
    InvalidNode(String),
    #[error("node id `{0}` already names a different node")]
    DuplicateNodeId(String),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("node `{id}` is a {actual}, expected {expected}")]
    WrongLabel {
        id: String,
        expected: NodeLabel,
        actual: NodeLabel,
    },
    #[error("schema violation: {0}")]
    SchemaViolation(String),
    #[error("invalid snapshot: {0}")]
    InvalidSnapshot(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LkgNode {
    pub node_id: String,
    pub label: NodeLabel,
    pub text: String,
    pub doc_id: String,
    pub segment_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provision: Option<ProvisionId>,
    pub provenance: Provenance,
}

impl LkgNode {
    /// Builds a node whose id is derived from its identity key. Provision nodes are keyed
    /// by canonical id, the rest by text.
    pub fn new(
        doc_id: impl Into<String>,
        segment_id: impl Into<String>,
        label: NodeLabel,
        text: impl Into<String>,
        provision: Option<ProvisionId>,
        provenance: Provenance,
    ) -> Self {
        let mut n = Self {
            node_id: String::new(),
            label,
            text: text.into(),
            doc_id: doc_id.into(),
            segment_id: segment_id.into(),
            provision,
            provenance,
        };
        n.node_id = format!(
            "{}#{}-{}",
            n.segment_id,
            label.id_tag(),
            sha256_hex(n.identity_text().as_bytes(), 8)
        );
        n
    }

    fn identity_text(&self) -> String {
        match (&self.provision, self.label) {
            (Some(p), NodeLabel::Provision) => p.canonical_string(),
            _ => self.text.clone(),
        }
    }

    fn identity(&self) -> (String, String, NodeLabel, String) {
        (
            self.doc_id.clone(),
            self.segment_id.clone(),
            self.label,
            self.identity_text(),
        )
    }

    fn validate(&self) -> Result<(), GraphError> {
        if self.node_id.is_empty() || self.doc_id.is_empty() || self.segment_id.is_empty() {
            return Err(GraphError::InvalidNode(
                "node_id, doc_id and segment_id must be nonempty".into(),
            ));
        }
        match (self.label, &self.provision) {
            (NodeLabel::Provision, None) => Err(GraphError::InvalidNode(format!(
                "Provision node `{}` lacks a resolved provision",
                self.node_id
            ))),
            (NodeLabel::Provision, Some(p)) => p
                .validate()
                .map_err(|e| GraphError::InvalidNode(e.to_string())),
            (_, Some(_)) => Err(GraphError::InvalidNode(format!(
                "only Provision nodes carry a provision (`{}`)",
                self.node_id
            ))),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LkgEdge {
    pub edge_id: String,
    pub kind: EdgeKind,
    pub src: String,
    pub dst: String,
    pub doc_id: String,
    pub provenance: Provenance,
}

/// Mutable graph under construction.
#[derive(Debug, Clone, Default)]
pub struct LkgGraph {
    nodes: Vec<LkgNode>,
    by_id: HashMap<String, usize>,
    by_identity: HashMap<(String, String, NodeLabel, String), usize>,
    edges: Vec<LkgEdge>,
    out_edges: Vec<Vec<usize>>,
    in_edges: Vec<Vec<usize>>,
}

impl LkgGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts a node, or returns the id of the identical node already present.
    pub fn add_node(&mut self, node: LkgNode) -> Result<String, GraphError> {
        node.validate()?;
        if let Some(&i) = self.by_identity.get(&node.identity()) {
            return Ok(self.nodes[i].node_id.clone());
        }
        if self.by_id.contains_key(&node.node_id) {
            return Err(GraphError::DuplicateNodeId(node.node_id));
        }
        let i = self.nodes.len();
        self.by_identity.insert(node.identity(), i);
        self.by_id.insert(node.node_id.clone(), i);
        self.nodes.push(node);
        self.out_edges.push(Vec::new());
        self.in_edges.push(Vec::new());
        Ok(self.nodes[i].node_id.clone())
    }

    /// Inserts an edge. Parallel edges are kept.
    pub fn add_edge(
        &mut self,
        kind: EdgeKind,
        src: &str,
        dst: &str,
        provenance: Provenance,
    ) -> Result<String, GraphError> {
        let s = *self
            .by_id
            .get(src)
            .ok_or_else(|| GraphError::UnknownEndpoint(src.to_string()))?;
        let d = *self
            .by_id
            .get(dst)
            .ok_or_else(|| GraphError::UnknownEndpoint(dst.to_string()))?;
        let (es, ed) = kind.signature();
        let (sl, dl) = (self.nodes[s].label, self.nodes[d].label);
        if (sl, dl) != (es, ed) {
            return Err(GraphError::LabelMismatch {
                kind,
                expected_src: es,
                expected_dst: ed,
                src: sl,
                dst: dl,
            });
        }
        if self.nodes[s].doc_id != self.nodes[d].doc_id {
            return Err(GraphError::CrossDocumentEdge {
                src_doc: self.nodes[s].doc_id.clone(),
                dst_doc: self.nodes[d].doc_id.clone(),
            });
        }
        let e = self.edges.len();
        let edge_id = format!("e{e}");
        self.edges.push(LkgEdge {
            edge_id: edge_id.clone(),
            kind,
            src: src.to_string(),
            dst: dst.to_string(),
            doc_id: self.nodes[s].doc_id.clone(),
            provenance,
        });
        self.out_edges[s].push(e);
        self.in_edges[d].push(e);
        Ok(edge_id)
    }

    pub fn nodes(&self) -> &[LkgNode] {
        &self.nodes
    }

    pub fn edges(&self) -> &[LkgEdge] {
        &self.edges
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, node_id: &str) -> Option<&LkgNode> {
        self.by_id.get(node_id).map(|&i| &self.nodes[i])
    }

    pub(crate) fn index_of(&self, node_id: &str) -> Option<usize> {
        self.by_id.get(node_id).copied()
    }

    pub fn out_edges(&self, node_id: &str) -> impl Iterator<Item = &LkgEdge> {
        self.adjacent(node_id, &self.out_edges)
    }

    pub fn in_edges(&self, node_id: &str) -> impl Iterator<Item = &LkgEdge> {
        self.adjacent(node_id, &self.in_edges)
    }

    fn adjacent<'a>(&'a self, node_id: &str, adj: &'a [Vec<usize>]) -> impl Iterator<Item = &'a LkgEdge> {
        self.by_id
            .get(node_id)
            .map(|&i| adj[i].as_slice())
            .unwrap_or(&[])
            .iter()
            .map(|&e| &self.edges[e])
    }

    pub fn nodes_with_label(&self, label: NodeLabel) -> impl Iterator<Item = &LkgNode> {
        self.nodes.iter().filter(move |n| n.label == label)
    }

    pub fn doc_ids(&self) -> Vec<&str> {
        let mut seen = HashSet::new();
        self.nodes
            .iter()
            .map(|n| n.doc_id.as_str())
            .filter(|d| seen.insert(*d))
            .collect()
    }

    /// Appends every node and edge of `other`. Edge ids are reassigned.
    pub fn merge(&mut self, other: &LkgGraph) -> Result<(), GraphError> {
        for n in &other.nodes {
            self.add_node(n.clone())?;
        }
        for e in &other.edges {
            self.add_edge(e.kind, &e.src, &e.dst, e.provenance)?;
        }
        Ok(())
    }

    pub fn freeze(self) -> FrozenGraph {
        FrozenGraph(Arc::new(self))
    }

    /// Checks the graph-wide invariants: label signatures, Provision in-degree 0,
    /// intra-document edges, and no cycle reaching beyond a single segment.
    pub fn check_invariants(&self) -> Result<(), GraphError> {
        for e in &self.edges {
            let s = self.node(&e.src).ok_or_else(|| GraphError::UnknownEndpoint(e.src.clone()))?;
            let d = self.node(&e.dst).ok_or_else(|| GraphError::UnknownEndpoint(e.dst.clone()))?;
            let (es, ed) = e.kind.signature();
            if (s.label, d.label) != (es, ed) {
                return Err(GraphError::LabelMismatch {
                    kind: e.kind,
                    expected_src: es,
                    expected_dst: ed,
                    src: s.label,
                    dst: d.label,
                });
            }
            if s.doc_id != d.doc_id {
                return Err(GraphError::CrossDocumentEdge {
                    src_doc: s.doc_id.clone(),
                    dst_doc: d.doc_id.clone(),
                });
            }
            if d.label == NodeLabel::Provision && EdgeKind::CANONICAL.contains(&e.kind) {
                return Err(GraphError::SchemaViolation(format!("edge into Provision `{}`", d.node_id)));
            }
        }
        if let Some(seg) = self.segment_cycle() {
            return Err(GraphError::SchemaViolation(format!(
                "cycle through segment `{seg}` spans several segments"
            )));
        }
        Ok(())
    }

    /// A segment whose node shares a cycle with a node of another segment, if any.
    /// Cycles confined to one segment (including self-loops) are allowed.
    fn segment_cycle(&self) -> Option<String> {
        let n = self.nodes.len();
        // Kosaraju: finish order on the forward graph, then components on the reverse.
        let mut order = Vec::with_capacity(n);
        let mut seen = vec![false; n];
        for root in 0..n {
            if seen[root] {
                continue;
            }
            seen[root] = true;
            let mut stack = vec![(root, 0usize)];
            while let Some((v, i)) = stack.pop() {
                if let Some(&e) = self.out_edges[v].get(i) {
                    stack.push((v, i + 1));
                    let w = self.by_id[&self.edges[e].dst];
                    if !seen[w] {
                        seen[w] = true;
                        stack.push((w, 0));
                    }
                } else {
                    order.push(v);
                }
            }
        }
        let mut comp = vec![usize::MAX; n];
        for (c, &root) in order.iter().rev().enumerate() {
            if comp[root] != usize::MAX {
                continue;
            }
            comp[root] = c;
            let mut stack = vec![root];
            while let Some(v) = stack.pop() {
                if self.nodes[v].segment_id != self.nodes[root].segment_id {
                    return Some(self.nodes[root].segment_id.clone());
                }
                for &e in &self.in_edges[v] {
                    let u = self.by_id[&self.edges[e].src];
                    if comp[u] == usize::MAX {
                        comp[u] = c;
                        stack.push(u);
                    }
                }
            }
        }
        None
    }
}

/// Immutable, shareable graph snapshot.
#[derive(Debug, Clone, Default)]
pub struct FrozenGraph(Arc<LkgGraph>);

impl Deref for FrozenGraph {
    type Target = LkgGraph;

    fn deref(&self) -> &LkgGraph {
        &self.0
    }
}

impl FrozenGraph {
    /// A mutable copy for further building.
    pub fn thaw(&self) -> LkgGraph {
        (*self.0).clone()
    }

    pub fn stats(&self) -> GraphStats {
        GraphStats::compute(self)
    }
}
