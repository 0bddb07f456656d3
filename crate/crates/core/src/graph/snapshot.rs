//! Compact single-file snapshot, the service's load format.

use serde::{Deserialize, Serialize};

use super::{GraphError, LkgGraph, LkgNode};
use crate::schema::{EdgeKind, Provenance};
use crate::text::sha256_hex;

pub const SNAPSHOT_VERSION: &str = "lkg-graph/1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnapshotEdge {
    pub kind: EdgeKind,
    pub src: usize,
    pub dst: usize,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphSnapshot {
    pub version: String,
    /// Hash of the node and edge lists; lets indexes detect a stale graph.
    pub fingerprint: String,
    pub nodes: Vec<LkgNode>,
    pub edges: Vec<SnapshotEdge>,
}

fn fingerprint(nodes: &[LkgNode], edges: &[SnapshotEdge]) -> String {
    let body = serde_json::to_vec(&(nodes, edges)).expect("snapshot serializes");
    sha256_hex(&body, 16)
}

impl GraphSnapshot {
    pub fn from_graph(g: &LkgGraph) -> Self {
        let nodes = g.nodes().to_vec();
        let edges: Vec<SnapshotEdge> = g
            .edges()
            .iter()
            .map(|e| SnapshotEdge {
                kind: e.kind,
                src: g.index_of(&e.src).expect("src"),
                dst: g.index_of(&e.dst).expect("dst"),
                provenance: e.provenance,
            })
            .collect();
        Self {
            version: SNAPSHOT_VERSION.into(),
            fingerprint: fingerprint(&nodes, &edges),
            nodes,
            edges,
        }
    }

    pub fn into_graph(self) -> Result<LkgGraph, GraphError> {
        if self.version != SNAPSHOT_VERSION {
            return Err(GraphError::InvalidSnapshot(format!(
                "version `{}`, expected `{SNAPSHOT_VERSION}`",
                self.version
            )));
        }
        if fingerprint(&self.nodes, &self.edges) != self.fingerprint {
            return Err(GraphError::InvalidSnapshot("fingerprint mismatch".into()));
        }
        let mut g = LkgGraph::new();
        let mut ids = Vec::with_capacity(self.nodes.len());
        for n in self.nodes {
            let want = n.node_id.clone();
            let got = g.add_node(n)?;
            if got != want {
                return Err(GraphError::DuplicateNodeId(want));
            }
            ids.push(got);
        }
        for e in self.edges {
            let endpoint = |i: usize| {
                ids.get(i)
                    .ok_or_else(|| GraphError::InvalidSnapshot(format!("edge endpoint {i} out of range")))
            };
            g.add_edge(e.kind, endpoint(e.src)?, endpoint(e.dst)?, e.provenance)?;
        }
        Ok(g)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("snapshot serializes")
    }

    pub fn from_json(json: &str) -> Result<Self, GraphError> {
        serde_json::from_str(json).map_err(|e| GraphError::InvalidSnapshot(e.to_string()))
    }
}

impl LkgGraph {
    pub fn fingerprint(&self) -> String {
        GraphSnapshot::from_graph(self).fingerprint
    }
}
