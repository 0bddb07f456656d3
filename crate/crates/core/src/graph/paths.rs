//! Fact → Application ← Norm ← Provision chains.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::{GraphError, LkgGraph};
use crate::schema::{EdgeKind, NodeLabel};

/// One reasoning chain starting at a fact. `norm` and `provision` are `None` only in
/// partial chains.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ReasoningPath {
    pub fact: String,
    pub application: String,
    pub norm: Option<String>,
    pub provision: Option<String>,
}

impl ReasoningPath {
    pub fn is_complete(&self) -> bool {
        self.norm.is_some() && self.provision.is_some()
    }

    /// Node ids in chain order.
    pub fn node_ids(&self) -> Vec<&str> {
        [Some(&self.fact), Some(&self.application), self.norm.as_ref(), self.provision.as_ref()]
            .into_iter()
            .flatten()
            .map(String::as_str)
            .collect()
    }
}

impl LkgGraph {
    /// Enumerates up to `limit` distinct chains from `fact`: ToFact out to applications,
    /// AppliesNorm back to norms, DerivesNorm back to provisions. Chains that stop early
    /// are returned only when `include_partial` is set.
    pub fn reasoning_paths(
        &self,
        fact: &str,
        limit: usize,
        include_partial: bool,
    ) -> Result<Vec<ReasoningPath>, GraphError> {
        let node = self
            .node(fact)
            .ok_or_else(|| GraphError::UnknownNode(fact.to_string()))?;
        if node.label != NodeLabel::Fact {
            return Err(GraphError::WrongLabel {
                id: fact.to_string(),
                expected: NodeLabel::Fact,
                actual: node.label,
            });
        }
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        let mut push = |p: ReasoningPath, out: &mut Vec<ReasoningPath>| {
            if out.len() < limit && seen.insert(p.clone()) {
                out.push(p);
            }
        };
        for to_fact in self.out_edges(fact).filter(|e| e.kind == EdgeKind::ToFact) {
            let app = &to_fact.dst;
            let mut any_norm = false;
            for applies in self.in_edges(app).filter(|e| e.kind == EdgeKind::AppliesNorm) {
                any_norm = true;
                let norm = &applies.src;
                let mut any_prov = false;
                for derives in self.in_edges(norm).filter(|e| e.kind == EdgeKind::DerivesNorm) {
                    any_prov = true;
                    push(
                        ReasoningPath {
                            fact: fact.to_string(),
                            application: app.clone(),
                            norm: Some(norm.clone()),
                            provision: Some(derives.src.clone()),
                        },
                        &mut out,
                    );
                }
                if !any_prov && include_partial {
                    push(
                        ReasoningPath {
                            fact: fact.to_string(),
                            application: app.clone(),
                            norm: Some(norm.clone()),
                            provision: None,
                        },
                        &mut out,
                    );
                }
            }
            if !any_norm && include_partial {
                push(
                    ReasoningPath {
                        fact: fact.to_string(),
                        application: app.clone(),
                        norm: None,
                        provision: None,
                    },
                    &mut out,
                );
            }
            if out.len() >= limit {
                break;
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::tests::node;
    use crate::schema::Provenance;

    #[test]
    fn single_chain() {
        let mut g = LkgGraph::new();
        let p = g.add_node(node("d", "d:1:1", NodeLabel::Provision, "p")).unwrap();
        let n = g.add_node(node("d", "d:1:2", NodeLabel::LegalNorm, "n")).unwrap();
        let a = g.add_node(node("d", "d:2:1", NodeLabel::LegalApplication, "a")).unwrap();
        let f = g.add_node(node("d", "d:3:1", NodeLabel::Fact, "f")).unwrap();
        let lonely = g.add_node(node("d", "d:3:2", NodeLabel::Fact, "g")).unwrap();
        g.add_edge(EdgeKind::DerivesNorm, &p, &n, Provenance::Oracle).unwrap();
        g.add_edge(EdgeKind::AppliesNorm, &n, &a, Provenance::Oracle).unwrap();
        g.add_edge(EdgeKind::ToFact, &f, &a, Provenance::Oracle).unwrap();
        g.add_edge(EdgeKind::ToFact, &f, &a, Provenance::Oracle).unwrap();
        let paths = g.reasoning_paths(&f, 10, false).unwrap();
        assert_eq!(paths.len(), 1);
        assert_eq!(paths[0].node_ids(), [f.as_str(), &a, &n, &p]);
        assert!(g.reasoning_paths(&lonely, 10, true).unwrap().is_empty());
        assert!(matches!(g.reasoning_paths(&a, 1, false), Err(GraphError::WrongLabel { .. })));
        assert!(matches!(g.reasoning_paths("x", 1, false), Err(GraphError::UnknownNode(_))));
    }

    #[test]
    fn partial_chains_are_opt_in() {
        let mut g = LkgGraph::new();
        let a = g.add_node(node("d", "d:2:1", NodeLabel::LegalApplication, "a")).unwrap();
        let f = g.add_node(node("d", "d:3:1", NodeLabel::Fact, "f")).unwrap();
        g.add_edge(EdgeKind::ToFact, &f, &a, Provenance::Oracle).unwrap();
        assert!(g.reasoning_paths(&f, 10, false).unwrap().is_empty());
        let partial = g.reasoning_paths(&f, 10, true).unwrap();
        assert_eq!(partial.len(), 1);
        assert!(!partial[0].is_complete());
    }
}
