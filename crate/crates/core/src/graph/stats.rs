//! Per-label, per-kind and network statistics.
//!
//! Conventions: parallel edges each count toward degree; an edge whose endpoints share a
//! segment is a segment self-loop and is tallied under both endpoint labels (once when
//! both labels coincide). Standard deviations are population deviations.

use std::collections::{HashSet, VecDeque};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::LkgGraph;
use crate::schema::{EdgeKind, NodeLabel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeLabelStats {
    pub label: NodeLabel,
    pub nodes: usize,
    pub avg_in_degree: f64,
    pub avg_out_degree: f64,
    pub self_loops: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeKindStats {
    pub kind: EdgeKind,
    pub edges: usize,
    pub distinct_pairs: usize,
    pub avg_multiplicity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkStats {
    pub nodes: usize,
    pub edges: usize,
    pub wcc_count: usize,
    pub wcc_diameter_ge2: usize,
    /// Mean diameter over components with diameter at least 2.
    pub mean_diameter: f64,
    pub std_diameter: f64,
    /// Population deviation of total (in + out) degree.
    pub std_degree: f64,
    pub density: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphStats {
    pub nodes: Vec<NodeLabelStats>,
    pub edges: Vec<EdgeKindStats>,
    pub network: NetworkStats,
}

/// `E / (N (N − 1))`, or 0 when `N < 2`.
pub fn density(nodes: usize, edges: usize) -> f64 {
    if nodes < 2 {
        return 0.0;
    }
    edges as f64 / (nodes as f64 * (nodes as f64 - 1.0))
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

impl LkgGraph {
    pub fn node_stats(&self) -> Vec<NodeLabelStats> {
        let mut rows: Vec<NodeLabelStats> = NodeLabel::ALL
            .iter()
            .map(|&label| NodeLabelStats {
                label,
                nodes: 0,
                avg_in_degree: 0.0,
                avg_out_degree: 0.0,
                self_loops: 0,
            })
            .collect();
        let row = |label: NodeLabel| NodeLabel::ALL.iter().position(|&l| l == label).expect("label");
        let mut indeg = [0usize; 4];
        let mut outdeg = [0usize; 4];
        for n in self.nodes() {
            rows[row(n.label)].nodes += 1;
        }
        for e in self.edges() {
            let (s, d) = (self.node(&e.src).expect("src"), self.node(&e.dst).expect("dst"));
            outdeg[row(s.label)] += 1;
            indeg[row(d.label)] += 1;
            if s.segment_id == d.segment_id {
                rows[row(s.label)].self_loops += 1;
                if d.label != s.label {
                    rows[row(d.label)].self_loops += 1;
                }
            }
        }
        for (i, r) in rows.iter_mut().enumerate() {
            if r.nodes > 0 {
                r.avg_in_degree = indeg[i] as f64 / r.nodes as f64;
                r.avg_out_degree = outdeg[i] as f64 / r.nodes as f64;
            }
        }
        rows
    }

    pub fn edge_stats(&self) -> Vec<EdgeKindStats> {
        EdgeKind::all()
            .into_iter()
            .map(|kind| {
                let mut pairs = HashSet::new();
                let mut edges = 0;
                for e in self.edges().iter().filter(|e| e.kind == kind) {
                    edges += 1;
                    pairs.insert((e.src.as_str(), e.dst.as_str()));
                }
                EdgeKindStats {
                    kind,
                    edges,
                    distinct_pairs: pairs.len(),
                    avg_multiplicity: if pairs.is_empty() {
                        0.0
                    } else {
                        edges as f64 / pairs.len() as f64
                    },
                }
            })
            .collect()
    }

    /// Undirected adjacency lists by node index.
    pub(crate) fn undirected_adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.node_count()];
        for e in self.edges() {
            let s = self.index_of(&e.src).expect("src");
            let d = self.index_of(&e.dst).expect("dst");
            if s != d {
                adj[s].push(d);
                adj[d].push(s);
            }
        }
        for a in &mut adj {
            a.sort_unstable();
            a.dedup();
        }
        adj
    }

    /// Weakly connected components as sorted node-index lists.
    pub fn weakly_connected_components(&self) -> Vec<Vec<usize>> {
        let adj = self.undirected_adjacency();
        let mut comp = vec![usize::MAX; adj.len()];
        let mut out = Vec::new();
        for start in 0..adj.len() {
            if comp[start] != usize::MAX {
                continue;
            }
            let c = out.len();
            let mut members = vec![start];
            comp[start] = c;
            let mut i = 0;
            while i < members.len() {
                for &w in &adj[members[i]] {
                    if comp[w] == usize::MAX {
                        comp[w] = c;
                        members.push(w);
                    }
                }
                i += 1;
            }
            members.sort_unstable();
            out.push(members);
        }
        out
    }

    pub fn network_stats(&self) -> NetworkStats {
        let adj = self.undirected_adjacency();
        let comps = self.weakly_connected_components();
        let diameters: Vec<f64> = comps
            .iter()
            .map(|c| component_diameter(&adj, c) as f64)
            .filter(|&d| d >= 2.0)
            .collect();
        let (mean_diameter, std_diameter) = mean_std(&diameters);
        let mut degree = vec![0.0f64; self.node_count()];
        for e in self.edges() {
            degree[self.index_of(&e.src).expect("src")] += 1.0;
            degree[self.index_of(&e.dst).expect("dst")] += 1.0;
        }
        NetworkStats {
            nodes: self.node_count(),
            edges: self.edge_count(),
            wcc_count: comps.len(),
            wcc_diameter_ge2: diameters.len(),
            mean_diameter,
            std_diameter,
            std_degree: mean_std(&degree).1,
            density: density(self.node_count(), self.edge_count()),
        }
    }
}

/// Longest shortest path (in hops) within one component, by BFS from every member.
fn component_diameter(adj: &[Vec<usize>], members: &[usize]) -> usize {
    let mut best = 0;
    let mut dist = vec![usize::MAX; adj.len()];
    for &s in members {
        for &m in members {
            dist[m] = usize::MAX;
        }
        dist[s] = 0;
        let mut q = VecDeque::from([s]);
        while let Some(v) = q.pop_front() {
            best = best.max(dist[v]);
            for &w in &adj[v] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    q.push_back(w);
                }
            }
        }
    }
    best
}

impl GraphStats {
    pub fn compute(g: &LkgGraph) -> Self {
        Self {
            nodes: g.node_stats(),
            edges: g.edge_stats(),
            network: g.network_stats(),
        }
    }

    /// Three plain-text tables: by node class, by edge type, network level.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<13} {:>9} {:>15} {:>16} {:>13}",
            "Node Type", "# Nodes", "Avg In-Degree", "Avg Out-Degree", "# Self-Loops"
        );
        for r in &self.nodes {
            let _ = writeln!(
                s,
                "{:<13} {:>9} {:>15.2} {:>16.2} {:>13}",
                r.label.short_name(),
                r.nodes,
                r.avg_in_degree,
                r.avg_out_degree,
                r.self_loops
            );
        }
        s.push('\n');
        let _ = writeln!(s, "{:<22} {:>9} {:>18}", "Edge Type", "# Edges", "Avg Multiplicity");
        for r in &self.edges {
            let _ = writeln!(
                s,
                "{:<22} {:>9} {:>18.2}",
                r.kind.arrow_name(),
                r.edges,
                r.avg_multiplicity
            );
        }
        s.push('\n');
        let n = &self.network;
        let rows = [
            ("Number of Nodes", n.nodes.to_string()),
            ("Number of Edges", n.edges.to_string()),
            ("Number of WCCs", n.wcc_count.to_string()),
            ("Number of WCCs with diameter >= 2", n.wcc_diameter_ge2.to_string()),
            ("Avg. Diameter of WCCs (>= 2)", format!("{:.2}", n.mean_diameter)),
            ("Std. Dev. of Diameter", format!("{:.2}", n.std_diameter)),
            ("Std. Dev. of Degree", format!("{:.2}", n.std_degree)),
            ("Graph Density", format!("{:.2e}", n.density)),
        ];
        for (k, v) in rows {
            let _ = writeln!(s, "{k:<36} {v:>12}");
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::tests::node;
    use crate::schema::Provenance;

    #[test]
    fn empty_graph_is_all_zero() {
        let g = LkgGraph::new();
        assert!(g.node_stats().iter().all(|r| r.nodes == 0 && r.avg_in_degree == 0.0));
        assert!(g.edge_stats().iter().all(|r| r.avg_multiplicity == 0.0));
        let n = g.network_stats();
        assert_eq!((n.nodes, n.wcc_count, n.density), (0, 0, 0.0));
    }

    #[test]
    fn path_graph_diameter() {
        let mut g = LkgGraph::new();
        let p = g.add_node(node("d", "d:1:1", NodeLabel::Provision, "p")).unwrap();
        let n = g.add_node(node("d", "d:1:2", NodeLabel::LegalNorm, "n")).unwrap();
        let a = g.add_node(node("d", "d:1:3", NodeLabel::LegalApplication, "a")).unwrap();
        g.add_edge(EdgeKind::DerivesNorm, &p, &n, Provenance::Oracle).unwrap();
        g.add_edge(EdgeKind::AppliesNorm, &n, &a, Provenance::Oracle).unwrap();
        let s = g.network_stats();
        assert_eq!((s.wcc_count, s.wcc_diameter_ge2), (1, 1));
        assert_eq!(s.mean_diameter, 2.0);
        assert_eq!(s.std_diameter, 0.0);
    }

    #[test]
    fn multiplicity_of_parallel_edges() {
        let mut g = LkgGraph::new();
        let f = g.add_node(node("d", "d:1:1", NodeLabel::Fact, "f")).unwrap();
        let a = g.add_node(node("d", "d:1:2", NodeLabel::LegalApplication, "a")).unwrap();
        for _ in 0..3 {
            g.add_edge(EdgeKind::ToFact, &f, &a, Provenance::Oracle).unwrap();
        }
        let row = g.edge_stats().into_iter().find(|r| r.kind == EdgeKind::ToFact).unwrap();
        assert_eq!((row.edges, row.distinct_pairs, row.avg_multiplicity), (3, 1, 3.0));
    }

    #[test]
    fn render_has_table_columns() {
        let out = GraphStats::compute(&LkgGraph::new()).render();
        for col in ["# Nodes", "Avg In-Degree", "Avg Out-Degree", "# Self-Loops", "Avg Multiplicity", "Graph Density"] {
            assert!(out.contains(col), "{col}");
        }
    }
}
