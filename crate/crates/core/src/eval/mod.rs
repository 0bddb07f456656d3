//! Benchmark harness: gold labels derived from the graph, predictors, metrics, reports
//! and the annotation-comparison protocol for extraction quality.
//!
//! The gold set is read off the same graph the retrieval predictor searches. That is
//! circular on purpose; the fact mask is what keeps the task from being trivial.

mod annotation;
mod predict;
mod report;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use annotation::{
    compare_annotations, AnnotatedEdge, AnnotatedNode, AnnotationReport, AnnotationSet, CategoryRow,
    DEFAULT_MATCH_THRESHOLD,
};
pub use predict::{
    build_provider_prompt, parse_provider_reply, run_predictor, EvalResources, Prediction, PredictorKind,
    PredictorRun,
};
pub use report::{parse_report_csv, render_report, RenderedReport, RunManifest};

use crate::graph::LkgGraph;
use crate::normalize::ProvisionId;
use crate::schema::NodeLabel;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("predictor {0} needs {1}")]
    ResourceMissing(String, &'static str),
    #[error("prediction for unknown query `{0}`")]
    UnknownQuery(String),
    #[error("annotation sets cover different documents: {0}")]
    DocumentMismatch(String),
    #[error("invalid predictor spec `{0}`")]
    InvalidPredictor(String),
    #[error("invalid report: {0}")]
    InvalidReport(String),
    #[error("{0}")]
    Other(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldQuery {
    pub doc_id: String,
    pub provisions: BTreeSet<ProvisionId>,
}

/// Query fact → provisions reachable through its complete reasoning chains.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldSet {
    pub queries: BTreeMap<String, GoldQuery>,
}

impl GoldSet {
    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }

    /// Total number of (query, provision) labels.
    pub fn total_labels(&self) -> usize {
        self.queries.values().map(|q| q.provisions.len()).sum()
    }
}

/// Gold labels for every Fact with at least one complete chain to a provision.
pub fn build_gold(graph: &LkgGraph) -> GoldSet {
    let mut gold = GoldSet::default();
    for f in graph.nodes_with_label(NodeLabel::Fact) {
        let provisions: BTreeSet<ProvisionId> = graph
            .reasoning_paths(&f.node_id, usize::MAX, false)
            .expect("fact node")
            .into_iter()
            .filter_map(|p| p.provision.and_then(|id| graph.node(&id)).and_then(|n| n.provision.clone()))
            .collect();
        if !provisions.is_empty() {
            gold.queries.insert(
                f.node_id.clone(),
                GoldQuery {
                    doc_id: f.doc_id.clone(),
                    provisions,
                },
            );
        }
    }
    gold
}

/// Harmonic mean; 0 when both parts are 0.
pub fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// One row of the retrieval table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodMetrics {
    pub method: String,
    pub pred: usize,
    pub tp: usize,
    pub macro_recall: f64,
    pub micro_recall: f64,
    pub macro_precision: f64,
    pub micro_precision: f64,
    pub macro_f1: f64,
    pub micro_f1: f64,
}

impl MethodMetrics {
    /// Micro rates from aggregate counts. Macro rates need per-judgment counts and are
    /// left at zero.
    pub fn from_counts(method: impl Into<String>, pred: usize, tp: usize, gold_total: usize) -> Self {
        let (p, r) = (ratio(tp, pred), ratio(tp, gold_total));
        Self {
            method: method.into(),
            pred,
            tp,
            macro_recall: 0.0,
            micro_recall: r,
            macro_precision: 0.0,
            micro_precision: p,
            macro_f1: 0.0,
            micro_f1: f1(p, r),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub gold_total: usize,
    pub rows: Vec<MethodMetrics>,
}

/// Scores one predictor's output.
///
/// Micro rates pool all queries. Macro rates first sum TP, Pred and gold per judgment,
/// take that judgment's precision (0 when it predicted nothing) and recall, and average
/// over the judgments in the gold set. Macro F1 is the harmonic mean of macro precision
/// and macro recall.
pub fn compute_metrics(
    method: impl Into<String>,
    predictions: &[Prediction],
    gold: &GoldSet,
) -> Result<MethodMetrics, EvalError> {
    #[derive(Default)]
    struct Counts {
        pred: usize,
        tp: usize,
        gold: usize,
    }
    let mut per_doc: BTreeMap<&str, Counts> = BTreeMap::new();
    for q in gold.queries.values() {
        per_doc.entry(q.doc_id.as_str()).or_default().gold += q.provisions.len();
    }
    for p in predictions {
        let g = gold
            .queries
            .get(&p.query)
            .ok_or_else(|| EvalError::UnknownQuery(p.query.clone()))?;
        let c = per_doc.get_mut(g.doc_id.as_str()).expect("doc of a gold query");
        c.pred += p.provisions.len();
        c.tp += p.provisions.intersection(&g.provisions).count();
    }
    let pred: usize = per_doc.values().map(|c| c.pred).sum();
    let tp: usize = per_doc.values().map(|c| c.tp).sum();
    let n = per_doc.len().max(1) as f64;
    let macro_p = per_doc.values().map(|c| ratio(c.tp, c.pred)).sum::<f64>() / n;
    let macro_r = per_doc.values().map(|c| ratio(c.tp, c.gold)).sum::<f64>() / n;
    let mut m = MethodMetrics::from_counts(method, pred, tp, gold.total_labels());
    m.macro_precision = macro_p;
    m.macro_recall = macro_r;
    m.macro_f1 = f1(macro_p, macro_r);
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pid(a: u32) -> ProvisionId {
        ProvisionId::new("Space Elevator Safety Act", a)
    }

    fn gold() -> GoldSet {
        let mut g = GoldSet::default();
        for (q, doc, ps) in [("q1", "d1", vec![1, 2]), ("q2", "d1", vec![3]), ("q3", "d2", vec![4])] {
            g.queries.insert(
                q.into(),
                GoldQuery {
                    doc_id: doc.into(),
                    provisions: ps.into_iter().map(pid).collect(),
                },
            );
        }
        g
    }

    fn pred(q: &str, ps: &[u32]) -> Prediction {
        Prediction {
            query: q.into(),
            provisions: ps.iter().copied().map(pid).collect(),
        }
    }

    #[test]
    fn perfect_predictions() {
        let g = gold();
        let preds: Vec<Prediction> = g
            .queries
            .iter()
            .map(|(q, gq)| Prediction {
                query: q.clone(),
                provisions: gq.provisions.clone(),
            })
            .collect();
        let m = compute_metrics("x", &preds, &g).unwrap();
        for v in [m.macro_recall, m.micro_recall, m.macro_precision, m.micro_precision, m.macro_f1, m.micro_f1] {
            assert_eq!(v, 1.0);
        }
    }

    #[test]
    fn hand_computed_macro() {
        // d1: pred 3, tp 1, gold 3 → P 1/3, R 1/3. d2: pred 0, gold 1 → P 0, R 0.
        let m = compute_metrics("x", &[pred("q1", &[1, 9]), pred("q2", &[8])], &gold()).unwrap();
        assert_eq!((m.pred, m.tp), (3, 1));
        assert!((m.macro_precision - 1.0 / 6.0).abs() < 1e-12);
        assert!((m.macro_recall - 1.0 / 6.0).abs() < 1e-12);
        assert!((m.micro_recall - 0.25).abs() < 1e-12);
        assert!(matches!(compute_metrics("x", &[pred("zz", &[1])], &gold()), Err(EvalError::UnknownQuery(_))));
    }

    #[test]
    fn f1_edge_cases() {
        assert_eq!(f1(0.0, 0.0), 0.0);
        assert!((f1(0.5, 1.0) - 2.0 / 3.0).abs() < 1e-12);
    }
}
