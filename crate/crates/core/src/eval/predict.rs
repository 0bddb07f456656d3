//! Predictors: graph retrieval and three provider baselines.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{EvalError, GoldSet};
use crate::corpus::JudgmentDoc;
use crate::graph::LkgGraph;
use crate::index::{Embedder, ForestParams, IndexMode, VectorIndex};
use crate::normalize::{parse_provision_ref, ProvisionId, StatuteCatalog};
use crate::parallel::map_bounded;
use crate::provider::{fill_template, request_json, ChatProvider};
use crate::scalar::Scalar;
use crate::search::{retrieve_provisions, SearchQuery};

const PREDICT_PROMPT: &str = include_str!("../../assets/predict_provisions.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PredictorKind {
    LkgRetrieval { k: usize },
    LlmSimple,
    LlmWithContext,
    LlmWithRag { m: usize },
}

impl PredictorKind {
    /// Row label used in reports.
    pub fn display_name(&self) -> String {
        match self {
            Self::LkgRetrieval { k } => format!("LKG Retrieval (k={k})"),
            Self::LlmSimple => "LLM Simple".into(),
            Self::LlmWithContext => "LLM With Context".into(),
            Self::LlmWithRag { m } => format!("LLM With RAG (m={m})"),
        }
    }
}

impl fmt::Display for PredictorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::LkgRetrieval { k } => write!(f, "lkg:k={k}"),
            Self::LlmSimple => f.write_str("llm-simple"),
            Self::LlmWithContext => f.write_str("llm-context"),
            Self::LlmWithRag { m } => write!(f, "llm-rag:m={m}"),
        }
    }
}

impl FromStr for PredictorKind {
    type Err = EvalError;

    /// `lkg:k=3`, `llm-simple`, `llm-context`, `llm-rag:m=3`. `lkg` and `llm-rag` alone
    /// default to 3.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || EvalError::InvalidPredictor(s.to_string());
        let (name, arg) = match s.trim().split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s.trim(), None),
        };
        let param = |key: &str| -> Result<usize, EvalError> {
            match arg {
                None => Ok(3),
                Some(a) => a
                    .strip_prefix(key)
                    .and_then(|v| v.strip_prefix('='))
                    .and_then(|v| v.parse().ok())
                    .filter(|&v| v >= 1)
                    .ok_or_else(bad),
            }
        };
        match name {
            "lkg" => Ok(Self::LkgRetrieval { k: param("k")? }),
            "llm-rag" => Ok(Self::LlmWithRag { m: param("m")? }),
            "llm-simple" if arg.is_none() => Ok(Self::LlmSimple),
            "llm-context" if arg.is_none() => Ok(Self::LlmWithContext),
            _ => Err(bad()),
        }
    }
}

/// Predicted provisions for one query, deduplicated.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    pub query: String,
    pub provisions: BTreeSet<ProvisionId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictorRun {
    pub kind: PredictorKind,
    pub predictions: Vec<Prediction>,
    /// Queries whose provider call failed and were scored as empty predictions.
    pub warnings: Vec<String>,
}

/// Everything a predictor may draw on. Each predictor checks for what it needs.
#[derive(Clone)]
pub struct EvalResources<'a, S: Scalar> {
    pub graph: Option<&'a LkgGraph>,
    pub index: Option<&'a VectorIndex<S>>,
    pub embedder: Option<&'a Embedder>,
    pub provider: Option<Arc<dyn ChatProvider>>,
    pub docs: &'a [JudgmentDoc],
    pub catalog: Option<&'a StatuteCatalog>,
    pub max_retries: u32,
    pub max_in_flight: usize,
    /// Keep the query's own judgment out of RAG retrieval.
    pub rag_exclude_own_document: bool,
}

impl<'a, S: Scalar> EvalResources<'a, S> {
    pub fn new(docs: &'a [JudgmentDoc]) -> Self {
        Self {
            graph: None,
            index: None,
            embedder: None,
            provider: None,
            docs,
            catalog: None,
            max_retries: 2,
            max_in_flight: 4,
            rag_exclude_own_document: true,
        }
    }
}

/// Builds the baseline prompt. `context` is already rendered (overview or retrieved
/// sections) and may be empty.
pub fn build_provider_prompt(fact: &str, context: &str) -> String {
    fill_template(PREDICT_PROMPT, &[("fact", fact.trim()), ("context", context)])
}

/// Reads `{"provisions": [..]}`. Each entry may be a canonical id or a citation; titles
/// are canonicalized through the catalog when one is given. Unparseable entries are
/// ignored.
pub fn parse_provider_reply(reply: &Value, catalog: Option<&StatuteCatalog>) -> BTreeSet<ProvisionId> {
    let mut out = BTreeSet::new();
    for item in reply.get("provisions").and_then(Value::as_array).into_iter().flatten() {
        let Some(s) = item.as_str() else { continue };
        for p in parse_provision_ref(s) {
            if let Some(mut id) = p.to_id() {
                if let Some(t) = catalog.and_then(|c| c.lookup(&id.law_title)) {
                    id.law_title = t.to_string();
                }
                out.insert(id);
            }
        }
    }
    out
}

fn section_block(i: usize, text: &str) -> String {
    format!("<<<SECTION {i}\n{}\nSECTION>>>", text.trim())
}

struct SectionCorpus<S: Scalar> {
    texts: Vec<(String, String)>,
    doc_of: Vec<String>,
    index: VectorIndex<S>,
}

fn section_corpus<S: Scalar>(docs: &[JudgmentDoc], embedder: &Embedder) -> Result<SectionCorpus<S>, EvalError> {
    let mut texts = Vec::new();
    let mut doc_of = Vec::new();
    for d in docs {
        for s in d.headed_sections() {
            let body: Vec<&str> = s.body().map(|x| x.text.as_str()).collect();
            if body.is_empty() {
                continue;
            }
            let path: Vec<String> = s.path.iter().map(usize::to_string).collect();
            texts.push((format!("{}#{}", d.doc_id, path.join(".")), body.join("\n")));
            doc_of.push(d.doc_id.clone());
        }
    }
    let index = VectorIndex::build(&texts, embedder, IndexMode::Exact, ForestParams::default())
        .map_err(|e| EvalError::Other(format!("section index: {e}")))?;
    Ok(SectionCorpus { texts, doc_of, index })
}

/// Runs `kind` over every gold query, in query order.
pub fn run_predictor<S: Scalar>(
    gold: &GoldSet,
    kind: PredictorKind,
    res: &EvalResources<'_, S>,
) -> Result<PredictorRun, EvalError> {
    let queries: Vec<(&String, &str)> = gold.queries.iter().map(|(q, g)| (q, g.doc_id.as_str())).collect();
    let name = kind.to_string();
    match kind {
        PredictorKind::LkgRetrieval { k } => {
            let graph = res.graph.ok_or(EvalError::ResourceMissing(name.clone(), "a graph"))?;
            let index = res.index.ok_or(EvalError::ResourceMissing(name.clone(), "a fact index"))?;
            let embedder = res.embedder.ok_or(EvalError::ResourceMissing(name, "an embedder"))?;
            let results = map_bounded(&queries, res.max_in_flight.max(1), |(q, _)| {
                retrieve_provisions(&SearchQuery::fact(q.as_str(), k), graph, index, embedder)
            });
            let mut predictions = Vec::with_capacity(queries.len());
            for ((q, _), r) in queries.iter().zip(results) {
                let hits = r.map_err(|e| EvalError::Other(format!("{q}: {e}")))?;
                predictions.push(Prediction {
                    query: (*q).clone(),
                    provisions: hits.into_iter().map(|h| h.provision).collect(),
                });
            }
            Ok(PredictorRun {
                kind,
                predictions,
                warnings: Vec::new(),
            })
        }
        _ => {
            let provider = res
                .provider
                .clone()
                .ok_or(EvalError::ResourceMissing(name.clone(), "a provider"))?;
            let graph = res.graph.ok_or(EvalError::ResourceMissing(name.clone(), "a graph"))?;
            let rag = match kind {
                PredictorKind::LlmWithRag { .. } => {
                    let e = res.embedder.ok_or(EvalError::ResourceMissing(name.clone(), "an embedder"))?;
                    Some((section_corpus::<S>(res.docs, e)?, e))
                }
                _ => None,
            };
            let overview = |doc: &str| {
                res.docs
                    .iter()
                    .find(|d| d.doc_id == doc)
                    .map(|d| d.case_overview.clone())
                    .unwrap_or_default()
            };
            let prompt_for = |q: &str, doc: &str| -> Result<String, String> {
                let fact = graph.node(q).map(|n| n.text.clone()).ok_or_else(|| format!("{q} not in graph"))?;
                let context = match (kind, &rag) {
                    (PredictorKind::LlmWithContext, _) => format!("<<<OVERVIEW\n{}\nOVERVIEW>>>", overview(doc).trim()),
                    (PredictorKind::LlmWithRag { m }, Some((corpus, e))) => {
                        let v = e.embed::<S>(&fact).map_err(|e| e.to_string())?;
                        let exclude: HashSet<String> = if res.rag_exclude_own_document {
                            corpus
                                .texts
                                .iter()
                                .zip(&corpus.doc_of)
                                .filter(|(_, d)| d.as_str() == doc)
                                .map(|((id, _), _)| id.clone())
                                .collect()
                        } else {
                            HashSet::new()
                        };
                        let hits = corpus.index.query(&v, m, &exclude).map_err(|e| e.to_string())?;
                        hits.iter()
                            .enumerate()
                            .map(|(i, (id, _))| {
                                let text = &corpus.texts.iter().find(|(x, _)| x == id).expect("indexed").1;
                                section_block(i + 1, text)
                            })
                            .collect::<Vec<_>>()
                            .join("\n")
                    }
                    _ => String::new(),
                };
                Ok(build_provider_prompt(&fact, &context))
            };
            let results = map_bounded(&queries, res.max_in_flight.max(1), |(q, doc)| {
                let prompt = prompt_for(q, doc)?;
                request_json(provider.as_ref(), &prompt, res.max_retries, |v| {
                    v.get("provisions").is_some_and(Value::is_array)
                })
                .map(|v| parse_provider_reply(&v, res.catalog))
                .map_err(|e| e.to_string())
            });
            let mut run = PredictorRun {
                kind,
                predictions: Vec::new(),
                warnings: Vec::new(),
            };
            for ((q, _), r) in queries.iter().zip(results) {
                let provisions = r.unwrap_or_else(|e| {
                    tracing::warn!(query = %q, "prediction failed: {e}");
                    run.warnings.push(format!("{q}: {e}"));
                    BTreeSet::new()
                });
                run.predictions.push(Prediction {
                    query: (*q).clone(),
                    provisions,
                });
            }
            Ok(run)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn predictor_specs() {
        for s in ["lkg:k=3", "llm-simple", "llm-context", "llm-rag:m=3", "lkg:k=7"] {
            assert_eq!(s.parse::<PredictorKind>().unwrap().to_string(), s);
        }
        assert_eq!("lkg".parse::<PredictorKind>().unwrap(), PredictorKind::LkgRetrieval { k: 3 });
        for bad in ["lkg:k=0", "lkg:m=2", "gpt", "llm-simple:k=1", "llm-rag:m=x"] {
            assert!(bad.parse::<PredictorKind>().is_err(), "{bad}");
        }
    }

    #[test]
    fn reply_parsing() {
        let v: Value = serde_json::json!({"provisions": [
            "Article 242 of the Local Autonomy Act",
            "Local Autonomy Act/Art.242",
            "Article 3, Paragraph 2 of the Orbital Freight Act",
            "something unrelated",
            7
        ]});
        let got = parse_provider_reply(&v, None);
        assert_eq!(got.len(), 2);
        assert!(got.contains(&ProvisionId::new("Orbital Freight Act", 3).with_paragraph(2)));
    }
}
