//! End-to-end graph construction: extract, normalize, insert nodes, link.

use std::str::FromStr;

use thiserror::Error;

use crate::corpus::JudgmentDoc;
use crate::extraction::{extract_document, DocExtraction, ExtractionBackend, ExtractionError, ValidationWarning, WarningKind};
use crate::graph::{GraphError, LkgGraph, LkgNode};
use crate::linker::{link_document, LinkBackend, LinkConfig, LinkError};
use crate::normalize::{parse_provision_ref, AliasTable, NormalizeError, ProvisionId, Resolver, StatuteCatalog};
use crate::provider::ChatProvider;
use crate::schema::NodeLabel;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Extraction(#[from] ExtractionError),
    #[error(transparent)]
    Normalize(#[from] NormalizeError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Link(#[from] LinkError),
}

/// Inputs for reference resolution during node insertion.
#[derive(Clone, Copy, Default)]
pub struct NormalizeContext<'a> {
    pub catalog: Option<&'a StatuteCatalog>,
    pub provider: Option<&'a dyn ChatProvider>,
    pub max_retries: u32,
}

/// Turns one document's candidates into nodes of `graph`.
///
/// Provision candidates carrying a canonical hint use it directly. Others are parsed and
/// resolved against the document's alias table; one candidate may yield several
/// Provision nodes (`Articles 1 and 2 of ...`) or none, with a warning.
pub fn insert_candidates(
    doc: &JudgmentDoc,
    extraction: &DocExtraction,
    graph: &mut LkgGraph,
    ctx: NormalizeContext<'_>,
) -> Result<Vec<ValidationWarning>, PipelineError> {
    let aliases = AliasTable::from_document(doc);
    let mut resolver = Resolver::new(&aliases);
    if let Some(c) = ctx.catalog {
        resolver = resolver.with_catalog(c);
    }
    if let Some(p) = ctx.provider {
        resolver = resolver.with_provider(p, ctx.max_retries);
    }
    let mut warnings = Vec::new();
    let mut last_title: Option<String> = None;
    for c in &extraction.candidates {
        if c.label != NodeLabel::Provision {
            graph.add_node(LkgNode::new(&doc.doc_id, &c.segment_id, c.label, &c.text, None, c.provenance))?;
            continue;
        }
        let ids = match &c.canonical_hint {
            Some(h) => vec![ProvisionId::from_str(h)?],
            None => {
                let excerpt = doc.segment(&c.segment_id).map(|s| s.text.as_str()).unwrap_or("");
                let res = resolver.resolve(&parse_provision_ref(&c.text), last_title.as_deref(), excerpt)?;
                for u in &res.unresolved {
                    warnings.push(ValidationWarning {
                        kind: WarningKind::UnresolvedProvision,
                        doc_id: doc.doc_id.clone(),
                        segment_id: c.segment_id.clone(),
                        detail: format!("no statute title for `{}`", u.surface),
                    });
                }
                res.resolved
            }
        };
        for id in ids {
            last_title = Some(id.law_title.clone());
            graph.add_node(LkgNode::new(&doc.doc_id, &c.segment_id, NodeLabel::Provision, &c.text, Some(id), c.provenance))?;
        }
    }
    Ok(warnings)
}

/// Stage switches for [`build_graph`].
#[derive(Clone)]
pub struct PipelineConfig<'a> {
    pub extraction: ExtractionBackend,
    pub linking: LinkBackend,
    pub link_config: LinkConfig,
    pub normalize: NormalizeContext<'a>,
}

#[derive(Debug, Default)]
pub struct BuildOutput {
    pub graph: LkgGraph,
    pub warnings: Vec<ValidationWarning>,
}

/// Extracts, normalizes and links every document into a single graph.
pub fn build_graph(docs: &[JudgmentDoc], config: &PipelineConfig<'_>) -> Result<BuildOutput, PipelineError> {
    let mut out = BuildOutput::default();
    for doc in docs {
        let ex = extract_document(doc, &config.extraction)?;
        out.warnings.extend(ex.warnings.iter().cloned());
        out.warnings.extend(insert_candidates(doc, &ex, &mut out.graph, config.normalize)?);
        out.warnings.extend(link_document(doc, &mut out.graph, &config.linking, config.link_config)?);
    }
    Ok(out)
}

/// The graph the gold annotations describe, built directly without extraction.
pub fn gold_graph(docs: &[JudgmentDoc]) -> Result<LkgGraph, PipelineError> {
    let mut g = LkgGraph::new();
    for doc in docs {
        let gold = doc
            .gold
            .as_ref()
            .ok_or_else(|| ExtractionError::OracleMissing(doc.doc_id.clone()))?;
        let mut ids = Vec::with_capacity(gold.nodes.len());
        for n in &gold.nodes {
            let prov = n.provision.as_deref().map(ProvisionId::from_str).transpose()?;
            ids.push(g.add_node(LkgNode::new(
                &doc.doc_id,
                &n.segment_id,
                n.label,
                &n.text,
                prov,
                crate::schema::Provenance::Oracle,
            ))?);
        }
        for e in &gold.edges {
            g.add_edge(e.kind, &ids[e.src], &ids[e.dst], crate::schema::Provenance::Oracle)?;
        }
    }
    Ok(g)
}
