//! JSON-LD interchange.
//!
//! Instance nodes are typed with the schema classes. Relations leave the application
//! node (`LKG:appliesNorm`, `LKG:toFact`), the reverse of internal storage, except
//! `LKG:derivesNorm`, which leaves the Provision node. The schema defines no property
//! for Provision→Norm; `LKG:derivesNorm` is a local extension, marked in `@context` by
//! the [`DERIVES_NORM_FLAG`] term.

use std::collections::BTreeMap;

use serde_json::{json, Map, Value};

use super::{GraphError, LkgGraph, LkgNode};
use crate::normalize::ProvisionId;
use crate::schema::{EdgeKind, NodeLabel, Provenance};

pub const LKG_NS: &str = "urn:lkg:schema#";
/// `@context` term that marks `LKG:derivesNorm` as an extension property.
pub const DERIVES_NORM_FLAG: &str = "LKG_extension_derivesNorm";

fn class_of(label: NodeLabel) -> &'static str {
    match label {
        NodeLabel::Fact => "LKG:Fact",
        NodeLabel::Provision => "LKG:Provision",
        NodeLabel::LegalNorm => "LKG:LegalNorm",
        NodeLabel::LegalApplication => "LKG:LegalApplication",
    }
}

fn label_of(class: &str) -> Option<NodeLabel> {
    NodeLabel::ALL.into_iter().find(|&l| class_of(l) == class)
}

/// Property name and whether it is emitted on the edge target (reversed) rather than
/// the edge source.
fn property_of(kind: EdgeKind) -> (&'static str, bool) {
    match kind {
        EdgeKind::DerivesNorm => ("LKG:derivesNorm", false),
        EdgeKind::AppliesNorm => ("LKG:appliesNorm", true),
        EdgeKind::ToFact => ("LKG:toFact", true),
        #[cfg(feature = "extended-edges")]
        EdgeKind::SupportsFact => ("LKG:supportsFact", false),
        #[cfg(feature = "extended-edges")]
        EdgeKind::RefinesNorm => ("LKG:refinesNorm", false),
    }
}

const DATA_PROPS: [&str; 4] = ["LKG:text", "LKG:docId", "LKG:segmentId", "LKG:canonicalId"];

pub fn jsonld_context() -> Value {
    let mut ctx = Map::new();
    ctx.insert("LKG".into(), json!(LKG_NS));
    ctx.insert("rdf".into(), json!("http://www.w3.org/1999/02/22-rdf-syntax-ns#"));
    ctx.insert("rdfs".into(), json!("http://www.w3.org/2000/01/rdf-schema#"));
    ctx.insert("owl".into(), json!("http://www.w3.org/2002/07/owl#"));
    ctx.insert("schema".into(), json!("https://schema.org/"));
    for kind in EdgeKind::all() {
        ctx.insert(property_of(kind).0.into(), json!({"@type": "@id"}));
    }
    ctx.insert(DERIVES_NORM_FLAG.into(), json!({"@id": "LKG:derivesNorm", "@type": "@id"}));
    Value::Object(ctx)
}

/// Class and property definitions of the schema.
pub fn schema_jsonld() -> Value {
    let class = |id: &str, label: &str, comment: &str, parents: &[&str]| {
        json!({
            "@id": id,
            "@type": "owl:Class",
            "rdfs:label": label,
            "rdfs:comment": comment,
            "rdfs:subClassOf": parents.iter().map(|p| json!({"@id": p})).collect::<Vec<_>>(),
        })
    };
    let prop = |id: &str, label: &str, domain: &str, range: &str| {
        json!({
            "@id": id,
            "@type": "rdf:Property",
            "rdfs:label": label,
            "rdfs:domain": domain,
            "rdfs:range": range,
        })
    };
    let mut derives = prop("LKG:derivesNorm", "derives norm", "LKG:Provision", "LKG:LegalNorm");
    derives["rdfs:comment"] = json!("Local extension: norm derived from a cited provision.");
    json!({
        "@context": jsonld_context(),
        "@graph": [
            class("LKG:LegalNode", "Legal Node", "A segment-anchored element of legal reasoning", &[]),
            class("LKG:Fact", "Fact", "A case-specific factual finding", &["LKG:LegalNode"]),
            class("LKG:Provision", "Provision", "An explicit reference to a statutory article", &["LKG:LegalNode", "schema:Legislation"]),
            class("LKG:LegalNorm", "Legal Norm", "A normative proposition derived from law", &["LKG:LegalNode"]),
            class("LKG:LegalApplication", "Legal Application", "Applies a legal norm to facts", &["LKG:LegalNode", "schema:Action"]),
            prop("LKG:appliesNorm", "applies norm", "LKG:LegalApplication", "LKG:LegalNorm"),
            prop("LKG:toFact", "to fact", "LKG:LegalApplication", "LKG:Fact"),
            derives,
        ],
    })
}

pub fn export_jsonld(g: &LkgGraph) -> Value {
    if g.is_empty() {
        return json!({"@context": jsonld_context()});
    }
    let mut objs: Vec<Map<String, Value>> = g
        .nodes()
        .iter()
        .map(|n| {
            let mut m = Map::new();
            m.insert("@id".into(), json!(n.node_id));
            m.insert("@type".into(), json!(class_of(n.label)));
            m.insert("LKG:text".into(), json!(n.text));
            m.insert("LKG:docId".into(), json!(n.doc_id));
            m.insert("LKG:segmentId".into(), json!(n.segment_id));
            if let Some(p) = &n.provision {
                m.insert("LKG:canonicalId".into(), json!(p.canonical_string()));
            }
            m
        })
        .collect();
    for e in g.edges() {
        let (prop, reversed) = property_of(e.kind);
        let (holder, target) = if reversed { (&e.dst, &e.src) } else { (&e.src, &e.dst) };
        let i = g.index_of(holder).expect("edge endpoint");
        objs[i]
            .entry(prop)
            .or_insert_with(|| json!([]))
            .as_array_mut()
            .expect("array")
            .push(json!(target));
    }
    json!({
        "@context": jsonld_context(),
        "@graph": objs.into_iter().map(Value::Object).collect::<Vec<_>>(),
    })
}

fn violation(msg: impl Into<String>) -> GraphError {
    GraphError::SchemaViolation(msg.into())
}

fn str_field<'a>(obj: &'a Map<String, Value>, key: &str, id: &str) -> Result<&'a str, GraphError> {
    obj.get(key)
        .and_then(Value::as_str)
        .ok_or_else(|| violation(format!("`{id}` lacks string `{key}`")))
}

/// Rebuilds a graph from [`export_jsonld`] output. Unknown classes or properties and
/// dangling references are schema violations. Provenance becomes `imported`.
pub fn import_jsonld(doc: &Value) -> Result<LkgGraph, GraphError> {
    let obj = doc.as_object().ok_or_else(|| violation("document is not an object"))?;
    if !obj.contains_key("@context") {
        return Err(violation("missing @context"));
    }
    let items = match obj.get("@graph") {
        None => return Ok(LkgGraph::new()),
        Some(Value::Array(a)) => a,
        Some(_) => return Err(violation("@graph is not an array")),
    };
    let props: BTreeMap<&str, EdgeKind> = EdgeKind::all()
        .into_iter()
        .map(|k| (property_of(k).0, k))
        .collect();
    let mut g = LkgGraph::new();
    let mut pending = Vec::new();
    for item in items {
        let m = item.as_object().ok_or_else(|| violation("graph item is not an object"))?;
        let id = str_field(m, "@id", "?")?;
        let class = str_field(m, "@type", id)?;
        let label = label_of(class).ok_or_else(|| violation(format!("unknown class `{class}`")))?;
        let provision = match m.get("LKG:canonicalId") {
            Some(Value::String(s)) => Some(
                s.parse::<ProvisionId>()
                    .map_err(|e| violation(format!("`{id}`: {e}")))?,
            ),
            Some(_) => return Err(violation(format!("`{id}`: canonicalId is not a string"))),
            None => None,
        };
        let node = LkgNode {
            node_id: id.to_string(),
            label,
            text: str_field(m, "LKG:text", id)?.to_string(),
            doc_id: str_field(m, "LKG:docId", id)?.to_string(),
            segment_id: str_field(m, "LKG:segmentId", id)?.to_string(),
            provision,
            provenance: Provenance::Imported,
        };
        let got = g.add_node(node).map_err(|e| violation(e.to_string()))?;
        if got != id {
            return Err(violation(format!("`{id}` duplicates node `{got}`")));
        }
        for (k, v) in m {
            if k.starts_with('@') || DATA_PROPS.contains(&k.as_str()) {
                continue;
            }
            let kind = *props
                .get(k.as_str())
                .ok_or_else(|| violation(format!("unknown property `{k}`")))?;
            let targets = v.as_array().ok_or_else(|| violation(format!("`{k}` is not an array")))?;
            for t in targets {
                let t = t
                    .as_str()
                    .or_else(|| t.get("@id").and_then(Value::as_str))
                    .ok_or_else(|| violation(format!("`{k}` target is not an id")))?;
                pending.push((kind, id.to_string(), t.to_string()));
            }
        }
    }
    for (kind, holder, target) in pending {
        let (src, dst) = if property_of(kind).1 { (target, holder) } else { (holder, target) };
        g.add_edge(kind, &src, &dst, Provenance::Imported).map_err(|e| match e {
            GraphError::UnknownEndpoint(x) => violation(format!("dangling reference `{x}`")),
            other => violation(other.to_string()),
        })?;
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::tests::node;

    #[test]
    fn empty_graph_has_only_context() {
        let doc = export_jsonld(&LkgGraph::new());
        let keys: Vec<_> = doc.as_object().unwrap().keys().collect();
        assert_eq!(keys, ["@context"]);
        for p in ["LKG", "rdfs", "owl", "schema"] {
            assert!(doc["@context"].get(p).is_some(), "{p}");
        }
        assert!(import_jsonld(&doc).unwrap().is_empty());
    }

    #[test]
    fn applies_norm_leaves_application() {
        let mut g = LkgGraph::new();
        let n = g.add_node(node("d", "d:1:1", NodeLabel::LegalNorm, "n")).unwrap();
        let a = g.add_node(node("d", "d:1:2", NodeLabel::LegalApplication, "a")).unwrap();
        g.add_edge(EdgeKind::AppliesNorm, &n, &a, Provenance::Oracle).unwrap();
        let doc = export_jsonld(&g);
        let app = doc["@graph"].as_array().unwrap().iter().find(|o| o["@id"] == a.as_str()).unwrap();
        assert_eq!(app["@type"], "LKG:LegalApplication");
        assert_eq!(app["LKG:appliesNorm"], json!([n]));
        let back = import_jsonld(&doc).unwrap();
        assert_eq!(back.edges()[0].src, n);
        assert_eq!(back.edges()[0].kind, EdgeKind::AppliesNorm);
    }

    #[test]
    fn rejects_unknown_and_dangling() {
        let base = json!({"@context": {}, "@graph": [
            {"@id": "x", "@type": "LKG:Fact", "LKG:text": "t", "LKG:docId": "d", "LKG:segmentId": "d:1:1"}
        ]});
        assert!(import_jsonld(&base).is_ok());
        let mut bad = base.clone();
        bad["@graph"][0]["@type"] = json!("LKG:Thing");
        assert!(matches!(import_jsonld(&bad), Err(GraphError::SchemaViolation(_))));
        let mut bad = base.clone();
        bad["@graph"][0]["LKG:likes"] = json!(["y"]);
        assert!(import_jsonld(&bad).is_err());
        let dangling = json!({"@context": {}, "@graph": [
            {"@id": "a", "@type": "LKG:LegalApplication", "LKG:text": "t", "LKG:docId": "d", "LKG:segmentId": "d:1:1", "LKG:toFact": ["missing"]}
        ]});
        assert!(matches!(import_jsonld(&dangling), Err(GraphError::SchemaViolation(m)) if m.contains("dangling")));
    }

    #[test]
    fn schema_marks_extension() {
        let s = schema_jsonld();
        assert!(s["@context"].get(DERIVES_NORM_FLAG).is_some());
        let text = s.to_string();
        assert!(text.contains("\"rdfs:domain\":\"LKG:LegalApplication\""));
    }
}
