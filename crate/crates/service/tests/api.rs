use axum::body::Body;
use axum::http::{header, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use lkg_core::corpus::{synth_corpus, SynthParams};
use lkg_core::graph::{import_jsonld, LkgGraph, LkgNode, ReasoningPath};
use lkg_core::index::{Embedder, ForestParams, IndexMode};
use lkg_core::normalize::ProvisionId;
use lkg_core::pipeline::gold_graph;
use lkg_core::{EdgeKind, NodeLabel, Provenance, VectorIndexF32};
use lkg_service::{router, AppState, Loaded, ServiceConfig};
use serde_json::{json, Value};
use tower::ServiceExt;

struct Fixture {
    graph: LkgGraph,
    fact_a: String,
    fact_b: String,
}

/// A judgment where only fact B is linked, through one application and one norm, to
/// Article 242 of the Local Autonomy Act.
fn audit_fixture() -> Fixture {
    let mut g = LkgGraph::new();
    let mut add = |seg: &str, label, text: &str, prov: Option<ProvisionId>| {
        g.add_node(LkgNode::new("audit", seg, label, text, prov, Provenance::Oracle)).unwrap()
    };
    let p = add(
        "audit:1:1",
        NodeLabel::Provision,
        "Article 242 of the Local Autonomy Act",
        Some(ProvisionId::new("Local Autonomy Act", 242)),
    );
    let n = add("audit:1:2", NodeLabel::LegalNorm, "A resident may request an audit of public expenditure.", None);
    let a = add("audit:2:3", NodeLabel::LegalApplication, "The audit request was therefore lawful.", None);
    let fact_a = add("audit:2:1", NodeLabel::Fact, "The resident filed an audit request with the city.", None);
    let fact_b = add("audit:2:2", NodeLabel::Fact, "The resident filed an audit request with the town.", None);
    g.add_edge(EdgeKind::DerivesNorm, &p, &n, Provenance::Oracle).unwrap();
    g.add_edge(EdgeKind::AppliesNorm, &n, &a, Provenance::Oracle).unwrap();
    g.add_edge(EdgeKind::ToFact, &fact_b, &a, Provenance::Oracle).unwrap();
    Fixture { graph: g, fact_a, fact_b }
}

fn index_for(g: &LkgGraph, e: &Embedder) -> VectorIndexF32 {
    let facts: Vec<(String, String)> =
        g.nodes_with_label(NodeLabel::Fact).map(|n| (n.node_id.clone(), n.text.clone())).collect();
    VectorIndexF32::build(&facts, e, IndexMode::Exact, ForestParams::default()).unwrap()
}

fn app_for(g: LkgGraph, with_index: bool) -> Router {
    let e = Embedder::mock(256);
    let ix = with_index.then(|| index_for(&g, &e));
    router(AppState::loaded(Loaded::new(g.freeze(), ix, e)), &[])
}

async fn call(app: &Router, req: Request<Body>) -> (StatusCode, Vec<u8>) {
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    (status, resp.into_body().collect().await.unwrap().to_bytes().to_vec())
}

async fn get(app: &Router, uri: &str) -> (StatusCode, Value) {
    let (s, b) = call(app, Request::get(uri).body(Body::empty()).unwrap()).await;
    (s, serde_json::from_slice(&b).unwrap())
}

fn search_req(body: &str) -> Request<Body> {
    Request::post("/v1/search")
        .header(header::CONTENT_TYPE, "application/json")
        .body(Body::from(body.to_string()))
        .unwrap()
}

async fn search(app: &Router, body: Value) -> (StatusCode, Value) {
    let (s, b) = call(app, search_req(&body.to_string())).await;
    (s, serde_json::from_slice(&b).unwrap())
}

#[tokio::test]
async fn health_reports_starting_then_fingerprint() {
    let state = AppState::new();
    let app = router(state.clone(), &[]);
    let (s, v) = get(&app, "/v1/health").await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v, json!({"status": "starting"}));
    let (s, v) = get(&app, "/v1/stats").await;
    assert_eq!(s, StatusCode::SERVICE_UNAVAILABLE);
    assert_eq!(v["code"], "index_missing");

    let g = audit_fixture().graph;
    let fp = lkg_core::graph::GraphSnapshot::from_graph(&g).fingerprint;
    state.install(Loaded::new(g.freeze(), None, Embedder::mock(256)));
    let (_, v) = get(&app, "/v1/health").await;
    assert_eq!(v, json!({"status": "ok", "snapshot": fp}));
}

#[tokio::test]
async fn text_search_finds_local_autonomy_provision() {
    let app = app_for(audit_fixture().graph, true);
    let (s, v) = search(&app, json!({"text": "resident filed an audit request"})).await;
    assert_eq!(s, StatusCode::OK);
    let hits = v["hits"].as_array().unwrap();
    assert_eq!(hits.len(), 1);
    assert_eq!(hits[0]["provision"], "Local Autonomy Act/Art.242");
    let path = &hits[0]["paths"][0];
    for key in ["fact", "application", "norm", "provision", "similarity"] {
        assert!(!path[key].is_null(), "{key}");
    }
    assert!(hits[0]["score"].as_f64().unwrap() > 0.0);
}

#[tokio::test]
async fn fact_queries_respect_the_mask() {
    let f = audit_fixture();
    let (a, b) = (f.fact_a.clone(), f.fact_b.clone());
    let app = app_for(f.graph, true);
    let (_, v) = search(&app, json!({"fact_id": a, "k": 1})).await;
    assert_eq!(v["hits"][0]["paths"][0]["fact"], b.as_str());
    let (_, v) = search(&app, json!({"fact_id": b, "k": 1})).await;
    assert_eq!(v["hits"], json!([]));
    let (_, v) = search(&app, json!({"fact_id": b, "k": 1, "mask": false})).await;
    assert_eq!(v["hits"][0]["provision"], "Local Autonomy Act/Art.242");
}

#[tokio::test]
async fn search_validation() {
    let app = app_for(audit_fixture().graph, true);
    for body in [
        json!({}),
        json!({"text": "x", "fact_id": "y"}),
        json!({"text": "x", "k": 0}),
        json!({"text": "x", "k": 101}),
        json!({"text": "   "}),
        json!({"text": "x", "limit": 3}),
    ] {
        let (s, v) = search(&app, body.clone()).await;
        assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY, "{body}");
        assert_eq!(v["code"], "invalid_request");
    }
    let (s, _) = call(&app, search_req("{not json")).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    let (s, v) = search(&app, json!({"fact_id": "nope#fact-00000000"})).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    assert_eq!(v["code"], "not_found");
    let (s, _) = search(&app, json!({"text": "x", "k": 100})).await;
    assert_eq!(s, StatusCode::OK);
}

#[tokio::test]
async fn search_without_index_is_unavailable() {
    let app = app_for(audit_fixture().graph, false);
    let (s, v) = search(&app, json!({"text": "audit"})).await;
    assert_eq!(s, StatusCode::SERVICE_UNAVAILABLE);
    assert_eq!(v["code"], "index_missing");
}

#[tokio::test]
async fn node_and_path_lookup() {
    let f = audit_fixture();
    let expected_paths: Vec<ReasoningPath> = f.graph.reasoning_paths(&f.fact_b, usize::MAX, true).unwrap();
    let node = f.graph.node(&f.fact_b).unwrap().clone();
    let app = app_for(f.graph, true);

    let (s, v) = get(&app, &format!("/v1/nodes/{}", f.fact_b.replace('#', "%23"))).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(serde_json::from_value::<LkgNode>(v).unwrap(), node);
    let (s, v) = get(&app, &format!("/v1/facts/{}/paths", f.fact_b.replace('#', "%23"))).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(serde_json::from_value::<Vec<ReasoningPath>>(v).unwrap(), expected_paths);

    let (s, _) = get(&app, "/v1/nodes/missing").await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    let (s, _) = get(&app, "/v1/facts/missing/paths").await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    let (s, _) = get(&app, "/v1/nowhere").await;
    assert_eq!(s, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn stats_of_empty_snapshot_are_zero() {
    let app = app_for(LkgGraph::new(), false);
    let (s, v) = get(&app, "/v1/stats").await;
    assert_eq!(s, StatusCode::OK);
    let net = &v["network"];
    for key in ["nodes", "edges", "wcc_count", "wcc_diameter_ge2"] {
        assert_eq!(net[key], 0, "{key}");
    }
    assert_eq!(net["density"], 0.0);
    assert!(v["nodes"].as_array().unwrap().iter().all(|r| r["nodes"] == 0));
}

#[tokio::test]
async fn export_round_trips_through_import() {
    let docs = synth_corpus(4, 5, &SynthParams::default()).unwrap();
    let g = gold_graph(&docs).unwrap();
    let app = app_for(g.clone(), false);
    let (s, v) = get(&app, "/v1/export/jsonld").await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v, lkg_core::graph::export_jsonld(&g));
    let back = import_jsonld(&v).unwrap();
    let ids = |g: &LkgGraph| g.nodes().iter().map(|n| n.node_id.clone()).collect::<std::collections::BTreeSet<_>>();
    assert_eq!(ids(&back), ids(&g));
    assert_eq!(back.edge_count(), g.edge_count());
}

#[tokio::test]
async fn identical_requests_give_identical_bytes() {
    let docs = synth_corpus(6, 30, &SynthParams::default()).unwrap();
    let g = gold_graph(&docs).unwrap();
    let fact = g.nodes_with_label(NodeLabel::Fact).nth(3).unwrap().node_id.clone();
    let app = app_for(g, true);
    for body in [json!({"fact_id": fact, "k": 5}), json!({"text": "the contract was signed", "k": 7})] {
        let (s1, b1) = call(&app, search_req(&body.to_string())).await;
        let (s2, b2) = call(&app, search_req(&body.to_string())).await;
        assert_eq!((s1, s2), (StatusCode::OK, StatusCode::OK));
        assert_eq!(b1, b2);
    }
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_storm_has_no_server_errors() {
    let docs = synth_corpus(8, 30, &SynthParams::default()).unwrap();
    let g = gold_graph(&docs).unwrap();
    let facts: Vec<String> = g.nodes_with_label(NodeLabel::Fact).map(|n| n.node_id.clone()).collect();
    let app = app_for(g, true);
    let mut tasks = Vec::new();
    for i in 0..120 {
        let app = app.clone();
        let fact = facts[i % facts.len()].clone();
        tasks.push(tokio::spawn(async move {
            let req = match i % 4 {
                0 => search_req(&json!({"fact_id": fact, "k": 1 + i % 7}).to_string()),
                1 => search_req(&json!({"text": format!("filed request {i}")}).to_string()),
                2 => Request::get("/v1/stats").body(Body::empty()).unwrap(),
                _ => Request::get(format!("/v1/facts/{}/paths", fact.replace('#', "%23"))).body(Body::empty()).unwrap(),
            };
            app.oneshot(req).await.unwrap().status()
        }));
    }
    for t in tasks {
        let s = t.await.unwrap();
        assert!(s.is_success(), "{s}");
    }
}

#[tokio::test]
async fn cors_allows_only_listed_origins() {
    let g = audit_fixture().graph;
    let e = Embedder::mock(256);
    let app = router(
        AppState::loaded(Loaded::new(g.freeze(), None, e)),
        &["http://localhost:5173".to_string()],
    );
    let req = |origin: &str| {
        Request::get("/v1/health").header(header::ORIGIN, origin).body(Body::empty()).unwrap()
    };
    let ok = app.clone().oneshot(req("http://localhost:5173")).await.unwrap();
    assert_eq!(ok.headers()[header::ACCESS_CONTROL_ALLOW_ORIGIN], "http://localhost:5173");
    let other = app.clone().oneshot(req("http://evil.example")).await.unwrap();
    assert!(other.headers().get(header::ACCESS_CONTROL_ALLOW_ORIGIN).is_none());
}

#[test]
fn config_reads_environment_keys() {
    let mut c = ServiceConfig::default();
    c.apply_vars(|k| match k {
        "LKG_SERVICE_ADDR" => Some("0.0.0.0:9000".into()),
        "LKG_SNAPSHOT_PATH" => Some("/data/graph.json".into()),
        "LKG_INDEX_PATH" => Some("/data/index.json".into()),
        "LKG_CORS_ORIGINS" => Some("http://a.test, http://b.test,".into()),
        _ => None,
    });
    assert_eq!(c.addr, "0.0.0.0:9000");
    assert_eq!(c.snapshot_path.as_deref(), Some(std::path::Path::new("/data/graph.json")));
    assert_eq!(c.index_path.as_deref(), Some(std::path::Path::new("/data/index.json")));
    assert_eq!(c.cors_origins, ["http://a.test", "http://b.test"]);
}
