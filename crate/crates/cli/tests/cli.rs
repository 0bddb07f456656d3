use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use clap::CommandFactory;
use lkg_cli::config::RunConfig;
use lkg_cli::Cli;
use lkg_core::graph::GraphSnapshot;
use lkg_core::index::{Embedder, EmbedderConfig};
use lkg_core::normalize::ProvisionId;
use lkg_core::search::{retrieve_provisions, SearchQuery};
use lkg_core::{EdgeKind, NodeLabel, VectorIndexF32};

fn lkg(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lkg"))
        .args(args)
        .current_dir(dir)
        .env_remove("LKG_CONFIG")
        .env_remove("LKG_SNAPSHOT_PATH")
        .env_remove("LKG_INDEX_PATH")
        .output()
        .expect("spawn lkg")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = lkg(dir, args);
    assert!(
        out.status.success(),
        "lkg {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

/// corpus → graph snapshot and index, all with the oracle backends.
fn build(dir: &Path, corpus: &str) {
    ok(dir, &["ingest", "--corpus", corpus, "--out", "docs.json"]);
    ok(dir, &["extract", "--mode", "oracle", "--docs", "docs.json", "--out", "ex.json"]);
    ok(dir, &["normalize", "--docs", "docs.json", "--extraction", "ex.json", "--out", "nodes.json"]);
    ok(dir, &["link", "--mode", "oracle", "--docs", "docs.json", "--nodes", "nodes.json", "--out", "graph.json"]);
    ok(dir, &["index", "build", "--snapshot", "graph.json", "--out", "index.json"]);
}

fn help_text(path: &[&str]) -> String {
    let mut cmd = Cli::command();
    for p in path {
        cmd = cmd.find_subcommand(p).unwrap().clone();
    }
    cmd.render_long_help().to_string()
}

#[test]
fn help_matches_snapshots() {
    let update = std::env::var_os("UPDATE_SNAPSHOTS").is_some();
    let cases: &[&[&str]] = &[
        &[],
        &["ingest"],
        &["extract"],
        &["normalize"],
        &["link"],
        &["stats"],
        &["index", "build"],
        &["search"],
        &["eval"],
        &["export"],
        &["synth"],
        &["serve"],
    ];
    for path in cases {
        let name = if path.is_empty() { "lkg".to_string() } else { path.join("_") };
        let file = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/snapshots").join(format!("{name}.txt"));
        let got = help_text(path);
        if update {
            fs::write(&file, &got).unwrap();
            continue;
        }
        let want = fs::read_to_string(&file).unwrap_or_else(|_| panic!("missing snapshot {}", file.display()));
        assert_eq!(got, want, "help for {name} drifted; rerun with UPDATE_SNAPSHOTS=1");
    }
}

#[test]
fn every_flag_is_documented() {
    fn walk(cmd: &clap::Command, trail: &str) {
        let help = cmd.clone().render_long_help().to_string();
        for arg in cmd.get_arguments() {
            if let Some(long) = arg.get_long() {
                assert!(help.contains(&format!("--{long}")), "{trail}: --{long} missing from help");
                if !["help", "version"].contains(&long) {
                    assert!(arg.get_help().is_some(), "{trail}: --{long} has no description");
                }
            }
        }
        for sub in cmd.get_subcommands() {
            walk(sub, &format!("{trail} {}", sub.get_name()));
        }
    }
    Cli::command().debug_assert();
    walk(&Cli::command(), "lkg");
}

#[test]
fn synth_is_byte_identical_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["synth", "--seed", "7", "--docs", "40", "--out", "a.json"]);
    ok(dir.path(), &["synth", "--seed", "7", "--docs", "40", "--out", "b.json"]);
    ok(dir.path(), &["synth", "--seed", "8", "--docs", "40", "--out", "c.json"]);
    let read = |n: &str| fs::read(dir.path().join(n)).unwrap();
    assert_eq!(read("a.json"), read("b.json"));
    assert_ne!(read("a.json"), read("c.json"));
}

#[test]
fn audit_fixture_search_finds_local_autonomy_article() {
    let dir = tempfile::tempdir().unwrap();
    build(dir.path(), fixture("audit.json").to_str().unwrap());
    let out = ok(
        dir.path(),
        &["search", "--snapshot", "graph.json", "--index", "index.json", "--text", "resident filed an audit request"],
    );
    let first = out.lines().next().unwrap();
    assert!(first.starts_with("1. Local Autonomy Act/Art.242"), "{out}");

    let explained = ok(
        dir.path(),
        &[
            "search", "--snapshot", "graph.json", "--index", "index.json", "--text", "resident filed an audit request",
            "--explain",
        ],
    );
    assert!(explained.contains("A resident may request an audit of public expenditure."), "{explained}");
}

#[test]
fn fact_query_masks_itself_unless_asked() {
    let dir = tempfile::tempdir().unwrap();
    build(dir.path(), fixture("audit.json").to_str().unwrap());
    let snap = GraphSnapshot::from_json(&fs::read_to_string(dir.path().join("graph.json")).unwrap()).unwrap();
    let g = snap.into_graph().unwrap();
    let harbor_fact = g.nodes_with_label(NodeLabel::Fact).find(|n| n.doc_id == "harbor").unwrap().node_id.clone();
    let base = ["search", "--snapshot", "graph.json", "--index", "index.json", "--fact-id", &harbor_fact, "--k", "1"];
    let masked = ok(dir.path(), &base);
    assert!(!masked.contains("Harbor Dues Act"), "{masked}");
    let mut unmasked = base.to_vec();
    unmasked.push("--no-mask");
    let unmasked = ok(dir.path(), &unmasked);
    assert!(unmasked.starts_with("1. Harbor Dues Act/Art.9"), "{unmasked}");
}

#[test]
fn oracle_pipeline_eval_agrees_with_brute_force() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["synth", "--seed", "5", "--docs", "12", "--out", "corpus.json"]);
    build(d, "corpus.json");
    let printed = ok(
        d,
        &["eval", "--snapshot", "graph.json", "--index", "index.json", "--predictors", "lkg:k=1,lkg:k=3", "--report", "out/report.csv"],
    );
    assert!(printed.contains("LKG Retrieval (k=3)"), "{printed}");
    let csv = fs::read_to_string(d.join("out/report.csv")).unwrap();
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(d.join("out/report.manifest.json")).unwrap()).unwrap();

    let g = GraphSnapshot::from_json(&fs::read_to_string(d.join("graph.json")).unwrap())
        .unwrap()
        .into_graph()
        .unwrap();
    // Gold: provisions reachable fact → application ← norm ← provision, read off the raw edge list.
    let edges = |kind: EdgeKind| -> Vec<(String, String)> {
        g.edges().iter().filter(|e| e.kind == kind).map(|e| (e.src.clone(), e.dst.clone())).collect()
    };
    let (to_fact, applies, derives) = (edges(EdgeKind::ToFact), edges(EdgeKind::AppliesNorm), edges(EdgeKind::DerivesNorm));
    let mut gold: BTreeMap<String, BTreeSet<ProvisionId>> = BTreeMap::new();
    for (fact, app) in &to_fact {
        for (norm, _) in applies.iter().filter(|(_, a)| a == app) {
            for (prov, _) in derives.iter().filter(|(_, n)| n == norm) {
                let id = g.node(prov).unwrap().provision.clone().unwrap();
                gold.entry(fact.clone()).or_default().insert(id);
            }
        }
    }
    let gold_total: usize = gold.values().map(BTreeSet::len).sum();
    assert_eq!(manifest["gold_total"], gold_total);

    let embedder = Embedder::new(EmbedderConfig::default()).unwrap();
    let ix = VectorIndexF32::from_json(&fs::read_to_string(d.join("index.json")).unwrap(), None).unwrap();
    let rows: Vec<Vec<String>> = csv.lines().skip(1).map(|l| l.split(',').map(String::from).collect()).collect();
    for (row, k) in rows.iter().zip([1usize, 3]) {
        let (mut pred, mut tp) = (0, 0);
        for (fact, want) in &gold {
            let q = SearchQuery {
                text: None,
                fact_id: Some(fact.clone()),
                k,
                mask: true,
            };
            let got: BTreeSet<ProvisionId> =
                retrieve_provisions(&q, &g, &ix, &embedder).unwrap().into_iter().map(|h| h.provision).collect();
            pred += got.len();
            tp += got.intersection(want).count();
        }
        assert_eq!(row[1], pred.to_string(), "k={k}");
        assert_eq!(row[2], tp.to_string(), "k={k}");
        let micro_recall: f64 = row[4].parse().unwrap();
        assert!((micro_recall - tp as f64 / gold_total as f64).abs() <= 0.0005, "k={k}");
    }
}

#[test]
fn outputs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["synth", "--seed", "3", "--docs", "6", "--out", "corpus.json"]);
    build(d, "corpus.json");
    let first = fs::read(d.join("graph.json")).unwrap();
    let stats = ok(d, &["stats", "--snapshot", "graph.json"]);
    build(d, "corpus.json");
    assert_eq!(first, fs::read(d.join("graph.json")).unwrap());
    assert_eq!(stats, ok(d, &["stats", "--snapshot", "graph.json"]));
    let stats_json: serde_json::Value = serde_json::from_str(&ok(d, &["stats", "--snapshot", "graph.json", "--json"])).unwrap();
    assert!(stats_json.is_object());
    ok(d, &["export", "--snapshot", "graph.json", "--jsonld", "g.jsonld"]);
    let a = fs::read(d.join("g.jsonld")).unwrap();
    ok(d, &["export", "--snapshot", "graph.json", "--jsonld", "g.jsonld"]);
    assert_eq!(a, fs::read(d.join("g.jsonld")).unwrap());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    // Clap parse failures and missing paths are usage errors.
    assert_eq!(lkg(d, &["frobnicate"]).status.code(), Some(2));
    assert_eq!(lkg(d, &["search", "--text", "x", "--fact-id", "y"]).status.code(), Some(2));
    assert_eq!(lkg(d, &["stats"]).status.code(), Some(2));
    assert_eq!(lkg(d, &["eval", "--predictors", "bogus", "--report", "r.csv"]).status.code(), Some(2));
    // A path that does not exist is an operational failure.
    let out = lkg(d, &["stats", "--snapshot", "missing.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.json"));
    assert_eq!(lkg(d, &["--help"]).status.code(), Some(0));
}

#[test]
fn config_paths_and_env_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    build(d, fixture("audit.json").to_str().unwrap());
    fs::write(
        d.join("lkg.toml"),
        "seeds = [1, 2]\n[paths]\nsnapshot = \"graph.json\"\nindex = \"index.json\"\n[link]\ninput_budget_tokens = 900\n",
    )
    .unwrap();
    let out = ok(d, &["--config", "lkg.toml", "search", "--text", "resident filed an audit request"]);
    assert!(out.starts_with("1. Local Autonomy Act/Art.242"), "{out}");

    // The environment wins over the file.
    let out = Command::new(env!("CARGO_BIN_EXE_lkg"))
        .args(["stats"])
        .current_dir(d)
        .env("LKG_CONFIG", "lkg.toml")
        .env("LKG_SNAPSHOT_PATH", "nope.json")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope.json"));

    let cfg: RunConfig = toml::from_str(&fs::read_to_string(d.join("lkg.toml")).unwrap()).unwrap();
    assert_eq!(cfg.seeds, vec![1, 2]);
    assert_eq!(cfg.link.input_budget_tokens, 900);
    let mut cfg = cfg;
    let vars: BTreeMap<&str, &str> =
        [("LKG_INDEX_PATH", "other.json"), ("LKG_SERVICE_ADDR", "0.0.0.0:9000"), ("LKG_LLM_MODE", "mock")].into();
    cfg.apply_vars(|k| vars.get(k).map(|v| v.to_string())).unwrap();
    assert_eq!(cfg.paths.index.as_deref(), Some(Path::new("other.json")));
    assert_eq!(cfg.service.addr, "0.0.0.0:9000");
    assert!(toml::from_str::<RunConfig>("[paths]\nbogus = 1\n").is_err());
}
