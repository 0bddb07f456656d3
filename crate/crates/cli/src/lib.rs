//! The `lkg` command line. Every stage reads and writes files so stages can be rerun
//! independently.

pub mod config;

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use lkg_core::corpus::{
    load_corpus, parse_document, synth_corpus_file, HeadingHeuristics, JudgmentDoc, RawDocument, SourceKind,
    SynthParams,
};
use lkg_core::eval::{
    build_gold, compute_metrics, render_report, run_predictor, EvalResources, MetricsReport, PredictorKind, RunManifest,
};
use lkg_core::extraction::{extract_document, DocExtraction, ExtractionBackend, MockRules, ValidationWarning};
use lkg_core::graph::{export_jsonld, GraphSnapshot, GraphStats, LkgGraph};
use lkg_core::index::{Embedder, ForestParams, IndexMode};
use lkg_core::linker::{link_document, LinkBackend};
use lkg_core::normalize::StatuteCatalog;
use lkg_core::pipeline::{insert_candidates, NormalizeContext};
use lkg_core::provider::{ChatProvider, ProviderMode};
use lkg_core::search::{explain, retrieve_provisions, SearchQuery};
use lkg_core::{NodeLabel, VectorIndexF32};
use thiserror::Error;

use crate::config::RunConfig;

/// Misuse of the command line; exits with status 2.
#[derive(Debug, Error)]
#[error("{0}")]
pub struct UsageError(pub String);

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

#[derive(Debug, Parser)]
#[command(name = "lkg", version, about = "Build, search and evaluate a legal knowledge graph")]
pub struct Cli {
    /// TOML run configuration; LKG_* environment variables override its values
    #[arg(long, global = true, env = "LKG_CONFIG", hide_env_values = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Log more (-v info, -vv debug)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Oracle,
    Mock,
    Remote,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse a corpus file or a directory of judgments into the document file
    Ingest {
        /// lkg-corpus/1 JSON file, or a directory of .json / markup judgments
        #[arg(long, value_name = "PATH")]
        corpus: Option<PathBuf>,
        /// Output document file
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Label segments as Fact, Provision, Legal Norm or Legal Application
    Extract {
        /// Extraction backend
        #[arg(long, value_enum, default_value = "mock")]
        mode: Mode,
        /// Document file written by `ingest`
        #[arg(long, value_name = "PATH")]
        docs: Option<PathBuf>,
        /// Output extraction file
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Resolve provision references and write the node-only graph
    Normalize {
        /// Document file written by `ingest`
        #[arg(long, value_name = "PATH")]
        docs: Option<PathBuf>,
        /// Extraction file written by `extract`
        #[arg(long, value_name = "PATH")]
        extraction: Option<PathBuf>,
        /// Statute title catalog (JSON list or {"titles": [...]})
        #[arg(long, value_name = "PATH")]
        catalog: Option<PathBuf>,
        /// Output node-only snapshot
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Add reasoning edges to the node-only graph
    Link {
        /// Linking backend
        #[arg(long, value_enum, default_value = "mock")]
        mode: Mode,
        /// Document file written by `ingest`
        #[arg(long, value_name = "PATH")]
        docs: Option<PathBuf>,
        /// Node-only snapshot written by `normalize`
        #[arg(long, value_name = "PATH")]
        nodes: Option<PathBuf>,
        /// Output graph snapshot
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Print node, edge and network statistics of a snapshot
    Stats {
        /// Graph snapshot
        #[arg(long, value_name = "PATH")]
        snapshot: Option<PathBuf>,
        /// Print JSON instead of tables
        #[arg(long)]
        json: bool,
    },
    /// Fact index operations
    Index {
        #[command(subcommand)]
        action: IndexAction,
    },
    /// Retrieve provisions for a fact
    Search(SearchArgs),
    /// Score predictors against gold labels read off the graph
    Eval(EvalArgs),
    /// Write the graph as JSON-LD
    Export {
        /// Graph snapshot
        #[arg(long, value_name = "PATH")]
        snapshot: Option<PathBuf>,
        /// Output JSON-LD file
        #[arg(long, value_name = "PATH")]
        jsonld: PathBuf,
    },
    /// Generate an annotated synthetic corpus
    Synth {
        /// Random seed
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Number of documents
        #[arg(long, default_value_t = 40)]
        docs: usize,
        /// Output corpus file
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Serve the /v1 HTTP API over a snapshot and index
    Serve {
        /// Listen address, overrides LKG_SERVICE_ADDR
        #[arg(long, value_name = "HOST:PORT")]
        addr: Option<String>,
        /// Graph snapshot, overrides LKG_SNAPSHOT_PATH
        #[arg(long, value_name = "PATH")]
        snapshot: Option<PathBuf>,
        /// Fact index, overrides LKG_INDEX_PATH
        #[arg(long, value_name = "PATH")]
        index: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum IndexAction {
    /// Embed every Fact node of a snapshot
    Build {
        /// Graph snapshot
        #[arg(long, value_name = "PATH")]
        snapshot: Option<PathBuf>,
        /// Output index file
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
        /// Build the random-projection forest for approximate queries
        #[arg(long)]
        approximate: bool,
    },
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    /// Fact text to search with
    #[arg(long, conflicts_with = "fact_id", required_unless_present = "fact_id")]
    pub text: Option<String>,
    /// Search with the text of an existing Fact node
    #[arg(long, value_name = "NODE_ID")]
    pub fact_id: Option<String>,
    /// Number of similar facts to follow
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    /// Let a fact query retrieve itself
    #[arg(long)]
    pub no_mask: bool,
    /// Graph snapshot
    #[arg(long, value_name = "PATH")]
    pub snapshot: Option<PathBuf>,
    /// Fact index
    #[arg(long, value_name = "PATH")]
    pub index: Option<PathBuf>,
    /// Print the supporting reasoning chains
    #[arg(long)]
    pub explain: bool,
    /// Print JSON instead of text
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Comma-separated predictors: lkg:k=N, llm-simple, llm-context, llm-rag:m=N
    #[arg(long, value_delimiter = ',', default_value = "lkg:k=3")]
    pub predictors: Vec<String>,
    /// Output CSV report; a .manifest.json is written next to it
    #[arg(long, value_name = "PATH")]
    pub report: Option<PathBuf>,
    /// Graph snapshot
    #[arg(long, value_name = "PATH")]
    pub snapshot: Option<PathBuf>,
    /// Fact index
    #[arg(long, value_name = "PATH")]
    pub index: Option<PathBuf>,
    /// Document file (needed by the LLM predictors)
    #[arg(long, value_name = "PATH")]
    pub docs: Option<PathBuf>,
    /// Statute title catalog used to resolve LLM answers
    #[arg(long, value_name = "PATH")]
    pub catalog: Option<PathBuf>,
    /// Let RAG retrieve sections of the query's own judgment
    #[arg(long)]
    pub rag_include_own_document: bool,
}

fn pick(flag: &Option<PathBuf>, configured: &Option<PathBuf>, what: &str) -> anyhow::Result<PathBuf> {
    flag.clone()
        .or_else(|| configured.clone())
        .ok_or_else(|| usage(format!("no {what} path: pass the flag or set it under [paths] in the config")))
}

fn read(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    serde_json::from_str(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

/// Writes through a sibling temporary file so a failed run never leaves a partial output.
fn write(path: &Path, contents: &str) -> anyhow::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("writing {}", path.display()))?;
    tracing::info!(path = %path.display(), "wrote");
    Ok(())
}

fn load_docs(path: &Path) -> anyhow::Result<Vec<JudgmentDoc>> {
    read_json(path)
}

fn load_graph(path: &Path) -> anyhow::Result<LkgGraph> {
    Ok(GraphSnapshot::from_json(&read(path)?)?.into_graph()?)
}

fn write_graph(path: &Path, g: &LkgGraph) -> anyhow::Result<()> {
    write(path, &GraphSnapshot::from_graph(g).to_json())
}

fn load_catalog(path: Option<&Path>) -> anyhow::Result<Option<StatuteCatalog>> {
    path.map(|p| Ok(StatuteCatalog::from_json(&read(p)?)?)).transpose()
}

fn report_warnings(warnings: &[ValidationWarning]) {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for w in warnings {
        tracing::debug!(kind = ?w.kind, doc = %w.doc_id, segment = %w.segment_id, "{}", w.detail);
        *counts.entry(format!("{:?}", w.kind)).or_default() += 1;
    }
    for (kind, n) in counts {
        eprintln!("warning: {n} × {kind}");
    }
}

fn provider(cfg: &RunConfig) -> anyhow::Result<Arc<dyn ChatProvider>> {
    let mut p = cfg.provider.clone();
    p.mode = ProviderMode::Remote;
    p.connect()?.ok_or_else(|| anyhow!("remote provider unavailable"))
}

fn ingest(corpus: &Path) -> anyhow::Result<Vec<JudgmentDoc>> {
    if !corpus.is_dir() {
        return Ok(load_corpus(&read(corpus)?)?);
    }
    let mut files: Vec<PathBuf> = fs::read_dir(corpus)
        .with_context(|| format!("listing {}", corpus.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()?;
    files.retain(|p| p.is_file());
    files.sort();
    let heuristics = HeadingHeuristics::default();
    let mut docs = Vec::new();
    for f in files {
        let kind = match f.extension().and_then(|e| e.to_str()) {
            Some("json") => SourceKind::StructuredJson,
            _ => SourceKind::Markup,
        };
        let id = f.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
        let bytes = fs::read(&f).with_context(|| format!("reading {}", f.display()))?;
        docs.push(parse_document(&RawDocument::from_bytes(id, kind, bytes)?, &heuristics)?);
    }
    Ok(docs)
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    let cfg = RunConfig::load(cli.config.as_deref())?;
    let paths = &cfg.paths;
    match cli.command {
        Command::Ingest { corpus, out } => {
            let docs = ingest(&pick(&corpus, &paths.corpus, "corpus")?)?;
            write(&pick(&out, &paths.docs, "docs output")?, &serde_json::to_string(&docs)?)?;
            println!("ingested {} documents", docs.len());
        }
        Command::Extract { mode, docs, out } => {
            let docs = load_docs(&pick(&docs, &paths.docs, "docs")?)?;
            let backend = match mode {
                Mode::Oracle => ExtractionBackend::Oracle,
                Mode::Mock => ExtractionBackend::Mock(MockRules::default()),
                Mode::Remote => ExtractionBackend::Remote {
                    provider: provider(&cfg)?,
                    max_retries: cfg.provider.max_retries,
                    max_in_flight: cfg.provider.max_in_flight,
                },
            };
            let ex: Vec<DocExtraction> = docs.iter().map(|d| extract_document(d, &backend)).collect::<Result<_, _>>()?;
            report_warnings(&ex.iter().flat_map(|e| e.warnings.iter().cloned()).collect::<Vec<_>>());
            write(&pick(&out, &paths.extraction, "extraction output")?, &serde_json::to_string(&ex)?)?;
            println!("extracted {} candidates", ex.iter().map(|e| e.candidates.len()).sum::<usize>());
        }
        Command::Normalize {
            docs,
            extraction,
            catalog,
            out,
        } => {
            let docs = load_docs(&pick(&docs, &paths.docs, "docs")?)?;
            let ex: Vec<DocExtraction> = read_json(&pick(&extraction, &paths.extraction, "extraction")?)?;
            let catalog = load_catalog(catalog.as_deref().or(paths.catalog.as_deref()))?;
            let remote = (cfg.provider.mode == ProviderMode::Remote).then(|| provider(&cfg)).transpose()?;
            let ctx = NormalizeContext {
                catalog: catalog.as_ref(),
                provider: remote.as_deref(),
                max_retries: cfg.provider.max_retries,
            };
            let by_id: BTreeMap<&str, &JudgmentDoc> = docs.iter().map(|d| (d.doc_id.as_str(), d)).collect();
            let mut g = LkgGraph::new();
            let mut warnings = Vec::new();
            for e in &ex {
                let doc = by_id
                    .get(e.doc_id.as_str())
                    .ok_or_else(|| anyhow!("extraction mentions unknown document `{}`", e.doc_id))?;
                warnings.extend(insert_candidates(doc, e, &mut g, ctx)?);
            }
            report_warnings(&warnings);
            write_graph(&pick(&out, &paths.nodes, "nodes output")?, &g)?;
            println!("{} nodes", g.node_count());
        }
        Command::Link { mode, docs, nodes, out } => {
            let docs = load_docs(&pick(&docs, &paths.docs, "docs")?)?;
            let mut g = load_graph(&pick(&nodes, &paths.nodes, "nodes")?)?;
            let backend = match mode {
                Mode::Oracle => LinkBackend::Oracle,
                Mode::Mock => LinkBackend::Mock,
                Mode::Remote => LinkBackend::Remote {
                    provider: provider(&cfg)?,
                    max_retries: cfg.provider.max_retries,
                    max_in_flight: cfg.provider.max_in_flight,
                },
            };
            let mut warnings = Vec::new();
            for d in &docs {
                warnings.extend(link_document(d, &mut g, &backend, cfg.link)?);
            }
            report_warnings(&warnings);
            g.check_invariants()?;
            write_graph(&pick(&out, &paths.snapshot, "snapshot output")?, &g)?;
            println!("{} nodes, {} edges", g.node_count(), g.edge_count());
        }
        Command::Stats { snapshot, json } => {
            let g = load_graph(&pick(&snapshot, &paths.snapshot, "snapshot")?)?;
            let stats = GraphStats::compute(&g);
            if json {
                println!("{}", serde_json::to_string_pretty(&stats)?);
            } else {
                print!("{}", stats.render());
            }
        }
        Command::Index {
            action: IndexAction::Build { snapshot, out, approximate },
        } => {
            let g = load_graph(&pick(&snapshot, &paths.snapshot, "snapshot")?)?;
            let facts: Vec<(String, String)> =
                g.nodes_with_label(NodeLabel::Fact).map(|n| (n.node_id.clone(), n.text.clone())).collect();
            let embedder = Embedder::new(cfg.embedder.clone())?;
            let mode = if approximate { IndexMode::Approximate } else { IndexMode::Exact };
            let ix = VectorIndexF32::build(&facts, &embedder, mode, ForestParams::default())?;
            write(&pick(&out, &paths.index, "index output")?, &ix.to_json())?;
            println!("indexed {} facts", ix.len());
        }
        Command::Search(a) => search(&cfg, a)?,
        Command::Eval(a) => eval(&cfg, a)?,
        Command::Export { snapshot, jsonld } => {
            let g = load_graph(&pick(&snapshot, &paths.snapshot, "snapshot")?)?;
            write(&jsonld, &serde_json::to_string_pretty(&export_jsonld(&g))?)?;
        }
        Command::Synth { seed, docs, out } => {
            if docs == 0 {
                return Err(usage("--docs must be at least 1"));
            }
            let file = synth_corpus_file(seed, docs, &SynthParams::default())?;
            write(&pick(&out, &paths.corpus, "corpus output")?, &file.to_json())?;
            println!("wrote {docs} documents (seed {seed})");
        }
        Command::Serve { addr, snapshot, index } => {
            let mut sc = cfg.service.clone();
            if let Some(a) = addr {
                sc.addr = a;
            }
            sc.snapshot_path = snapshot.or(sc.snapshot_path).or(paths.snapshot.clone());
            sc.index_path = index.or(sc.index_path).or(paths.index.clone());
            if sc.snapshot_path.is_none() {
                return Err(usage("serve needs --snapshot or LKG_SNAPSHOT_PATH"));
            }
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(lkg_service::serve(sc, cfg.embedder.clone()))?;
        }
    }
    Ok(())
}

fn search(cfg: &RunConfig, a: SearchArgs) -> anyhow::Result<()> {
    let g = load_graph(&pick(&a.snapshot, &cfg.paths.snapshot, "snapshot")?)?;
    let embedder = Embedder::new(cfg.embedder.clone())?;
    let ix = VectorIndexF32::from_json(
        &read(&pick(&a.index, &cfg.paths.index, "index")?)?,
        Some(&embedder.fingerprint()),
    )?;
    let query = SearchQuery {
        text: a.text,
        fact_id: a.fact_id,
        k: a.k,
        mask: !a.no_mask,
    };
    query.validate().map_err(|e| usage(e.to_string()))?;
    let hits = retrieve_provisions(&query, &g, &ix, &embedder)?;
    let mut out = std::io::stdout().lock();
    if a.json {
        writeln!(out, "{}", serde_json::to_string_pretty(&hits)?)?;
        return Ok(());
    }
    if hits.is_empty() {
        writeln!(out, "no provisions found")?;
    }
    for (i, h) in hits.iter().enumerate() {
        if a.explain {
            write!(out, "{}. {}", i + 1, explain(h, &g))?;
        } else {
            writeln!(
                out,
                "{}. {}  score {:.3}  supporting facts: {}",
                i + 1,
                h.provision,
                h.score,
                h.supporting_facts()
            )?;
        }
    }
    Ok(())
}

fn eval(cfg: &RunConfig, a: EvalArgs) -> anyhow::Result<()> {
    let kinds: Vec<PredictorKind> = a
        .predictors
        .iter()
        .map(|s| s.trim().parse::<PredictorKind>().map_err(|e| usage(e.to_string())))
        .collect::<Result<_, _>>()?;
    if kinds.is_empty() {
        bail!(usage("no predictors given"));
    }
    let report_path = pick(&a.report, &cfg.paths.report, "report")?;
    let g = load_graph(&pick(&a.snapshot, &cfg.paths.snapshot, "snapshot")?)?;
    let embedder = Embedder::new(cfg.embedder.clone())?;
    let needs_index = kinds.iter().any(|k| matches!(k, PredictorKind::LkgRetrieval { .. }));
    let needs_llm = kinds.iter().any(|k| !matches!(k, PredictorKind::LkgRetrieval { .. }));
    let ix = if needs_index {
        Some(VectorIndexF32::from_json(
            &read(&pick(&a.index, &cfg.paths.index, "index")?)?,
            Some(&embedder.fingerprint()),
        )?)
    } else {
        None
    };
    let docs = match a.docs.as_ref().or(cfg.paths.docs.as_ref()) {
        Some(p) => load_docs(p)?,
        None if needs_llm => return Err(usage("LLM predictors need --docs")),
        None => Vec::new(),
    };
    let catalog = load_catalog(a.catalog.as_deref().or(cfg.paths.catalog.as_deref()))?;
    let llm = if needs_llm { Some(provider(cfg)?) } else { None };

    let gold = build_gold(&g);
    let mut res = EvalResources::new(&docs);
    res.graph = Some(&g);
    res.index = ix.as_ref();
    res.embedder = Some(&embedder);
    res.provider = llm.clone();
    res.catalog = catalog.as_ref();
    res.max_retries = cfg.provider.max_retries;
    res.max_in_flight = cfg.provider.max_in_flight;
    res.rag_exclude_own_document = !a.rag_include_own_document;

    let mut report = MetricsReport {
        gold_total: gold.total_labels(),
        rows: Vec::new(),
    };
    let mut seen = HashSet::new();
    for kind in kinds {
        if !seen.insert(kind) {
            continue;
        }
        let run = run_predictor(&gold, kind, &res)?;
        if !run.warnings.is_empty() {
            eprintln!("warning: {} failed queries for {kind}", run.warnings.len());
        }
        report.rows.push(compute_metrics(kind.display_name(), &run.predictions, &gold)?);
    }
    let rendered = render_report(&report);
    write(&report_path, &rendered.csv)?;
    let manifest = RunManifest {
        predictors: a.predictors.iter().map(|s| s.trim().to_string()).collect(),
        seeds: cfg.seeds.clone(),
        provider_fingerprint: llm.map(|p| p.fingerprint()),
        embedder_fingerprint: embedder.fingerprint(),
        graph_fingerprint: GraphSnapshot::from_graph(&g).fingerprint,
        gold_total: report.gold_total,
    };
    write(&report_path.with_extension("manifest.json"), &serde_json::to_string_pretty(&manifest)?)?;
    println!("gold labels: {}", report.gold_total);
    print!("{}", rendered.text);
    Ok(())
}
