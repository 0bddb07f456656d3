//! Statutory references: parsing, canonical ids, and alias resolution.

mod grammar;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::corpus::{segments_in_reading_order, JudgmentDoc};
use crate::provider::{fill_template, request_json, ChatProvider, ProviderError};
use crate::text::fold_width_case;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NormalizeError {
    #[error("invalid provision id: {0}")]
    InvalidProvision(String),
    #[error("invalid alias file: {0}")]
    InvalidAliasFile(String),
    #[error("invalid statute catalog: {0}")]
    InvalidCatalog(String),
    #[error("provider unavailable: {0}")]
    ProviderUnavailable(String),
}

/// A resolved statutory reference.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ProvisionId {
    pub law_title: String,
    pub article: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paragraph: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub item: Option<u32>,
}

impl ProvisionId {
    pub fn new(law_title: impl Into<String>, article: u32) -> Self {
        Self {
            law_title: law_title.into(),
            article,
            paragraph: None,
            item: None,
        }
    }

    pub fn with_paragraph(mut self, paragraph: u32) -> Self {
        self.paragraph = Some(paragraph);
        self
    }

    pub fn with_item(mut self, item: u32) -> Self {
        self.item = Some(item);
        self
    }

    pub fn validate(&self) -> Result<(), NormalizeError> {
        let t = &self.law_title;
        if t.is_empty() || t.trim() != t || t.contains('/') || t.chars().any(char::is_control) {
            return Err(NormalizeError::InvalidProvision(format!(
                "law title `{t}` must be nonempty, trimmed and free of `/`"
            )));
        }
        if self.article == 0 || self.paragraph == Some(0) || self.item == Some(0) {
            return Err(NormalizeError::InvalidProvision(
                "article, paragraph and item numbers are positive".into(),
            ));
        }
        Ok(())
    }

    /// `Title/Art.N[/Para.P][/Item.I]`.
    pub fn canonical_string(&self) -> String {
        let mut s = format!("{}/Art.{}", self.law_title, self.article);
        if let Some(p) = self.paragraph {
            s.push_str(&format!("/Para.{p}"));
        }
        if let Some(i) = self.item {
            s.push_str(&format!("/Item.{i}"));
        }
        s
    }
}

pub fn canonical_string(id: &ProvisionId) -> String {
    id.canonical_string()
}

impl fmt::Display for ProvisionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical_string())
    }
}

impl FromStr for ProvisionId {
    type Err = NormalizeError;

    /// Parses a reference that resolves on its own: the canonical form or a fully titled
    /// single-article citation.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match parse_provision_ref(s).as_slice() {
            [p] => p
                .to_id()
                .ok_or_else(|| NormalizeError::InvalidProvision(format!("`{s}` lacks a law title"))),
            [] => Err(NormalizeError::InvalidProvision(format!("`{s}` is not a reference"))),
            _ => Err(NormalizeError::InvalidProvision(format!(
                "`{s}` cites more than one article"
            ))),
        }
    }
}

/// A parsed reference whose law title may still be unknown.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PartialProvision {
    pub law_title: Option<String>,
    /// Short name standing in for the title, such as `the Act`.
    pub alias: Option<String>,
    pub article: u32,
    pub paragraph: Option<u32>,
    pub item: Option<u32>,
    /// The matched source text.
    pub surface: String,
}

impl PartialProvision {
    pub fn from_id(id: ProvisionId, surface: impl Into<String>) -> Self {
        Self {
            law_title: Some(id.law_title),
            alias: None,
            article: id.article,
            paragraph: id.paragraph,
            item: id.item,
            surface: surface.into(),
        }
    }

    pub fn is_complete(&self) -> bool {
        self.to_id().is_some()
    }

    pub fn to_id(&self) -> Option<ProvisionId> {
        self.with_title(self.law_title.as_deref()?)
    }

    fn with_title(&self, title: &str) -> Option<ProvisionId> {
        let id = ProvisionId {
            law_title: title.trim().to_string(),
            article: self.article,
            paragraph: self.paragraph,
            item: self.item,
        };
        id.validate().ok().map(|_| id)
    }
}

/// Parses every statutory reference in `text`. Never fails; non-references yield an
/// empty list and references without a title come back with `law_title: None`.
pub fn parse_provision_ref(text: &str) -> Vec<PartialProvision> {
    grammar::parse(text)
}

fn alias_key(alias: &str) -> String {
    let k = fold_width_case(alias.trim_matches(|c: char| "\"'“”「」".contains(c) || c.is_whitespace()));
    k.strip_prefix("the ").map(str::to_string).unwrap_or(k)
}

/// Document-scoped map from alias phrases to canonical titles.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AliasTable {
    pub doc_id: String,
    entries: BTreeMap<String, String>,
}

static EN_DEFINITION: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r#"\(\s*(?:hereinafter|hereafter)\s*(?:referred\s+to\s+as\s+|called\s+|,\s*)?["“'](?P<alias>[^"”']+)["”']\s*\)"#,
    )
    .expect("valid regex")
});
static JP_DEFINITION: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"[（(]以下「(?P<alias>[^」]+)」(?:という)?。?[）)]").expect("valid regex")
});
static EN_TRAILING_ARTICLE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r",?\s*(?:Articles?|Art\.)\s*\d+(?:\s*,?\s*(?:Paragraph|Para\.)\s*\d+)?(?:\s*,?\s*Item\s*\d+)?\s*$")
        .expect("valid regex")
});
static JP_TRAILING_ARTICLE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?:第[0-9０-９一二三四五六七八九十百千]+[条項号])+$").expect("valid regex")
});
static JP_TITLE_TAIL: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"[\p{Han}\p{Katakana}ー・々]+$").expect("valid regex"));

impl AliasTable {
    pub fn new(doc_id: impl Into<String>) -> Self {
        Self {
            doc_id: doc_id.into(),
            entries: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, alias: &str, title: &str) -> Result<(), NormalizeError> {
        let title = title.trim();
        if title.is_empty() || alias_key(alias).is_empty() {
            return Err(NormalizeError::InvalidAliasFile(format!(
                "{}: alias `{alias}` maps to an empty title",
                self.doc_id
            )));
        }
        self.entries.insert(alias_key(alias), title.to_string());
        Ok(())
    }

    pub fn get(&self, alias: &str) -> Option<&str> {
        self.entries.get(&alias_key(alias)).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    /// Collects `(hereinafter "X")` and `（以下「X」という。）` definitions from a document.
    pub fn from_document(doc: &JudgmentDoc) -> Self {
        let mut table = Self::new(&doc.doc_id);
        for seg in segments_in_reading_order(doc) {
            table.scan_text(&seg.text);
        }
        table
    }

    pub fn scan_text(&mut self, text: &str) {
        for c in EN_DEFINITION.captures_iter(text) {
            let before = EN_TRAILING_ARTICLE.replace(&text[..c.get(0).expect("match").start()], "");
            let before = before.trim_end().trim_end_matches(',');
            let title = grammar::title_before(before);
            if let Some(title) = title {
                let _ = self.insert(&c["alias"], &title);
            }
        }
        for c in JP_DEFINITION.captures_iter(text) {
            let before = &text[..c.get(0).expect("match").start()];
            let before = JP_TRAILING_ARTICLE.replace(before, "");
            if let Some(m) = JP_TITLE_TAIL.find(&before) {
                let _ = self.insert(&c["alias"], m.as_str());
            }
        }
    }

    /// Adds every entry of `other`, overriding on conflict.
    pub fn merge(&mut self, other: &AliasTable) {
        for (k, v) in &other.entries {
            self.entries.insert(k.clone(), v.clone());
        }
    }
}

/// Parses `{"doc_id": {"alias": "canonical title"}}`.
pub fn load_alias_file(json: &str) -> Result<BTreeMap<String, AliasTable>, NormalizeError> {
    let raw: BTreeMap<String, BTreeMap<String, String>> =
        serde_json::from_str(json).map_err(|e| NormalizeError::InvalidAliasFile(e.to_string()))?;
    raw.into_iter()
        .map(|(doc, entries)| {
            let mut t = AliasTable::new(&doc);
            for (alias, title) in entries {
                t.insert(&alias, &title)?;
            }
            Ok((doc, t))
        })
        .collect()
}

/// Known canonical statute titles.
#[derive(Debug, Clone, Default)]
pub struct StatuteCatalog {
    titles: Vec<String>,
    exact: HashSet<String>,
    folded: HashMap<String, String>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum CatalogFile {
    List(Vec<String>),
    Object { titles: Vec<String> },
}

impl StatuteCatalog {
    pub fn new<I, S>(titles: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut c = Self::default();
        for t in titles {
            let t: String = t.into();
            let t = t.trim().to_string();
            if t.is_empty() || !c.exact.insert(t.clone()) {
                continue;
            }
            c.folded.entry(fold_width_case(&t)).or_insert_with(|| t.clone());
            c.titles.push(t);
        }
        c
    }

    /// Accepts a JSON array of titles or `{"titles": [...]}`.
    pub fn from_json(json: &str) -> Result<Self, NormalizeError> {
        let file: CatalogFile =
            serde_json::from_str(json).map_err(|e| NormalizeError::InvalidCatalog(e.to_string()))?;
        let titles = match file {
            CatalogFile::List(t) | CatalogFile::Object { titles: t } => t,
        };
        Ok(Self::new(titles))
    }

    pub fn titles(&self) -> &[String] {
        &self.titles
    }

    /// Exact match first, then case- and width-insensitive.
    pub fn lookup(&self, title: &str) -> Option<&str> {
        let t = title.trim();
        if let Some(hit) = self.exact.get(t) {
            return Some(hit);
        }
        self.folded.get(&fold_width_case(t)).map(String::as_str)
    }
}

/// Outcome of resolving a batch of partial references.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Resolution {
    pub resolved: Vec<ProvisionId>,
    /// Surface strings that could not be completed; these never become Provision nodes.
    pub unresolved: Vec<PartialProvision>,
}

/// Settles partial references against an alias table, an optional catalog and, as a
/// last resort, a provider.
#[derive(Clone, Copy)]
pub struct Resolver<'a> {
    pub aliases: &'a AliasTable,
    pub catalog: Option<&'a StatuteCatalog>,
    pub provider: Option<&'a dyn ChatProvider>,
    pub max_retries: u32,
}

const PROMPT: &str = include_str!("../../assets/normalize_references.txt");

impl<'a> Resolver<'a> {
    pub fn new(aliases: &'a AliasTable) -> Self {
        Self {
            aliases,
            catalog: None,
            provider: None,
            max_retries: 2,
        }
    }

    pub fn with_catalog(mut self, catalog: &'a StatuteCatalog) -> Self {
        self.catalog = Some(catalog);
        self
    }

    pub fn with_provider(mut self, provider: &'a dyn ChatProvider, max_retries: u32) -> Self {
        self.provider = Some(provider);
        self.max_retries = max_retries;
        self
    }

    fn canonical_title(&self, title: &str) -> String {
        let title = self.aliases.get(title).unwrap_or(title);
        self.catalog
            .and_then(|c| c.lookup(title))
            .unwrap_or(title)
            .to_string()
    }

    fn rule_based(&self, p: &PartialProvision, context_title: Option<&str>) -> Option<ProvisionId> {
        if let Some(t) = &p.law_title {
            return p.with_title(&self.canonical_title(t));
        }
        if let Some(a) = &p.alias {
            return self.aliases.get(a).and_then(|t| p.with_title(&self.canonical_title(t)));
        }
        context_title.and_then(|t| p.with_title(&self.canonical_title(t)))
    }

    /// Resolves `partials` in order. `context_title` completes bare references such as
    /// `Article 2, Paragraph 1`; `excerpt` is shown to the provider, if any.
    pub fn resolve(
        &self,
        partials: &[PartialProvision],
        context_title: Option<&str>,
        excerpt: &str,
    ) -> Result<Resolution, NormalizeError> {
        let mut slots: Vec<Option<ProvisionId>> =
            partials.iter().map(|p| self.rule_based(p, context_title)).collect();
        let pending: Vec<usize> = (0..partials.len()).filter(|&i| slots[i].is_none()).collect();
        if let (Some(provider), false) = (self.provider, pending.is_empty()) {
            let answers = self.ask_provider(provider, partials, &pending, excerpt)?;
            for (i, title) in answers {
                slots[i] = partials[i].with_title(&self.canonical_title(&title));
            }
        }
        let mut out = Resolution::default();
        for (p, slot) in partials.iter().zip(slots) {
            match slot {
                Some(id) => out.resolved.push(id),
                None => out.unresolved.push(p.clone()),
            }
        }
        Ok(out)
    }

    fn ask_provider(
        &self,
        provider: &dyn ChatProvider,
        partials: &[PartialProvision],
        pending: &[usize],
        excerpt: &str,
    ) -> Result<Vec<(usize, String)>, NormalizeError> {
        let mut known: Vec<String> = self.aliases.entries().map(|(a, t)| format!("- {t} (called \"{a}\")")).collect();
        if let Some(c) = self.catalog {
            known.extend(c.titles().iter().take(200).map(|t| format!("- {t}")));
        }
        let refs: Vec<String> = pending
            .iter()
            .enumerate()
            .map(|(n, &i)| format!("({}) {}", n + 1, partials[i].surface))
            .collect();
        let prompt = fill_template(
            PROMPT,
            &[
                ("known_titles", &known.join("\n")),
                ("context", excerpt),
                ("references", &refs.join("\n")),
            ],
        );
        let reply = match request_json(provider, &prompt, self.max_retries, |v| {
            v.get("resolutions").is_some_and(Value::is_array)
        }) {
            Ok(v) => v,
            Err(ProviderError::MalformedOutput { .. }) => {
                tracing::warn!("normalization reply unusable; leaving references unresolved");
                return Ok(Vec::new());
            }
            Err(e) => return Err(NormalizeError::ProviderUnavailable(e.to_string())),
        };
        let mut out = Vec::new();
        for r in reply["resolutions"].as_array().into_iter().flatten() {
            let n = r.get("ref").and_then(Value::as_u64).unwrap_or(0) as usize;
            let title = r.get("law_title").and_then(Value::as_str);
            if let (Some(&i), Some(t)) = (n.checked_sub(1).and_then(|k| pending.get(k)), title) {
                if !t.trim().is_empty() {
                    out.push((i, t.to_string()));
                }
            }
        }
        Ok(out)
    }
}

/// Resolves without catalog or context.
pub fn resolve(
    partials: &[PartialProvision],
    aliases: &AliasTable,
    provider: Option<&dyn ChatProvider>,
) -> Result<Resolution, NormalizeError> {
    let mut r = Resolver::new(aliases);
    if let Some(p) = provider {
        r = r.with_provider(p, 2);
    }
    r.resolve(partials, None, "")
}
