//! Seeded generator of fictional-statute judgments with complete gold annotations.
//!
//! Every document follows the same skeleton: a section of undisputed facts, one
//! "relevant laws" section per legal issue (provisions followed by the norms derived
//! from them), and a closing judgment section holding the applications. Applications
//! therefore always come after the norms and facts they rely on.

use std::collections::HashSet;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::format::{CorpusDocument, CorpusFile, CorpusGold, CorpusSection, GoldEdgeRecord, GoldNodeRecord};
use super::{segment_id, CorpusError, JudgmentDoc};
use crate::schema::{EdgeKind, NodeLabel};

/// Bounds for the generator. Ranges are inclusive `(min, max)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthParams {
    /// Number of fictional statutes to draw from (at most 90).
    pub catalog_size: usize,
    pub articles_per_statute: u32,
    /// Legal issues per document; each gets its own statute and law section.
    pub issues_per_doc: (usize, usize),
    pub facts_per_issue: (usize, usize),
    pub provisions_per_issue: (usize, usize),
    pub norms_per_issue: (usize, usize),
    pub applications_per_issue: (usize, usize),
    /// Facts that support no application.
    pub distractor_facts: (usize, usize),
    /// Probability that an application shares its paragraph with a fact.
    pub self_loop_rate: f64,
    /// Probability that a provision paragraph cites two articles at once.
    pub conjunction_rate: f64,
    /// Probability that the first issue introduces and later uses the alias "the Act".
    pub alias_rate: f64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            catalog_size: 24,
            articles_per_statute: 40,
            issues_per_doc: (1, 3),
            facts_per_issue: (1, 3),
            provisions_per_issue: (1, 2),
            norms_per_issue: (1, 2),
            applications_per_issue: (1, 2),
            distractor_facts: (0, 2),
            self_loop_rate: 0.15,
            conjunction_rate: 0.1,
            alias_rate: 0.3,
        }
    }
}

impl SynthParams {
    fn validate(&self) -> Result<(), CorpusError> {
        let ranges = [
            ("issues_per_doc", self.issues_per_doc, 1),
            ("facts_per_issue", self.facts_per_issue, 1),
            ("provisions_per_issue", self.provisions_per_issue, 1),
            ("norms_per_issue", self.norms_per_issue, 1),
            ("applications_per_issue", self.applications_per_issue, 1),
            ("distractor_facts", self.distractor_facts, 0),
        ];
        for (name, (lo, hi), min) in ranges {
            if lo < min || hi < lo {
                return Err(CorpusError::InvalidParams(format!(
                    "{name} must satisfy {min} <= min <= max, got ({lo}, {hi})"
                )));
            }
        }
        if self.catalog_size == 0 || self.catalog_size > TOPICS.len() * 3 {
            return Err(CorpusError::InvalidParams(format!(
                "catalog_size must be in 1..={}",
                TOPICS.len() * 3
            )));
        }
        if self.issues_per_doc.1 > self.catalog_size {
            return Err(CorpusError::InvalidParams(
                "issues_per_doc exceeds catalog_size".into(),
            ));
        }
        if self.articles_per_statute < 2 {
            return Err(CorpusError::InvalidParams(
                "articles_per_statute must be at least 2".into(),
            ));
        }
        for (name, p) in [
            ("self_loop_rate", self.self_loop_rate),
            ("conjunction_rate", self.conjunction_rate),
            ("alias_rate", self.alias_rate),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(CorpusError::InvalidParams(format!("{name} must be in [0, 1]")));
            }
        }
        Ok(())
    }
}

/// One fictional statute and the vocabulary used to write about it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatuteCatalogEntry {
    pub title: String,
    pub term: String,
    pub purpose: String,
    pub keywords: Vec<String>,
}

// (topic, defined term, purpose, fact activity)
const TOPICS: &[(&str, &str, &str, &str)] = &[
    ("Lunar Water Rights", "lunar water user", "secure fair allocation of lunar water", "drew water from the lunar reservoir"),
    ("Asteroid Mining Permits", "asteroid miner", "prevent reckless extraction on asteroids", "operated a drill rig on an asteroid"),
    ("Orbital Debris Control", "debris generator", "keep orbital lanes clear of debris", "released spent booster debris into orbit"),
    ("Venusian Cloud Settlements", "cloud settler", "protect the safety of floating settlements", "moored a habitat balloon above Venus"),
    ("Interplanetary Postal Services", "postal carrier", "guarantee reliable interplanetary mail", "carried sealed mail parcels to Mars"),
    ("Titan Methane Extraction", "methane operator", "limit hazardous methane extraction on Titan", "pumped liquid methane from a Titan lake"),
    ("Jovian Radio Licensing", "radio licensee", "avoid interference on Jovian radio bands", "broadcast radio signals near Jupiter"),
    ("Comet Tail Preservation", "comet visitor", "preserve comet tails for scientific study", "sampled dust from a comet tail"),
    ("Exoplanet Land Registration", "land registrant", "ensure certainty of exoplanet land titles", "fenced a parcel of exoplanet land"),
    ("Space Elevator Safety", "elevator operator", "protect passengers of space elevators", "ran the space elevator cabin overnight"),
    ("Saturn Ring Navigation", "ring navigator", "regulate navigation through the rings of Saturn", "piloted a freighter through Saturn rings"),
    ("Meteorite Ownership", "meteorite finder", "clarify ownership of fallen meteorites", "collected a meteorite from a crater"),
    ("Zero Gravity Labor Standards", "orbital worker", "protect workers in zero gravity", "worked a double shift in zero gravity"),
    ("Solar Sail Traffic", "sail pilot", "coordinate solar sail traffic", "deployed a solar sail in the inner lane"),
    ("Europa Ice Fishing", "ice fisher", "sustain fish stocks under the Europa ice", "cut a fishing hole in the Europa ice"),
    ("Phobos Customs Procedures", "customs declarant", "control goods entering through Phobos", "shipped crated goods through Phobos port"),
    ("Deep Space Broadcasting", "broadcaster", "maintain fair deep space broadcasting", "transmitted a news broadcast to deep space"),
    ("Ceres Agricultural Cooperatives", "cooperative member", "support farming cooperatives on Ceres", "harvested greenhouse crops on Ceres"),
    ("Stellar Cartography Records", "cartographer", "keep accurate star charts", "published an uncertified star chart"),
    ("Orbital Habitat Zoning", "habitat developer", "order the development of orbital habitats", "built a habitat module in a residential ring"),
    ("Io Volcanic Hazard Prevention", "hazard zone entrant", "prevent harm from volcanoes on Io", "entered a volcanic hazard zone on Io"),
    ("Pluto Heritage Protection", "heritage custodian", "protect the heritage sites of Pluto", "removed an ice carving from a Pluto heritage site"),
    ("Spaceport Noise Abatement", "spaceport neighbor", "reduce launch noise around spaceports", "lived beside the spaceport launch pad"),
    ("Lunar Residency Registration", "lunar resident", "maintain a register of lunar residents", "moved a household into a lunar dome"),
    ("Ganymede Mineral Taxation", "mineral taxpayer", "tax mineral sales on Ganymede fairly", "sold refined Ganymede minerals"),
    ("Kuiper Belt Salvage", "salvor", "govern salvage of wrecks in the Kuiper belt", "towed a derelict probe from the Kuiper belt"),
    ("Hydroponic Food Safety", "hydroponic grower", "ensure safe hydroponic food", "sold hydroponic lettuce to a station canteen"),
    ("Starship Crew Welfare", "crew member", "safeguard the welfare of starship crews", "served as a starship engineer for two years"),
    ("Vacuum Construction Standards", "vacuum builder", "set safe standards for vacuum construction", "welded a pressure hull in open vacuum"),
    ("Gravitational Survey Data", "survey operator", "secure reliable gravitational survey data", "recorded gravitational survey data near a moon"),
];

const FIRST_NAMES: &[&str] = &[
    "Quorra", "Brannoc", "Tesska", "Ilvar", "Moriel", "Dax", "Velna", "Orrin", "Sefa", "Kaltor",
    "Yenna", "Pirro", "Zeph", "Almaris", "Juno", "Corvik", "Ressa", "Tobin", "Ulla", "Haskel",
];
const LAST_NAMES: &[&str] = &[
    "Vex", "Tarrow", "Lindqvist", "Osei", "Marrak", "Quill", "Brenner", "Solano", "Ferrow", "Ito",
    "Kemp", "Nakamura", "Oduya", "Renn", "Castellan", "Voss", "Halloway", "Drummond", "Ashby", "Pryce",
];
const MONTHS: &[&str] = &[
    "January", "February", "March", "April", "May", "June", "July", "August", "September",
    "October", "November", "December",
];
const DISTRACTORS: &[&str] = &[
    "attended the oral hearing accompanied by counsel",
    "submitted a written brief to the registry",
    "requested a postponement of the hearing",
    "filed supplementary evidence with the clerk",
];

fn statute_title(index: usize) -> (String, usize) {
    let topic = index % TOPICS.len();
    let name = TOPICS[topic].0;
    let title = match index / TOPICS.len() {
        0 => format!("Act on {name}"),
        1 => format!("{name} Act"),
        _ => format!("Law on {name}"),
    };
    (title, topic)
}

/// Fictional statute catalog used by the generator.
pub fn statute_catalog(size: usize) -> Vec<StatuteCatalogEntry> {
    (0..size.min(TOPICS.len() * 3))
        .map(|i| {
            let (title, topic) = statute_title(i);
            let (name, term, purpose, _) = TOPICS[topic];
            StatuteCatalogEntry {
                title,
                term: term.to_string(),
                purpose: purpose.to_string(),
                keywords: name.split(' ').map(|w| w.to_lowercase()).collect(),
            }
        })
        .collect()
}

struct DocBuilder {
    doc_id: String,
    sections: Vec<CorpusSection>,
    nodes: Vec<GoldNodeRecord>,
    edges: Vec<GoldEdgeRecord>,
    seen: HashSet<(usize, NodeLabel, String)>,
}

impl DocBuilder {
    fn open_section(&mut self, heading: String) {
        self.sections.push(CorpusSection {
            heading,
            paragraphs: Vec::new(),
        });
    }

    /// Appends a paragraph to the current section and returns its segment id.
    fn paragraph(&mut self, text: String) -> String {
        let sec = self.sections.len();
        let s = self.sections.last_mut().expect("section open");
        s.paragraphs.push(text);
        let ordinal = s.paragraphs.len() - usize::from(s.heading.is_empty());
        segment_id(&self.doc_id, &[sec], ordinal)
    }

    fn is_fresh(&self, label: NodeLabel, text: &str) -> bool {
        !self
            .seen
            .contains(&(self.sections.len(), label, text.to_string()))
    }

    fn node(&mut self, segment: &str, label: NodeLabel, text: &str, provision: Option<String>) -> usize {
        self.seen
            .insert((self.sections.len(), label, text.to_string()));
        self.nodes.push(GoldNodeRecord {
            segment: segment.to_string(),
            label,
            text: text.to_string(),
            provision,
        });
        self.nodes.len() - 1
    }

    fn edge(&mut self, kind: EdgeKind, src: usize, dst: usize) {
        self.edges.push(GoldEdgeRecord { kind, src, dst });
    }
}

fn between(rng: &mut ChaCha8Rng, (lo, hi): (usize, usize)) -> usize {
    rng.random_range(lo..=hi)
}

fn person(rng: &mut ChaCha8Rng) -> String {
    format!(
        "{} {}",
        FIRST_NAMES.choose(rng).expect("nonempty"),
        LAST_NAMES.choose(rng).expect("nonempty")
    )
}

fn date(rng: &mut ChaCha8Rng) -> String {
    format!(
        "{} {} {}",
        rng.random_range(1..=28),
        MONTHS.choose(rng).expect("nonempty"),
        rng.random_range(2031..=2079)
    )
}

fn nonempty_subset(rng: &mut ChaCha8Rng, items: &[usize], max: usize) -> Vec<usize> {
    let mut v = items.to_vec();
    v.shuffle(rng);
    v.truncate(rng.random_range(1..=max.min(items.len()).max(1)));
    v.sort_unstable();
    v
}

struct Issue {
    statute: usize,
    party: String,
    facts: Vec<usize>,
    provisions: Vec<usize>,
    norms: Vec<usize>,
}

fn generate_doc(rng: &mut ChaCha8Rng, doc_index: usize, params: &SynthParams) -> CorpusDocument {
    let catalog = statute_catalog(params.catalog_size);
    let doc_id = format!("synth-{doc_index:04}");
    let mut b = DocBuilder {
        doc_id: doc_id.clone(),
        sections: Vec::new(),
        nodes: Vec::new(),
        edges: Vec::new(),
        seen: HashSet::new(),
    };

    let n_issues = between(rng, params.issues_per_doc);
    let mut statutes: Vec<usize> = (0..catalog.len()).collect();
    statutes.shuffle(rng);
    let mut issues: Vec<Issue> = statutes[..n_issues]
        .iter()
        .map(|&s| Issue {
            statute: s,
            party: person(rng),
            facts: Vec::new(),
            provisions: Vec::new(),
            norms: Vec::new(),
        })
        .collect();

    let overview = format!(
        "In this case the plaintiff {} seeks revocation of dispositions made under the {}.",
        issues[0].party,
        issues
            .iter()
            .map(|i| catalog[i.statute].title.as_str())
            .collect::<Vec<_>>()
            .join(" and the ")
    );

    // Facts section.
    let mut section_no = 1;
    b.open_section(format!("{section_no}. Facts Not in Dispute"));
    for issue in issues.iter_mut() {
        let (_, _, _, activity) = TOPICS[statute_title(issue.statute).1];
        let n = between(rng, params.facts_per_issue);
        let mut made = 0;
        while made < n {
            let text = format!("{} {} on {}.", issue.party, activity, date(rng));
            if !b.is_fresh(NodeLabel::Fact, &text) {
                continue;
            }
            let seg = b.paragraph(text.clone());
            let id = b.node(&seg, NodeLabel::Fact, &text, None);
            issue.facts.push(id);
            made += 1;
        }
    }
    let n_distract = between(rng, params.distractor_facts);
    let mut made = 0;
    while made < n_distract {
        let text = format!(
            "{} {} on {}.",
            person(rng),
            DISTRACTORS.choose(rng).expect("nonempty"),
            date(rng)
        );
        if b.is_fresh(NodeLabel::Fact, &text) {
            let seg = b.paragraph(text.clone());
            b.node(&seg, NodeLabel::Fact, &text, None);
            made += 1;
        }
    }

    // One law section per issue.
    let use_alias = rng.random_bool(params.alias_rate);
    for (ii, issue) in issues.iter_mut().enumerate() {
        section_no += 1;
        let entry = &catalog[issue.statute];
        b.open_section(format!("{section_no}. Relevant Laws"));
        let n_prov = between(rng, params.provisions_per_issue);
        let mut used_articles = HashSet::new();
        let mut fresh_article = |rng: &mut ChaCha8Rng| loop {
            let a = rng.random_range(1..=params.articles_per_statute);
            if used_articles.insert(a) {
                break a;
            }
        };
        let alias_here = use_alias && ii == 0 && n_prov >= 2;
        for p in 0..n_prov {
            // The alias-defining citation must be a single article.
            let conj = !(alias_here && p == 0) && rng.random_bool(params.conjunction_rate);
            if conj {
                let (a1, a2) = (fresh_article(rng), fresh_article(rng));
                let (a1, a2) = (a1.min(a2), a1.max(a2));
                let span = format!("Articles {a1} and {a2} of the {}", entry.title);
                let seg = b.paragraph(format!("The relevant provisions are {span}."));
                for a in [a1, a2] {
                    let id = b.node(
                        &seg,
                        NodeLabel::Provision,
                        &span,
                        Some(format!("{}/Art.{a}", entry.title)),
                    );
                    issue.provisions.push(id);
                }
                continue;
            }
            let a = fresh_article(rng);
            let with_para = rng.random_bool(0.25) && !(alias_here && p == 0);
            let para = rng.random_range(1..=4);
            let canonical = if with_para {
                format!("{}/Art.{a}/Para.{para}", entry.title)
            } else {
                format!("{}/Art.{a}", entry.title)
            };
            let (span, text) = if alias_here && p == 0 {
                let span = format!("Article {a} of the {}", entry.title);
                (span.clone(), format!("{span} (hereinafter \"the Act\") applies."))
            } else if alias_here {
                let span = if with_para {
                    format!("Article {a}, Paragraph {para} of the Act")
                } else {
                    format!("Article {a} of the Act")
                };
                (span.clone(), format!("See also {span}."))
            } else if with_para {
                let span = format!("{}, Article {a}, Paragraph {para}", entry.title);
                (span.clone(), format!("{span}."))
            } else {
                let span = format!("Article {a} of the {}", entry.title);
                (span.clone(), format!("{span}."))
            };
            let seg = b.paragraph(text);
            let id = b.node(&seg, NodeLabel::Provision, &span, Some(canonical));
            issue.provisions.push(id);
        }
        let n_norms = between(rng, params.norms_per_issue);
        for k in 0..n_norms {
            let text = if k == 0 {
                format!(
                    "The {} aims to {}; accordingly, a \"{}\" refers to any person engaged in the regulated activity.",
                    entry.title, entry.purpose, entry.term
                )
            } else {
                format!(
                    "Under the {}, a {} must obtain prior approval from the competent authority.",
                    entry.title, entry.term
                )
            };
            let seg = b.paragraph(text.clone());
            let id = b.node(&seg, NodeLabel::LegalNorm, &text, None);
            let sources = if k == 0 {
                issue.provisions.clone()
            } else {
                nonempty_subset(rng, &issue.provisions, 2)
            };
            for s in sources {
                b.edge(EdgeKind::DerivesNorm, s, id);
            }
            issue.norms.push(id);
        }
    }

    // Judgment section.
    section_no += 1;
    b.open_section(format!("{section_no}. Judgment of the Court"));
    for issue in &issues {
        let entry = &catalog[issue.statute];
        let (_, _, _, activity) = TOPICS[statute_title(issue.statute).1];
        let n_apps = between(rng, params.applications_per_issue);
        for k in 0..n_apps {
            let self_loop = rng.random_bool(params.self_loop_rate);
            let conclusion = if k == 0 {
                format!(
                    "Therefore, because {} {}, {} qualifies as a \"{}\".",
                    issue.party, activity, issue.party, entry.term
                )
            } else if k == 1 {
                format!(
                    "Therefore, the disposition against {} as a \"{}\" is unlawful.",
                    issue.party, entry.term
                )
            } else {
                format!(
                    "Therefore, disposition number {k} against {} as a \"{}\" is also unlawful.",
                    issue.party, entry.term
                )
            };
            let (seg, loop_fact) = if self_loop {
                let fact = loop {
                    let f = format!("{} {} again on {}.", issue.party, activity, date(rng));
                    if b.is_fresh(NodeLabel::Fact, &f) {
                        break f;
                    }
                };
                let seg = b.paragraph(format!("{fact} {conclusion}"));
                let f = b.node(&seg, NodeLabel::Fact, &fact, None);
                (seg, Some(f))
            } else {
                (b.paragraph(conclusion.clone()), None)
            };
            let app = b.node(&seg, NodeLabel::LegalApplication, &conclusion, None);
            for f in nonempty_subset(rng, &issue.facts, 2) {
                b.edge(EdgeKind::ToFact, f, app);
            }
            if let Some(f) = loop_fact {
                b.edge(EdgeKind::ToFact, f, app);
            }
            for n in nonempty_subset(rng, &issue.norms, 2) {
                b.edge(EdgeKind::AppliesNorm, n, app);
            }
        }
    }
    b.paragraph("Accordingly, judgment is rendered as stated in the main text.".to_string());

    CorpusDocument {
        doc_id,
        case_overview: overview,
        sections: b.sections,
        gold: Some(CorpusGold {
            nodes: b.nodes,
            edges: b.edges,
        }),
    }
}

/// Generates `n_docs` annotated documents in corpus-file form. Deterministic in all inputs.
pub fn synth_corpus_file(
    seed: u64,
    n_docs: usize,
    params: &SynthParams,
) -> Result<CorpusFile, CorpusError> {
    if n_docs == 0 {
        return Err(CorpusError::InvalidParams("n_docs must be at least 1".into()));
    }
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let docs = (0..n_docs)
        .map(|i| generate_doc(&mut rng, i, params))
        .collect();
    Ok(CorpusFile::new(docs))
}

/// Generates `n_docs` parsed documents carrying gold annotations.
pub fn synth_corpus(
    seed: u64,
    n_docs: usize,
    params: &SynthParams,
) -> Result<Vec<JudgmentDoc>, CorpusError> {
    synth_corpus_file(seed, n_docs, params)?.into_judgments()
}
