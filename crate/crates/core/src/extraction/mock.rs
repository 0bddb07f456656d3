//! Deterministic sentence rules standing in for a model.
//!
//! Per sentence, in order: every parseable statutory reference becomes a Provision span
//! (a sentence with a reference never becomes a Fact); norm markers make the sentence a
//! LegalNorm; application markers make it a LegalApplication; any other declarative
//! sentence of sufficient length is a Fact.

use serde::{Deserialize, Serialize};

use super::NodeCandidate;
use crate::normalize::parse_provision_ref;
use crate::schema::{NodeLabel, Provenance};
use crate::text::split_sentences;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct MockRules {
    /// Lowercase substrings marking a general rule.
    pub norm_markers: Vec<String>,
    /// Lowercase substrings marking a conclusion about a party.
    pub application_markers: Vec<String>,
    /// Lowercase substrings marking procedural boilerplate.
    pub skip_markers: Vec<String>,
    pub min_fact_words: usize,
}

fn owned(xs: &[&str]) -> Vec<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

impl Default for MockRules {
    fn default() -> Self {
        Self {
            norm_markers: owned(&[
                " aims to ", "purpose of", " refers to ", " means ", " must ", " shall ",
                " is required to ", " may not ", "目的", "をいう",
            ]),
            application_markers: owned(&[
                "therefore,", "qualifies as", "does not qualify", "is unlawful", "is lawful",
                "is illegal", "is invalid", "is not unlawful", "に当たる", "違法である",
            ]),
            skip_markers: owned(&["judgment is rendered", "main text", "主文"]),
            min_fact_words: 4,
        }
    }
}

fn has_any(haystack: &str, markers: &[String]) -> bool {
    markers.iter().any(|m| haystack.contains(m.as_str()))
}

fn is_declarative(sentence: &str, min_words: usize) -> bool {
    let cjk = sentence.chars().any(|c| ('\u{3040}'..='\u{9fff}').contains(&c));
    let terminal = sentence.ends_with(['.', '。']);
    let words = if cjk {
        sentence.chars().count() / 4
    } else {
        sentence.split_whitespace().count()
    };
    terminal && words >= min_words
}

/// Labels the sentences of one segment.
pub fn mock_extract_segment(rules: &MockRules, segment_id: &str, text: &str) -> Vec<NodeCandidate> {
    let mut out = Vec::new();
    let cand = |label, text: &str| NodeCandidate {
        label,
        text: text.to_string(),
        segment_id: segment_id.to_string(),
        provenance: Provenance::Mock,
        canonical_hint: None,
    };
    for sentence in split_sentences(text) {
        let lower = format!(" {} ", sentence.to_lowercase());
        if has_any(&lower, &rules.skip_markers) {
            continue;
        }
        let refs = parse_provision_ref(sentence);
        let mut surfaces: Vec<&str> = Vec::new();
        for r in &refs {
            if !surfaces.contains(&r.surface.as_str()) {
                surfaces.push(&r.surface);
            }
        }
        for s in &surfaces {
            out.push(cand(NodeLabel::Provision, s));
        }
        if has_any(&lower, &rules.norm_markers) {
            out.push(cand(NodeLabel::LegalNorm, sentence));
        } else if has_any(&lower, &rules.application_markers) {
            out.push(cand(NodeLabel::LegalApplication, sentence));
        } else if refs.is_empty() && is_declarative(sentence, rules.min_fact_words) {
            out.push(cand(NodeLabel::Fact, sentence));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(text: &str) -> Vec<(NodeLabel, String)> {
        mock_extract_segment(&MockRules::default(), "d:1:1", text)
            .into_iter()
            .map(|c| (c.label, c.text))
            .collect()
    }

    #[test]
    fn martian_conjunction_is_one_provision() {
        assert_eq!(
            labels("Articles 1 and 2 of the Law on Coexistence with Martians."),
            [(NodeLabel::Provision, "Articles 1 and 2 of the Law on Coexistence with Martians".to_string())]
        );
    }

    #[test]
    fn one_segment_several_roles() {
        let got = labels(
            "Quorra Vex drew water from the lunar reservoir on 3 May 2040. Therefore, because Quorra Vex drew water, Quorra Vex qualifies as a \"lunar water user\".",
        );
        let kinds: Vec<_> = got.iter().map(|(l, _)| *l).collect();
        assert_eq!(kinds, [NodeLabel::Fact, NodeLabel::LegalApplication]);
    }

    #[test]
    fn norms_and_boilerplate() {
        assert_eq!(
            labels("Under the Space Elevator Safety Act, an elevator operator must obtain prior approval.")[0].0,
            NodeLabel::LegalNorm
        );
        assert!(labels("Accordingly, judgment is rendered as stated in the main text.").is_empty());
        assert!(labels("1. Facts").is_empty());
    }

    #[test]
    fn pure_function_of_text() {
        let t = "Article 3 of the Act on Lunar Water Rights (hereinafter \"the Act\") applies.";
        assert_eq!(labels(t), labels(t));
        assert_eq!(labels(t).len(), 1);
    }
}
