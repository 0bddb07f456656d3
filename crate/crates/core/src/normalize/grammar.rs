//! Rule set for statutory reference strings.
//!
//! Rules, tried in order:
//! 1. the canonical form itself (`Title/Art.N/Para.P/Item.I`), whole string only;
//! 2. English anchors `Article(s) N[, M][ and K][, Paragraph P][, Item I]`, followed by
//!    an optional `of [the] Title`, or preceded by `Title,`;
//! 3. Japanese `Title第N条第P項第I号`, with `及び`/`、` conjunctions inheriting the title.
//!
//! A generic head word after `the`/`this`/`said` (`the Act`, `the Ordinance`) yields an
//! alias partial to be settled by the document's alias table.

use std::sync::LazyLock;

use regex::Regex;

use super::{PartialProvision, ProvisionId};

const CONNECTORS: &[&str] = &[
    "of", "on", "for", "with", "and", "the", "to", "in", "concerning", "regarding", "relating",
    "against", "by", "at", "from", "upon",
];
const NOT_TITLE: &[&str] = &[
    "Article", "Articles", "Art", "Arts", "Paragraph", "Paragraphs", "Para", "Item", "Items",
    "The", "See", "Under", "Pursuant",
];
/// Head words that, alone after a determiner, refer back to a previously cited statute.
const GENERIC_HEADS: &[&str] = &[
    "Act", "Law", "Code", "Ordinance", "Regulation", "Regulations", "Rules", "Order", "Statute",
    "Decree", "Treaty", "Convention", "Agreement", "Contract",
];
const STATUTE_WORDS: &[&str] = &[
    "Act", "Law", "Code", "Ordinance", "Regulation", "Regulations", "Rules", "Order", "Statute",
    "Decree", "Treaty", "Convention", "Agreement", "Contract", "Constitution", "Charter",
];
const JP_GENERIC: &[&str] = &["同法", "本法", "法", "同令", "本令", "同規則"];
const JP_SUFFIXES: &[&str] = &["法律", "法", "令", "規則", "条例", "憲法", "規程", "条約"];

static CANONICAL: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^([^/\n]+)/Art\.(\d+)(?:/Para\.(\d+))?(?:/Item\.(\d+))?$").expect("valid regex")
});

static ANCHOR: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"\b(?:Articles?|Arts?\.)\s*(?P<nums>\d+(?:(?:\s*,\s*and\s+|\s*,\s*|\s+and\s+)\d+)*)(?:\s*,?\s*(?:Paragraph|Para\.)\s*(?P<para>\d+))?(?:\s*,?\s*Item\s*(?P<item>\d+))?",
    )
    .expect("valid regex")
});

static DIGITS: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\d+").expect("valid regex"));

static OF_THE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^\s+of\s+(?P<det>(?:the|this|said|that)\s+)?").expect("valid regex")
});

static JP_REF: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"(?P<title>[\p{Han}\p{Katakana}ー・々]*)第(?P<art>[0-9０-９一二三四五六七八九十百千]+)条(?:第(?P<para>[0-9０-９一二三四五六七八九十百千]+)項)?(?:第(?P<item>[0-9０-９一二三四五六七八九十百千]+)号)?",
    )
    .expect("valid regex")
});

static JP_CONJ: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^\s*(?:及び|並びに|又は|、|,|ないし)\s*$").expect("valid regex"));

static WORD: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^( ?)([\p{L}\p{N}][\p{L}\p{N}'’\-]*)").expect("valid regex"));

fn is_capitalized(w: &str) -> bool {
    w.chars().next().is_some_and(char::is_uppercase)
}

fn positive(s: &str) -> Option<u32> {
    s.parse::<u32>().ok().filter(|n| *n > 0)
}

/// Arabic, full-width or kanji numerals up to 9999.
pub(crate) fn parse_jp_number(s: &str) -> Option<u32> {
    let ascii: String = s
        .chars()
        .map(|c| match c {
            '０'..='９' => char::from(b'0' + (c as u32 - '０' as u32) as u8),
            c => c,
        })
        .collect();
    if ascii.chars().all(|c| c.is_ascii_digit()) {
        return positive(&ascii);
    }
    let digit = |c: char| "〇一二三四五六七八九".chars().position(|d| d == c).map(|p| p as u32);
    let (mut total, mut current) = (0u32, 0u32);
    for c in ascii.chars() {
        if let Some(d) = digit(c) {
            current = current * 10 + d;
            continue;
        }
        let unit = match c {
            '十' => 10,
            '百' => 100,
            '千' => 1000,
            _ => return None,
        };
        total += if current == 0 { 1 } else { current } * unit;
        current = 0;
    }
    Some(total + current).filter(|n| *n > 0)
}

/// Scans a title forward from the start of `s`: capitalized words joined by lowercase
/// connectors. Returns the title and its byte length in `s`.
fn scan_title_forward(s: &str) -> Option<(String, usize)> {
    let mut words: Vec<(&str, usize)> = Vec::new();
    let mut pos = 0;
    while let Some(c) = WORD.captures(&s[pos..]) {
        let w = c.get(2).expect("group").as_str();
        if words.is_empty() && !c[1].is_empty() {
            break;
        }
        let end = pos + c.get(0).expect("match").end();
        let ok = if is_capitalized(w) {
            !NOT_TITLE.contains(&w) || words.is_empty() && w == "The"
        } else {
            !words.is_empty() && CONNECTORS.contains(&w)
        };
        if !ok {
            break;
        }
        words.push((w, end));
        pos = end;
    }
    while words.last().is_some_and(|(w, _)| !is_capitalized(w)) {
        words.pop();
    }
    let &(_, end) = words.last()?;
    let title = s[..end].trim();
    let title = title.strip_prefix("The ").unwrap_or(title);
    (!title.is_empty()).then(|| (title.to_string(), end))
}

/// Scans a title backward from the end of `s` (which must already exclude the trailing
/// comma). Returns the title and its starting byte offset.
fn scan_title_backward(s: &str) -> Option<(String, usize)> {
    let trimmed = s.trim_end();
    let mut first_cap = None;
    for (i, w) in word_spans_rev(trimmed) {
        if is_capitalized(w) && !NOT_TITLE.contains(&w) {
            first_cap = Some(i);
        } else if !(first_cap.is_some() && CONNECTORS.contains(&w)) {
            break;
        }
    }
    let start = first_cap?;
    Some((trimmed[start..].to_string(), start))
}

/// Space-separated words at the end of `s`, last first, with their byte offsets. Stops
/// at the first token containing punctuation (after keeping its word tail).
fn word_spans_rev(s: &str) -> Vec<(usize, &str)> {
    let is_word = |c: char| c.is_alphanumeric() || matches!(c, '\'' | '’' | '-');
    let mut out = Vec::new();
    let mut end = s.len();
    for tok in s.rsplit(' ') {
        let start = end - tok.len();
        if tok.chars().all(is_word) && !tok.is_empty() {
            out.push((start, tok));
        } else {
            let tail = tok.trim_start_matches(|c: char| !is_word(c));
            if !tail.is_empty() && tail.chars().all(is_word) {
                out.push((end - tail.len(), tail));
            }
            break;
        }
        if start == 0 {
            break;
        }
        end = start - 1;
    }
    out
}

/// The capitalized title ending `s`, if any.
pub(super) fn title_before(s: &str) -> Option<String> {
    scan_title_backward(s).map(|(t, _)| t)
}

fn has_statute_word(title: &str) -> bool {
    title.split(' ').any(|w| STATUTE_WORDS.contains(&w))
}

fn parse_canonical(text: &str) -> Option<ProvisionId> {
    let c = CANONICAL.captures(text.trim())?;
    let id = ProvisionId {
        law_title: c[1].to_string(),
        article: positive(&c[2])?,
        paragraph: match c.get(3) {
            Some(m) => Some(positive(m.as_str())?),
            None => None,
        },
        item: match c.get(4) {
            Some(m) => Some(positive(m.as_str())?),
            None => None,
        },
    };
    id.validate().ok().map(|_| id)
}

pub(super) fn parse(text: &str) -> Vec<PartialProvision> {
    if let Some(id) = parse_canonical(text) {
        return vec![PartialProvision::from_id(id, text.trim())];
    }
    let mut out = Vec::new();
    let mut taken: Vec<(usize, usize)> = Vec::new();
    parse_english(text, &mut out, &mut taken);
    parse_japanese(text, &mut out, &mut taken);
    out.sort_by_key(|(start, _)| *start);
    out.into_iter().map(|(_, p)| p).collect()
}

fn parse_english(
    text: &str,
    out: &mut Vec<(usize, PartialProvision)>,
    taken: &mut Vec<(usize, usize)>,
) {
    for c in ANCHOR.captures_iter(text) {
        let m = c.get(0).expect("match");
        let articles: Vec<u32> = DIGITS
            .find_iter(&c["nums"])
            .filter_map(|d| positive(d.as_str()))
            .collect();
        if articles.is_empty() {
            continue;
        }
        let single = articles.len() == 1;
        let para = c.name("para").and_then(|p| positive(p.as_str())).filter(|_| single);
        let item = c.name("item").and_then(|p| positive(p.as_str())).filter(|_| single);

        let mut start = m.start();
        let mut end = m.end();
        let mut title = None;
        let mut alias = None;
        let rest = &text[end..];
        if let Some(of) = OF_THE.captures(rest) {
            let after = &rest[of.get(0).expect("match").end()..];
            if let Some((t, len)) = scan_title_forward(after) {
                let det = of.name("det").map(|d| d.as_str().trim());
                if det.is_some() && GENERIC_HEADS.contains(&t.as_str()) {
                    alias = Some(format!("the {t}"));
                } else {
                    title = Some(t);
                }
                end += of.get(0).expect("match").end() + len;
            }
        }
        if title.is_none() && alias.is_none() {
            let before = &text[..start];
            if let Some(head) = before.trim_end().strip_suffix(',') {
                if let Some((t, s)) = scan_title_backward(head) {
                    if has_statute_word(&t) {
                        title = Some(t);
                        start = s;
                    }
                }
            }
        }
        let surface = text[start..end].trim().to_string();
        for a in articles {
            out.push((
                start,
                PartialProvision {
                    law_title: title.clone(),
                    alias: alias.clone(),
                    article: a,
                    paragraph: para,
                    item,
                    surface: surface.clone(),
                },
            ));
        }
        taken.push((start, end));
    }
}

fn parse_japanese(
    text: &str,
    out: &mut Vec<(usize, PartialProvision)>,
    taken: &mut Vec<(usize, usize)>,
) {
    let mut prev: Option<(usize, Option<String>, Option<String>)> = None;
    for c in JP_REF.captures_iter(text) {
        let m = c.get(0).expect("match");
        if taken.iter().any(|&(s, e)| m.start() < e && s < m.end()) {
            continue;
        }
        let Some(article) = parse_jp_number(&c["art"]) else {
            continue;
        };
        let para = c.name("para").and_then(|p| parse_jp_number(p.as_str()));
        let item = c.name("item").and_then(|p| parse_jp_number(p.as_str()));
        let raw_title = &c["title"];
        let (mut title, mut alias) = (None, None);
        if JP_GENERIC.contains(&raw_title) {
            alias = Some(raw_title.to_string());
        } else if JP_SUFFIXES.iter().any(|s| raw_title.ends_with(s)) {
            title = Some(raw_title.to_string());
        }
        if title.is_none() && alias.is_none() {
            if let Some((pend, pt, pa)) = &prev {
                if JP_CONJ.is_match(&text[*pend..m.start()]) {
                    title = pt.clone();
                    alias = pa.clone();
                }
            }
        }
        prev = Some((m.end(), title.clone(), alias.clone()));
        out.push((
            m.start(),
            PartialProvision {
                law_title: title,
                alias,
                article,
                paragraph: para,
                item,
                surface: m.as_str().to_string(),
            },
        ));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kanji_numbers() {
        assert_eq!(parse_jp_number("九"), Some(9));
        assert_eq!(parse_jp_number("十一"), Some(11));
        assert_eq!(parse_jp_number("二百四十二"), Some(242));
        assert_eq!(parse_jp_number("２４２"), Some(242));
        assert_eq!(parse_jp_number("0"), None);
    }

    #[test]
    fn forward_title_stops_at_lowercase_and_articles() {
        assert_eq!(
            scan_title_forward("Act on Lunar Water Rights applies").unwrap().0,
            "Act on Lunar Water Rights"
        );
        assert_eq!(
            scan_title_forward("Nationality Act and Article 3").unwrap().0,
            "Nationality Act"
        );
        assert!(scan_title_forward("weather").is_none());
    }

    #[test]
    fn backward_title() {
        assert_eq!(
            scan_title_backward("Therefore the Court applies the Local Autonomy Act").unwrap().0,
            "Local Autonomy Act"
        );
        assert_eq!(scan_title_backward("Act on Lunar Water Rights").unwrap().0, "Act on Lunar Water Rights");
    }
}
