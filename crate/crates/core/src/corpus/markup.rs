//! Lenient markup ingestion.
//!
//! Tags are dropped, block-level tags and newlines end a line, `<script>`/`<style>`
//! bodies are discarded and common entities are decoded. Heading tags force a heading
//! at their own level; every other line goes through the [`HeadingDetector`].

use super::{
    overview_from_sections, segment_id, CorpusError, HeadingDetector, JudgmentDoc, RawDocument,
    Section, Segment,
};

const BLOCK_TAGS: &[&str] = &[
    "address", "article", "aside", "blockquote", "body", "br", "dd", "div", "dl", "dt",
    "fieldset", "figcaption", "figure", "footer", "form", "h1", "h2", "h3", "h4", "h5", "h6",
    "head", "header", "hr", "html", "li", "main", "nav", "ol", "p", "pre", "section", "table",
    "tbody", "td", "tfoot", "th", "thead", "title", "tr", "ul",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Line {
    pub text: String,
    /// Level of the enclosing `<hN>` tag, if any.
    pub tag_level: Option<u8>,
}

struct LineBuilder {
    lines: Vec<Line>,
    current: String,
    heading_level: Option<u8>,
}

impl LineBuilder {
    fn flush(&mut self) {
        let text = crate::text::normalize_ws(&self.current);
        if !text.is_empty() {
            self.lines.push(Line {
                text,
                tag_level: self.heading_level,
            });
        }
        self.current.clear();
    }
}

fn malformed(doc_id: &str, offset: usize, reason: &str) -> CorpusError {
    CorpusError::MalformedMarkup {
        doc_id: doc_id.to_string(),
        offset,
        reason: reason.to_string(),
    }
}

fn decode_entity(entity: &str) -> Option<char> {
    match entity {
        "amp" => Some('&'),
        "lt" => Some('<'),
        "gt" => Some('>'),
        "quot" => Some('"'),
        "apos" | "#39" => Some('\''),
        "nbsp" => Some(' '),
        _ => {
            let num = entity.strip_prefix('#')?;
            let code = match num.strip_prefix(['x', 'X']) {
                Some(hex) => u32::from_str_radix(hex, 16).ok()?,
                None => num.parse().ok()?,
            };
            char::from_u32(code)
        }
    }
}

/// Splits markup into text lines.
pub(crate) fn tokenize(doc_id: &str, src: &str) -> Result<Vec<Line>, CorpusError> {
    let mut b = LineBuilder {
        lines: Vec::new(),
        current: String::new(),
        heading_level: None,
    };
    let bytes = src.as_bytes();
    let mut i = 0;
    while i < src.len() {
        let rest = &src[i..];
        let c = rest.chars().next().expect("in bounds");
        match c {
            '<' => {
                let next = rest[1..].chars().next();
                if rest.starts_with("<!--") {
                    let end = rest
                        .find("-->")
                        .ok_or_else(|| malformed(doc_id, i, "unterminated comment"))?;
                    i += end + 3;
                    continue;
                }
                let is_tag = next.is_some_and(|n| n.is_ascii_alphabetic() || n == '/' || n == '!' || n == '?');
                if !is_tag {
                    // Recovery rule: a bare `<` is literal text.
                    b.current.push('<');
                    i += 1;
                    continue;
                }
                let close = rest
                    .find('>')
                    .ok_or_else(|| malformed(doc_id, i, "tag is never closed"))?;
                let inner = &rest[1..close];
                let closing = inner.starts_with('/');
                let name: String = inner
                    .trim_start_matches('/')
                    .chars()
                    .take_while(|c| c.is_ascii_alphanumeric())
                    .collect::<String>()
                    .to_ascii_lowercase();
                i += close + 1;

                if !closing && (name == "script" || name == "style") {
                    let end_tag = format!("</{name}");
                    let lower = src[i..].to_ascii_lowercase();
                    let end = lower
                        .find(&end_tag)
                        .ok_or_else(|| malformed(doc_id, i, "unterminated script/style"))?;
                    let after = src[i + end..]
                        .find('>')
                        .ok_or_else(|| malformed(doc_id, i + end, "tag is never closed"))?;
                    i += end + after + 1;
                    continue;
                }
                if BLOCK_TAGS.contains(&name.as_str()) {
                    b.flush();
                    let heading = name.len() == 2
                        && name.starts_with('h')
                        && name.as_bytes()[1].is_ascii_digit();
                    if heading {
                        b.heading_level = if closing {
                            None
                        } else {
                            Some(name.as_bytes()[1] - b'0')
                        };
                    }
                }
            }
            '&' => {
                let semi = rest[..rest.len().min(12)].find(';');
                match semi.and_then(|s| decode_entity(&rest[1..s]).map(|ch| (s, ch))) {
                    Some((s, ch)) => {
                        b.current.push(ch);
                        i += s + 1;
                    }
                    None => {
                        b.current.push('&');
                        i += 1;
                    }
                }
            }
            '\n' => {
                b.flush();
                i += 1;
            }
            _ => {
                b.current.push(c);
                i += c.len_utf8();
            }
        }
        debug_assert!(i <= bytes.len());
    }
    b.flush();
    Ok(b.lines)
}

/// Markup with tags removed, one text line per output line.
pub fn strip_markup(src: &str) -> Result<String, CorpusError> {
    Ok(tokenize("<input>", src)?
        .into_iter()
        .map(|l| l.text)
        .collect::<Vec<_>>()
        .join("\n"))
}

struct Item {
    text: String,
    heading_level: Option<u8>,
}

fn build_section(
    doc_id: &str,
    items: &[Item],
    pos: &mut usize,
    level: u8,
    path: Vec<usize>,
) -> Section {
    let mut sec = Section {
        path: path.clone(),
        segments: Vec::new(),
        children: Vec::new(),
    };
    let push = |sec: &mut Section, text: &str, heading: bool| {
        let ord = sec.segments.len();
        sec.segments.push(Segment {
            segment_id: segment_id(doc_id, &path, ord),
            text: text.to_string(),
            is_heading: heading,
            section_path: path.clone(),
        });
    };
    if level > 0 {
        let it = &items[*pos];
        push(&mut sec, &it.text, true);
        *pos += 1;
    }
    while *pos < items.len() && items[*pos].heading_level.is_none() {
        push(&mut sec, &items[*pos].text, false);
        *pos += 1;
    }
    while *pos < items.len() {
        let child_level = items[*pos].heading_level.expect("body consumed above");
        if child_level <= level {
            break;
        }
        let mut child_path = sec.path.clone();
        child_path.push(sec.children.len() + 1);
        let child = build_section(doc_id, items, pos, child_level, child_path);
        sec.children.push(child);
    }
    sec
}

pub(crate) fn parse_markup(
    raw: &RawDocument,
    detector: &HeadingDetector,
) -> Result<JudgmentDoc, CorpusError> {
    let lines = tokenize(&raw.doc_id, &raw.text)?;
    if lines.is_empty() {
        return Err(CorpusError::EmptyDocument(raw.doc_id.clone()));
    }
    let items: Vec<Item> = lines
        .into_iter()
        .map(|l| {
            let heading_level = match l.tag_level {
                Some(n) => Some(n.max(1)),
                None if detector.is_heading(&l.text) => Some(detector.level(&l.text)),
                None => None,
            };
            Item {
                text: l.text,
                heading_level,
            }
        })
        .collect();
    let mut pos = 0;
    let root = build_section(&raw.doc_id, &items, &mut pos, 0, Vec::new());
    debug_assert_eq!(pos, items.len());
    let mut doc = JudgmentDoc {
        doc_id: raw.doc_id.clone(),
        case_overview: String::new(),
        root,
        gold: None,
    };
    doc.case_overview = overview_from_sections(&doc, detector);
    Ok(doc)
}
