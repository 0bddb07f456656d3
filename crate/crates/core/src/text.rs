//! Small text helpers shared by the parsers, the mock backends and the evaluators.

use std::collections::BTreeSet;

/// Collapses every run of whitespace into one ASCII space and trims the ends.
pub fn normalize_ws(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for word in s.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    out
}

/// True when `needle` occurs in `haystack` after whitespace normalization of both.
pub fn contains_normalized(haystack: &str, needle: &str) -> bool {
    let needle = normalize_ws(needle);
    !needle.is_empty() && normalize_ws(haystack).contains(&needle)
}

const STOPWORDS: &[&str] = &[
    "a", "an", "and", "are", "as", "at", "be", "been", "by", "for", "from", "has", "have", "he",
    "her", "his", "in", "is", "it", "its", "of", "on", "or", "she", "that", "the", "their", "they",
    "this", "to", "was", "were", "which", "with",
];

/// Lowercased alphanumeric tokens with stopwords removed.
pub fn content_tokens(s: &str) -> BTreeSet<String> {
    s.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_lowercase())
        .filter(|t| !STOPWORDS.contains(&t.as_str()))
        .collect()
}

/// Shared content tokens divided by the token count of the *smaller* text.
///
/// Used by the mock linker: a short fact fully restated inside a long application scores 1.0.
pub fn containment_overlap(a: &str, b: &str) -> f64 {
    let (ta, tb) = (content_tokens(a), content_tokens(b));
    let denom = ta.len().min(tb.len());
    if denom == 0 {
        return 0.0;
    }
    ta.intersection(&tb).count() as f64 / denom as f64
}

/// Shared content tokens divided by the token count of the *larger* text.
///
/// Symmetric and strict; used to match annotated spans.
pub fn token_overlap(a: &str, b: &str) -> f64 {
    let (ta, tb) = (content_tokens(a), content_tokens(b));
    let denom = ta.len().max(tb.len());
    if denom == 0 {
        return if normalize_ws(a) == normalize_ws(b) { 1.0 } else { 0.0 };
    }
    ta.intersection(&tb).count() as f64 / denom as f64
}

/// Splits text into sentences on `.`, `!`, `?` and the CJK full stop.
///
/// A period directly followed by a non-space character (as in `Art.3`) does not end a sentence.
pub fn split_sentences(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut chars = text.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        let terminal = match c {
            '。' | '！' | '？' => true,
            '.' | '!' | '?' => chars.peek().map_or(true, |(_, n)| n.is_whitespace()),
            _ => false,
        };
        if terminal {
            let end = i + c.len_utf8();
            let s = text[start..end].trim();
            if !s.is_empty() {
                out.push(s);
            }
            start = end;
        }
    }
    let tail = text[start..].trim();
    if !tail.is_empty() {
        out.push(tail);
    }
    out
}

/// 64-bit FNV-1a. Stable across platforms and releases, unlike `DefaultHasher`.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Lowercase hex SHA-256 of `bytes`, truncated to `len` characters.
pub fn sha256_hex(bytes: &[u8], len: usize) -> String {
    use sha2::{Digest, Sha256};
    let digest = Sha256::digest(bytes);
    let mut s = String::with_capacity(64);
    for b in digest.iter() {
        s.push_str(&format!("{b:02x}"));
    }
    s.truncate(len);
    s
}

/// Folds full-width ASCII variants and the ideographic space to ASCII, then lowercases
/// and normalizes whitespace.
pub fn fold_width_case(s: &str) -> String {
    let folded: String = s
        .chars()
        .map(|c| match c {
            '\u{3000}' => ' ',
            '\u{FF01}'..='\u{FF5E}' => char::from_u32(c as u32 - 0xFEE0).unwrap_or(c),
            _ => c,
        })
        .collect();
    normalize_ws(&folded.to_lowercase())
}
