//! Punctuation-preserving text normalization.
//!
//! Headlines keep their punctuation: heavy punctuation use is itself a
//! classification signal. Only punctuation strictly inside a word (a
//! non-punctuation, non-whitespace character on both sides) is removed,
//! rejoining words that markup or typos split apart. Boundary punctuation
//! (next to whitespace or the string edges) is left alone.

use unicode_normalization::UnicodeNormalization;

/// Default punctuation inventory: ASCII punctuation plus the Bangla danda
/// marks and common typographic quotes, dashes, and ellipsis.
pub fn default_punct() -> Vec<char> {
    let mut list: Vec<char> = r##"!"#$%&'()*+,-./:;<=>?@[\]^_`{|}~"##.chars().collect();
    list.extend(['।', '॥', '‘', '’', '“', '”', '–', '—', '…']);
    list
}

/// Normalizes one text: NFC composition, HTML tags and URLs stripped,
/// mid-word punctuation removed, whitespace collapsed.
pub fn normalize_text(raw: &str, punct_list: &[char]) -> String {
    let composed: String = raw.nfc().collect();
    let no_tags = strip_html_tags(&composed);
    let no_urls = strip_urls(&no_tags);
    let rejoined = remove_midword_punct(&no_urls, punct_list);
    collapse_whitespace(&rejoined)
}

fn strip_html_tags(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut depth = 0usize;
    for c in text.chars() {
        match c {
            '<' => {
                depth += 1;
                out.push(' ');
            }
            '>' if depth > 0 => depth -= 1,
            _ if depth == 0 => out.push(c),
            _ => {}
        }
    }
    out
}

fn strip_urls(text: &str) -> String {
    text.split_whitespace()
        .map(|tok| {
            let lower = tok.to_lowercase();
            if lower.starts_with("http://")
                || lower.starts_with("https://")
                || lower.starts_with("www.")
            {
                ""
            } else {
                tok
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn remove_midword_punct(text: &str, punct_list: &[char]) -> String {
    let chars: Vec<char> = text.chars().collect();
    let is_word = |c: &char| !c.is_whitespace() && !punct_list.contains(c);
    chars
        .iter()
        .enumerate()
        .filter(|(i, c)| {
            if !punct_list.contains(c) {
                return true;
            }
            // Keep unless both neighbors (in the original string) are word chars.
            let prev_word = *i > 0 && is_word(&chars[i - 1]);
            let next_word = i + 1 < chars.len() && is_word(&chars[i + 1]);
            !(prev_word && next_word)
        })
        .map(|(_, c)| *c)
        .collect()
}

fn collapse_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}
