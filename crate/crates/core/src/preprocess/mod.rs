//! Text normalization: raw post text to token sequence.
//!
//! The stages run in a fixed order; changing it changes tokens, so the order
//! is part of the model format (see [`VERSION`]):
//!
//! 1. strip emoticons (they carry the label, never features)
//! 2. replace URLs with the sentinel `URL`
//! 3. replace @-mentions with the sentinel `USERNAME`
//! 4. lowercase everything outside sentinels
//! 5. squash runs of 3+ repeated characters down to 2
//! 6. split on whitespace, trim non-alphanumeric edge characters
//! 7. stem lowercase alphabetic tokens
//!
//! Output tokens are never empty and never contain whitespace; URLs and
//! mentions survive only as their sentinel tokens.

mod porter;

pub use porter::stem;

use std::sync::LazyLock;

use regex::Regex;

use crate::corpus::strip_emoticons;

/// Sentinel token standing in for any URL.
pub const URL_TOKEN: &str = "URL";

/// Sentinel token standing in for any @-mention.
pub const MENTION_TOKEN: &str = "USERNAME";

/// Version tag for the normalization rules. Persisted in model bundles;
/// classifying with a bundle built under a different version is an error.
pub const VERSION: u32 = 1;

/// Scheme-prefixed or www-prefixed runs of non-whitespace. Schemes are
/// case-insensitive; `www.` must start at a word boundary so "awww.com"
/// survives.
static URL_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)(?:https?://|\bwww\.)\S+").expect("static pattern compiles"));

/// Replaces every URL with [`URL_TOKEN`].
pub fn replace_urls(text: &str) -> String {
    URL_RE.replace_all(text, URL_TOKEN).into_owned()
}

fn is_handle_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

/// Replaces every @-mention with [`MENTION_TOKEN`]. A mention is `@` at the
/// start of the text or after whitespace, followed by at least one handle
/// character; "a@b" and "@@x" are left alone.
pub fn replace_mentions(text: &str) -> String {
    let chars: Vec<char> = text.chars().collect();
    let mut out = String::with_capacity(text.len());
    let mut i = 0;
    while i < chars.len() {
        let at_boundary = i == 0 || chars[i - 1].is_whitespace();
        if chars[i] == '@' && at_boundary && chars.get(i + 1).is_some_and(|&c| is_handle_char(c)) {
            let mut j = i + 1;
            while j < chars.len() && is_handle_char(chars[j]) {
                j += 1;
            }
            out.push_str(MENTION_TOKEN);
            i = j;
        } else {
            out.push(chars[i]);
            i += 1;
        }
    }
    out
}

/// Caps every run of a repeated character at two ("goooood" becomes "good").
pub fn squash_repeats(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut prev = None;
    let mut run = 0usize;
    for c in text.chars() {
        if prev == Some(c) {
            run += 1;
        } else {
            prev = Some(c);
            run = 1;
        }
        if run <= 2 {
            out.push(c);
        }
    }
    out
}

/// Lowercases everything except occurrences of the sentinel tokens, which
/// must keep their exact spelling.
fn lowercase_outside_sentinels(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while !rest.is_empty() {
        if let Some(tail) = rest.strip_prefix(MENTION_TOKEN) {
            out.push_str(MENTION_TOKEN);
            rest = tail;
        } else if let Some(tail) = rest.strip_prefix(URL_TOKEN) {
            out.push_str(URL_TOKEN);
            rest = tail;
        } else {
            let c = rest.chars().next().expect("rest is non-empty");
            out.extend(c.to_lowercase());
            rest = &rest[c.len_utf8()..];
        }
    }
    out
}

/// Splits on whitespace and trims non-alphanumeric characters from token
/// edges (dropping "#" from hashtags and bare punctuation entirely).
/// Interior punctuation such as apostrophes survives.
fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|raw| raw.trim_matches(|c: char| !c.is_alphanumeric()))
        .filter(|t| !t.is_empty())
        .map(str::to_owned)
        .collect()
}

/// Runs the full normalization pipeline on one post.
pub fn preprocess(text: &str) -> Vec<String> {
    let text = strip_emoticons(text);
    let text = replace_urls(&text);
    let text = replace_mentions(&text);
    let text = lowercase_outside_sentinels(&text);
    let text = squash_repeats(&text);
    tokenize(&text)
        .into_iter()
        .map(|t| {
            if t == URL_TOKEN || t == MENTION_TOKEN {
                t
            } else {
                stem(&t)
            }
        })
        .collect()
}
