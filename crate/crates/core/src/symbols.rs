//! Textual conventions shared by every stage of the pipeline.
//!
//! A serialized stream is a list of space-free symbols. Three kinds of
//! symbol are reserved:
//!
//! * `▁` separates words,
//! * `</cN>` closes one character's sub-character sequence (tag `N`),
//! * a trailing `@@` marks a BPE piece that continues into the next one.
//!
//! Every other symbol is *atomic*: a single grapheme, or a backslash followed
//! by a single grapheme when the grapheme would otherwise be ambiguous. BPE
//! merges concatenate atomic symbols, so [`split_atomic`] can always recover
//! the original units from a merged symbol.

use std::collections::BTreeSet;

use unicode_segmentation::UnicodeSegmentation;

/// Separator rendered between the words of a stream.
pub const WORD_BOUNDARY: &str = "\u{2581}";

/// Suffix on BPE pieces that are followed by another piece of the same word.
pub const CONTINUATION: &str = "@@";

/// Prefix that forces a grapheme to be read as a passthrough symbol.
pub const ESCAPE: char = '\\';

/// Substituted for spans that cannot be decoded in lenient mode.
pub const UNKNOWN_GRAPHEME: &str = "\u{FFFD}";

/// Graphemes that always need escaping because they start reserved syntax.
const RESERVED: [&str; 4] = ["\\", "@", "<", WORD_BOUNDARY];

/// Renders the end-of-character marker carrying `tag`.
pub fn eoc_token(tag: u32) -> String {
    format!("</c{tag}>")
}

/// Parses `</cN>` into `N`.
pub fn parse_eoc(symbol: &str) -> Option<u32> {
    let digits = symbol.strip_prefix("</c")?.strip_suffix('>')?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    // reject leading zeros so the rendering is canonical
    if digits.len() > 1 && digits.starts_with('0') {
        return None;
    }
    digits.parse().ok()
}

/// Extended grapheme clusters of `text`.
pub fn graphemes(text: &str) -> Vec<&str> {
    text.graphemes(true).collect()
}

pub fn is_single_grapheme(text: &str) -> bool {
    let mut it = text.graphemes(true);
    it.next().is_some() && it.next().is_none()
}

/// True for graphemes that collide with reserved syntax.
pub fn is_reserved(grapheme: &str) -> bool {
    RESERVED.contains(&grapheme)
}

/// Renders a passthrough grapheme, escaping it when it is reserved or when it
/// collides with a unit symbol of the active inventory.
pub fn render_passthrough(grapheme: &str, inventory: &BTreeSet<String>) -> String {
    if is_reserved(grapheme) || inventory.contains(grapheme) {
        let mut s = String::with_capacity(grapheme.len() + 1);
        s.push(ESCAPE);
        s.push_str(grapheme);
        s
    } else {
        grapheme.to_string()
    }
}

/// Strips the escape prefix of a rendered passthrough symbol, if present.
pub fn unescape(symbol: &str) -> Option<&str> {
    let rest = symbol.strip_prefix(ESCAPE)?;
    if rest.is_empty() {
        None
    } else {
        Some(rest)
    }
}

/// True when `symbol` lexes as exactly one atomic unit.
pub fn is_atomic(symbol: &str) -> bool {
    let parts = split_atomic(symbol);
    parts.len() == 1 && parts[0] == symbol
}

/// Splits a (possibly merged) symbol into its atomic units.
pub fn split_atomic(symbol: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut rest = symbol;
    while !rest.is_empty() {
        let len = atomic_prefix_len(rest);
        out.push(&rest[..len]);
        rest = &rest[len..];
    }
    out
}

fn atomic_prefix_len(s: &str) -> usize {
    if let Some(after) = s.strip_prefix("</c") {
        let digits = after.bytes().take_while(u8::is_ascii_digit).count();
        if digits > 0 && after[digits..].starts_with('>') {
            return 3 + digits + 1;
        }
    }
    if let Some(after) = s.strip_prefix(ESCAPE) {
        if let Some(g) = after.graphemes(true).next() {
            return ESCAPE.len_utf8() + g.len();
        }
    }
    s.graphemes(true).next().map_or(s.len(), str::len)
}
