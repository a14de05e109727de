//! Locating numeric literals in free text.
//!
//! [`find_numbers`] reproduces the matches of
//! `[-]?(?:(?:0(?!\.[0-9]))|(?:[0-9]*[.][0-9]+)|(?:[1-9][0-9]*))`
//! under leftmost, first-alternative-wins semantics. The unsigned variant
//! drops the optional sign. Scientific notation is not unified: `1e5` is two
//! literals.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Significant digits kept in the first part of a split literal.
pub const SPLIT_DIGITS: usize = 16;
/// Literals with more significant digits than this are split.
pub const MAX_LITERAL_DIGITS: usize = 17;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }
}

fn is_digit(b: Option<&u8>) -> bool {
    matches!(b, Some(b'0'..=b'9'))
}

fn digit_run(s: &[u8], mut i: usize) -> usize {
    while is_digit(s.get(i)) {
        i += 1;
    }
    i
}

/// End of an unsigned literal starting at `i`, trying the alternatives in order.
fn match_unsigned(s: &[u8], i: usize) -> Option<usize> {
    let c = s.get(i)?;
    if *c == b'0' && !(s.get(i + 1) == Some(&b'.') && is_digit(s.get(i + 2))) {
        return Some(i + 1);
    }
    let j = digit_run(s, i);
    if s.get(j) == Some(&b'.') && is_digit(s.get(j + 1)) {
        return Some(digit_run(s, j + 1));
    }
    if (b'1'..=b'9').contains(c) {
        return Some(j);
    }
    None
}

fn match_at(s: &[u8], i: usize, signed: bool) -> Option<usize> {
    if signed && s.get(i) == Some(&b'-') {
        if let Some(e) = match_unsigned(s, i + 1) {
            return Some(e);
        }
    }
    match_unsigned(s, i)
}

/// All non-overlapping literal spans, left to right.
pub fn find_numbers(text: &str, signed: bool) -> Vec<Span> {
    let s = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < s.len() {
        match match_at(s, i, signed) {
            Some(end) => {
                out.push(Span { start: i, end });
                i = end;
            }
            None => i += 1,
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Item {
    Text {
        start: usize,
        end: usize,
        text: String,
    },
    Number {
        start: usize,
        end: usize,
        literal: String,
        /// `null` in JSON when the part alone overflows.
        value: Option<f64>,
        /// 0 for an ordinary literal, 2 for each half of a split one.
        overflow_parts: u8,
        #[serde(default, skip_serializing_if = "is_zero")]
        part: u8,
    },
}

fn is_zero(v: &u8) -> bool {
    *v == 0
}

impl Item {
    pub fn span(&self) -> Span {
        match self {
            Item::Text { start, end, .. } | Item::Number { start, end, .. } => Span {
                start: *start,
                end: *end,
            },
        }
    }

    pub fn source(&self) -> &str {
        match self {
            Item::Text { text, .. } => text,
            Item::Number { literal, .. } => literal,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TokenStream {
    pub items: Vec<Item>,
}

fn parse_literal(lit: &str) -> Option<f64> {
    let v: f64 = lit.parse().ok()?;
    v.is_finite().then_some(v)
}

/// Byte offset just past the `n`-th significant digit, if the literal has
/// more than `n` of them counting from the first non-zero digit.
fn split_point(lit: &str, n: usize) -> Option<usize> {
    let mut seen = 0;
    for (i, b) in lit.bytes().enumerate() {
        if b.is_ascii_digit() && (seen > 0 || b != b'0') {
            seen += 1;
            if seen == n {
                return Some(i + 1);
            }
        }
    }
    None
}

fn significant_digits(lit: &str) -> usize {
    let digits: Vec<u8> = lit.bytes().filter(u8::is_ascii_digit).collect();
    let first = digits.iter().position(|&d| d != b'0');
    let last = digits.iter().rposition(|&d| d != b'0');
    match (first, last) {
        (Some(f), Some(l)) => l - f + 1,
        _ => 0,
    }
}

fn needs_split(lit: &str) -> bool {
    significant_digits(lit) > MAX_LITERAL_DIGITS || parse_literal(lit).is_none()
}

fn push_number(items: &mut Vec<Item>, text: &str, span: Span) {
    let lit = &text[span.start..span.end];
    let cut = if needs_split(lit) {
        split_point(lit, SPLIT_DIGITS).filter(|&c| c < lit.len())
    } else {
        None
    };
    match cut {
        None => items.push(Item::Number {
            start: span.start,
            end: span.end,
            literal: lit.to_string(),
            value: parse_literal(lit),
            overflow_parts: 0,
            part: 0,
        }),
        Some(c) => {
            let mid = span.start + c;
            for (part, (a, b)) in [(span.start, mid), (mid, span.end)].into_iter().enumerate() {
                let piece = &text[a..b];
                items.push(Item::Number {
                    start: a,
                    end: b,
                    literal: piece.to_string(),
                    value: parse_literal(piece),
                    overflow_parts: 2,
                    part: part as u8,
                });
            }
        }
    }
}

/// Split `text` into text spans and number items using the signed or
/// unsigned literal pattern.
pub fn tokenize(text: &str, signed: bool) -> TokenStream {
    let mut items = Vec::new();
    let mut pos = 0;
    for span in find_numbers(text, signed) {
        if span.start > pos {
            items.push(Item::Text {
                start: pos,
                end: span.start,
                text: text[pos..span.start].to_string(),
            });
        }
        push_number(&mut items, text, span);
        pos = span.end;
    }
    if pos < text.len() {
        items.push(Item::Text {
            start: pos,
            end: text.len(),
            text: text[pos..].to_string(),
        });
    }
    TokenStream { items }
}

/// Signed tokenization, as used for BitTokens and xVal.
pub fn tokenize_with_num(text: &str) -> TokenStream {
    tokenize(text, true)
}

/// Reassemble the source text. Fails if spans are not contiguous or do not
/// agree with the stored text.
pub fn detokenize(stream: &TokenStream) -> Result<String> {
    let mut out = String::new();
    for (k, item) in stream.items.iter().enumerate() {
        let span = item.span();
        if span.start != out.len() || span.len() != item.source().len() {
            return Err(Error::Format(format!(
                "token {k}: span {}..{} does not continue at byte {}",
                span.start,
                span.end,
                out.len()
            )));
        }
        if let Item::Number {
            overflow_parts: 2,
            part: 1,
            ..
        } = item
        {
            let prev_is_head = matches!(
                k.checked_sub(1).map(|j| &stream.items[j]),
                Some(Item::Number { overflow_parts: 2, part: 0, .. })
            );
            if !prev_is_head {
                return Err(Error::Format(format!(
                    "token {k}: overflow tail without its head"
                )));
            }
        }
        out.push_str(item.source());
    }
    Ok(out)
}

pub fn write_jsonl<W: Write>(stream: &TokenStream, out: &mut W) -> Result<()> {
    for item in &stream.items {
        serde_json::to_writer(&mut *out, item).map_err(|e| Error::json("token stream", e))?;
        out.write_all(b"\n").map_err(|e| Error::io("token stream", e))?;
    }
    Ok(())
}

pub fn read_jsonl(text: &str) -> Result<TokenStream> {
    let items = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(|e| Error::json("token stream", e)))
        .collect::<Result<_>>()?;
    Ok(TokenStream { items })
}
