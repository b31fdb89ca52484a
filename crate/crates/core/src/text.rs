//! Character-offset text utilities.
//!
//! All offsets exchanged by this crate count Unicode scalar values, not bytes.

/// Half-open span of character offsets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CharSpan {
    pub start: usize,
    pub end: usize,
}

impl CharSpan {
    pub fn new(start: usize, end: usize) -> Self {
        Self { start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    pub fn contains(&self, offset: usize) -> bool {
        self.start <= offset && offset < self.end
    }

    pub fn encloses(&self, other: CharSpan) -> bool {
        self.start <= other.start && other.end <= self.end
    }
}

/// Maps character offsets of a string to byte offsets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CharIndex {
    // byte offset of every char, plus the total byte length as a sentinel
    bytes: Vec<usize>,
}

impl CharIndex {
    pub fn new(text: &str) -> Self {
        let mut bytes: Vec<usize> = text.char_indices().map(|(b, _)| b).collect();
        bytes.push(text.len());
        Self { bytes }
    }

    pub fn char_len(&self) -> usize {
        self.bytes.len() - 1
    }

    pub fn byte_offset(&self, char_offset: usize) -> Option<usize> {
        self.bytes.get(char_offset).copied()
    }

    pub fn slice<'a>(&self, text: &'a str, start: usize, end: usize) -> Option<&'a str> {
        if start > end {
            return None;
        }
        let b0 = self.byte_offset(start)?;
        let b1 = self.byte_offset(end)?;
        text.get(b0..b1)
    }
}

/// Number of whitespace-separated tokens in raw text.
pub fn whitespace_token_count(text: &str) -> usize {
    text.split_whitespace().count()
}

/// A whitespace token with its character span in the source text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    pub span: CharSpan,
}

pub fn whitespace_tokens(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    let mut start = 0;
    let mut offset = 0;
    for ch in text.chars() {
        if ch.is_whitespace() {
            if !current.is_empty() {
                tokens.push(Token {
                    text: std::mem::take(&mut current),
                    span: CharSpan::new(start, offset),
                });
            }
        } else {
            if current.is_empty() {
                start = offset;
            }
            current.push(ch);
        }
        offset += 1;
    }
    if !current.is_empty() {
        tokens.push(Token {
            text: current,
            span: CharSpan::new(start, offset),
        });
    }
    tokens
}

/// Spans of the newline-delimited lines of `text`, newline characters excluded.
///
/// A trailing newline does not open an extra empty line; empty text has no lines.
pub fn line_spans(text: &str) -> Vec<CharSpan> {
    let mut spans = Vec::new();
    if text.is_empty() {
        return spans;
    }
    let mut start = 0;
    let mut offset = 0;
    for ch in text.chars() {
        if ch == '\n' {
            spans.push(CharSpan::new(start, offset));
            start = offset + 1;
        }
        offset += 1;
    }
    if start < offset {
        spans.push(CharSpan::new(start, offset));
    }
    spans
}

/// Shrinks `span` of `text` past leading and trailing whitespace.
pub fn trim_span(text: &str, index: &CharIndex, span: CharSpan) -> CharSpan {
    let slice = index.slice(text, span.start, span.end).unwrap_or("");
    let leading = slice.chars().take_while(|c| c.is_whitespace()).count();
    let trailing = slice.chars().rev().take_while(|c| c.is_whitespace()).count();
    if leading == span.len() {
        return CharSpan::new(span.start, span.start);
    }
    CharSpan::new(span.start + leading, span.end - trailing)
}
