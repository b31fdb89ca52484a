//! Section segmentation of clinical notes.
//!
//! A line opens a section when it looks like a header: a short phrase
//! ending in a colon, a short all-uppercase line, or a phrase from a header
//! lexicon. Sections run from one header line to the next.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use crate::dataset::{AnswerSpan, ClinicalNote, QAPair};
use crate::text::CharSpan;
use crate::{Error, Result};

pub const MAX_HEADER_TOKENS: usize = 6;

const DEFAULT_LEXICON: &str = include_str!("../data/header_lexicon.txt");

/// Lowercase header phrases matched against colon-stripped lines.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeaderLexicon {
    phrases: HashSet<String>,
}

impl Default for HeaderLexicon {
    fn default() -> Self {
        Self::parse(DEFAULT_LEXICON)
    }
}

impl HeaderLexicon {
    pub fn new<I, S>(phrases: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Self {
            phrases: phrases
                .into_iter()
                .map(|p| p.as_ref().trim().to_lowercase())
                .filter(|p| !p.is_empty())
                .collect(),
        }
    }

    /// One phrase per line; blank lines are ignored.
    pub fn parse(text: &str) -> Self {
        Self::new(text.lines())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        fs::read_to_string(path)
            .map(|t| Self::parse(&t))
            .map_err(|e| Error::io(path, e))
    }

    pub fn contains(&self, phrase: &str) -> bool {
        self.phrases.contains(phrase)
    }

    pub fn len(&self) -> usize {
        self.phrases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phrases.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Section {
    pub header: Option<String>,
    /// Line index of the header; `None` for the preamble.
    pub header_line: Option<usize>,
    pub start: usize,
    pub end: usize,
}

impl Section {
    pub fn span(&self) -> CharSpan {
        CharSpan::new(self.start, self.end)
    }
}

pub fn is_header_line(line: &str, lexicon: &HeaderLexicon) -> bool {
    let line = line.trim();
    if line.is_empty() {
        return false;
    }
    // rule a: "<phrase>:"
    if let Some(phrase) = line.strip_suffix(':') {
        let n = phrase.split_whitespace().count();
        if (1..=MAX_HEADER_TOKENS).contains(&n) {
            return true;
        }
    }
    // rule b: short and all uppercase
    let mut letters = line.chars().filter(|c| c.is_alphabetic()).peekable();
    if letters.peek().is_some()
        && letters.all(|c| !c.is_lowercase())
        && line.split_whitespace().count() <= MAX_HEADER_TOKENS
    {
        return true;
    }
    // rule c: lexicon phrase
    let stripped = line.trim_end_matches(':').trim().to_lowercase();
    lexicon.contains(&stripped)
}

/// Indices of the note lines recognized as section headers, ascending.
pub fn detect_headers(note: &ClinicalNote, lexicon: &HeaderLexicon) -> Vec<usize> {
    (0..note.lines().len())
        .filter(|&i| note.line_text(i).is_some_and(|l| is_header_line(l, lexicon)))
        .collect()
}

/// Sections starting at each header line, plus a headerless preamble when
/// text precedes the first header. Spans partition the whole note text.
pub fn segment_note(note: &ClinicalNote, headers: &[usize]) -> Vec<Section> {
    let lines = note.lines();
    let mut headers: Vec<usize> = headers.iter().copied().filter(|&h| h < lines.len()).collect();
    headers.sort_unstable();
    headers.dedup();

    let len = note.char_len();
    let mut sections = Vec::with_capacity(headers.len() + 1);
    let first_start = headers.first().map_or(len, |&h| lines[h].start);
    if first_start > 0 || headers.is_empty() {
        sections.push(Section {
            header: None,
            header_line: None,
            start: 0,
            end: first_start,
        });
    }
    for (k, &h) in headers.iter().enumerate() {
        let end = headers.get(k + 1).map_or(len, |&next| lines[next].start);
        sections.push(Section {
            header: note.line_text(h).map(|t| t.trim().to_string()),
            header_line: Some(h),
            start: lines[h].start,
            end,
        });
    }
    sections
}

/// Context restricted to the section holding the first answer that fits
/// wholly inside one section; that section's answers are re-based onto it.
pub fn shorten_context(qa: &QAPair, note: &ClinicalNote, sections: &[Section]) -> Result<(String, Vec<AnswerSpan>)> {
    let section = qa
        .answers
        .iter()
        .find_map(|a| sections.iter().find(|s| s.span().encloses(a.span())))
        .ok_or_else(|| Error::CrossesSection {
            question_id: qa.question_id.clone(),
        })?;
    let text = note
        .slice(section.start, section.end)
        .ok_or_else(|| Error::integrity(&qa.question_id, "section lies outside the note"))?
        .to_string();
    let answers = qa
        .answers
        .iter()
        .filter(|a| section.span().encloses(a.span()))
        .map(|a| AnswerSpan::new(a.text.clone(), a.answer_start - section.start))
        .collect();
    Ok((text, answers))
}
