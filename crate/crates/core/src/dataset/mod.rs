//! Corpus data model and the JSON interchange format.

mod io;
mod split;
mod stats;
mod validate;

use serde::{Deserialize, Serialize};

use crate::text::{line_spans, CharIndex, CharSpan};

pub use io::{from_json_str, load_dataset, save_dataset, to_json_string};
pub use split::{split_by_documents, split_counts, DatasetSplit};
pub use stats::{dataset_stats, StatsReport};
pub use validate::{filter_long_answers, validate_dataset, ValidationReport, Violation};

/// A clinical note with its derived line structure.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "RawNote", into = "RawNote")]
pub struct ClinicalNote {
    note_id: String,
    text: String,
    index: CharIndex,
    lines: Vec<CharSpan>,
}

#[derive(Serialize, Deserialize)]
struct RawNote {
    note_id: String,
    text: String,
}

impl From<RawNote> for ClinicalNote {
    fn from(raw: RawNote) -> Self {
        ClinicalNote::new(raw.note_id, raw.text)
    }
}

impl From<ClinicalNote> for RawNote {
    fn from(note: ClinicalNote) -> Self {
        RawNote {
            note_id: note.note_id,
            text: note.text,
        }
    }
}

impl ClinicalNote {
    pub fn new(note_id: impl Into<String>, text: impl Into<String>) -> Self {
        let text = text.into();
        Self {
            note_id: note_id.into(),
            index: CharIndex::new(&text),
            lines: line_spans(&text),
            text,
        }
    }

    pub fn note_id(&self) -> &str {
        &self.note_id
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    /// Length in characters.
    pub fn char_len(&self) -> usize {
        self.index.char_len()
    }

    pub fn lines(&self) -> &[CharSpan] {
        &self.lines
    }

    pub fn line_text(&self, line: usize) -> Option<&str> {
        let span = self.lines.get(line)?;
        self.slice(span.start, span.end)
    }

    /// Index of the line holding character `offset`, if it is not a newline.
    pub fn line_of(&self, offset: usize) -> Option<usize> {
        let idx = self.lines.partition_point(|l| l.end <= offset);
        self.lines.get(idx).filter(|l| l.contains(offset)).map(|_| idx)
    }

    pub fn slice(&self, start: usize, end: usize) -> Option<&str> {
        self.index.slice(&self.text, start, end)
    }

    pub(crate) fn char_index(&self) -> &CharIndex {
        &self.index
    }
}

/// A gold answer: a verbatim substring of its note.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AnswerSpan {
    pub text: String,
    pub answer_start: usize,
}

impl AnswerSpan {
    pub fn new(text: impl Into<String>, answer_start: usize) -> Self {
        Self {
            text: text.into(),
            answer_start,
        }
    }

    pub fn char_len(&self) -> usize {
        self.text.chars().count()
    }

    pub fn span(&self) -> CharSpan {
        CharSpan::new(self.answer_start, self.answer_start + self.char_len())
    }

    /// Whether the span reproduces its text inside `note`.
    pub fn matches(&self, note: &ClinicalNote) -> bool {
        let span = self.span();
        note.slice(span.start, span.end) == Some(self.text.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QAPair {
    pub question_id: String,
    pub question: String,
    pub note_id: String,
    pub answers: Vec<AnswerSpan>,
    #[serde(default)]
    pub template_id: Option<String>,
    #[serde(default)]
    pub entity_surface: Option<String>,
}

impl QAPair {
    pub fn answer_texts(&self) -> Vec<&str> {
        self.answers.iter().map(|a| a.text.as_str()).collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dataset {
    pub notes: Vec<ClinicalNote>,
    pub qa_pairs: Vec<QAPair>,
}

impl Dataset {
    pub fn new(notes: Vec<ClinicalNote>, qa_pairs: Vec<QAPair>) -> Self {
        Self { notes, qa_pairs }
    }

    pub fn note(&self, note_id: &str) -> Option<&ClinicalNote> {
        self.notes.iter().find(|n| n.note_id() == note_id)
    }

    pub fn qa_for_note<'a>(&'a self, note_id: &'a str) -> impl Iterator<Item = &'a QAPair> + 'a {
        self.qa_pairs.iter().filter(move |qa| qa.note_id == note_id)
    }
}
