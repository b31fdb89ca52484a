use std::collections::{HashMap, HashSet};
use std::fmt;

use super::{ClinicalNote, Dataset};
use crate::text::whitespace_token_count;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    DuplicateNoteId {
        note_id: String,
    },
    DuplicateQuestionId {
        question_id: String,
    },
    DanglingNoteId {
        question_id: String,
        note_id: String,
    },
    EmptyQuestion {
        question_id: String,
    },
    NoAnswers {
        question_id: String,
    },
    OffsetMismatch {
        question_id: String,
        answer_index: usize,
    },
    AnswerTooLong {
        question_id: String,
        answer_index: usize,
        tokens: usize,
        max: usize,
    },
}

impl Violation {
    /// Record the violation is attributed to.
    pub fn record(&self) -> &str {
        match self {
            Violation::DuplicateNoteId { note_id } => note_id,
            Violation::DuplicateQuestionId { question_id }
            | Violation::DanglingNoteId { question_id, .. }
            | Violation::EmptyQuestion { question_id }
            | Violation::NoAnswers { question_id }
            | Violation::OffsetMismatch { question_id, .. }
            | Violation::AnswerTooLong { question_id, .. } => question_id,
        }
    }

    pub fn is_length_violation(&self) -> bool {
        matches!(self, Violation::AnswerTooLong { .. })
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DuplicateNoteId { note_id } => write!(f, "duplicate note id `{note_id}`"),
            Violation::DuplicateQuestionId { question_id } => {
                write!(f, "duplicate question id `{question_id}`")
            }
            Violation::DanglingNoteId { question_id, note_id } => {
                write!(f, "question `{question_id}` references unknown note `{note_id}`")
            }
            Violation::EmptyQuestion { question_id } => write!(f, "question `{question_id}` is empty"),
            Violation::NoAnswers { question_id } => write!(f, "question `{question_id}` has no answers"),
            Violation::OffsetMismatch {
                question_id,
                answer_index,
            } => write!(
                f,
                "answer {answer_index} of `{question_id}` does not match the note text at its offset"
            ),
            Violation::AnswerTooLong {
                question_id,
                answer_index,
                tokens,
                max,
            } => write!(
                f,
                "answer {answer_index} of `{question_id}` has {tokens} tokens (max {max})"
            ),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

fn collect_violations(dataset: &Dataset, max_answer_tokens: Option<usize>) -> Vec<Violation> {
    let mut violations = Vec::new();
    let mut notes: HashMap<&str, &ClinicalNote> = HashMap::new();
    for note in &dataset.notes {
        if notes.insert(note.note_id(), note).is_some() {
            violations.push(Violation::DuplicateNoteId {
                note_id: note.note_id().to_string(),
            });
        }
    }
    let mut seen_questions = HashSet::new();
    for qa in &dataset.qa_pairs {
        let qid = qa.question_id.clone();
        if !seen_questions.insert(qa.question_id.as_str()) {
            violations.push(Violation::DuplicateQuestionId {
                question_id: qid.clone(),
            });
        }
        if qa.question.trim().is_empty() {
            violations.push(Violation::EmptyQuestion {
                question_id: qid.clone(),
            });
        }
        if qa.answers.is_empty() {
            violations.push(Violation::NoAnswers {
                question_id: qid.clone(),
            });
        }
        let note = notes.get(qa.note_id.as_str());
        if note.is_none() {
            violations.push(Violation::DanglingNoteId {
                question_id: qid.clone(),
                note_id: qa.note_id.clone(),
            });
        }
        for (i, answer) in qa.answers.iter().enumerate() {
            if let Some(note) = note {
                if !answer.matches(note) {
                    violations.push(Violation::OffsetMismatch {
                        question_id: qid.clone(),
                        answer_index: i,
                    });
                }
            }
            if let Some(max) = max_answer_tokens {
                let tokens = whitespace_token_count(&answer.text);
                if tokens > max {
                    violations.push(Violation::AnswerTooLong {
                        question_id: qid.clone(),
                        answer_index: i,
                        tokens,
                        max,
                    });
                }
            }
        }
    }
    violations
}

/// Lists every invariant violation plus every answer longer than
/// `max_answer_tokens` whitespace tokens.
pub fn validate_dataset(dataset: &Dataset, max_answer_tokens: usize) -> ValidationReport {
    ValidationReport {
        violations: collect_violations(dataset, Some(max_answer_tokens)),
    }
}

pub(crate) fn check_integrity(dataset: &Dataset) -> Result<()> {
    match collect_violations(dataset, None).into_iter().next() {
        None => Ok(()),
        Some(v) => Err(Error::integrity(v.record(), v.to_string())),
    }
}

/// Drops answers longer than `max_answer_tokens`, then QA pairs left without answers.
pub fn filter_long_answers(dataset: &Dataset, max_answer_tokens: usize) -> Dataset {
    let qa_pairs = dataset
        .qa_pairs
        .iter()
        .filter_map(|qa| {
            let answers: Vec<_> = qa
                .answers
                .iter()
                .filter(|a| whitespace_token_count(&a.text) <= max_answer_tokens)
                .cloned()
                .collect();
            (!answers.is_empty()).then(|| super::QAPair { answers, ..qa.clone() })
        })
        .collect();
    Dataset::new(dataset.notes.clone(), qa_pairs)
}
