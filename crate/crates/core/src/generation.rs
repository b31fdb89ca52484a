//! Template-driven QA generation from entity annotations.
//!
//! Each annotation of a type is substituted into every template whose
//! placeholders ask for that type. The answer is the evidence line holding
//! the annotation. Repeated mentions of one entity in a note collapse into a
//! single question with several gold answers.

use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::dataset::{AnswerSpan, ClinicalNote, QAPair};
use crate::text::{trim_span, whitespace_token_count, CharSpan};
use crate::{seed, Error, Result};

fn placeholder_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\|([a-z][a-z_]*)\|").expect("valid placeholder regex"))
}

/// A question skeleton such as `Has this patient ever been on |medication|?`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawTemplate", into = "RawTemplate")]
pub struct QuestionTemplate {
    template_id: String,
    text: String,
    placeholder_types: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct RawTemplate {
    template_id: String,
    text: String,
}

impl TryFrom<RawTemplate> for QuestionTemplate {
    type Error = Error;

    fn try_from(raw: RawTemplate) -> Result<Self> {
        QuestionTemplate::new(raw.template_id, raw.text)
    }
}

impl From<QuestionTemplate> for RawTemplate {
    fn from(t: QuestionTemplate) -> Self {
        RawTemplate {
            template_id: t.template_id,
            text: t.text,
        }
    }
}

impl QuestionTemplate {
    pub fn new(template_id: impl Into<String>, text: impl Into<String>) -> Result<Self> {
        let template_id = template_id.into();
        let text = text.into();
        let placeholder_types: Vec<String> = placeholder_re()
            .captures_iter(&text)
            .map(|c| c[1].to_string())
            .collect();
        if placeholder_types.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "template `{template_id}` has no |type| placeholder"
            )));
        }
        Ok(Self {
            template_id,
            text,
            placeholder_types,
        })
    }

    pub fn template_id(&self) -> &str {
        &self.template_id
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn placeholder_types(&self) -> &[String] {
        &self.placeholder_types
    }

    /// Whether every placeholder asks for `entity_type`.
    pub fn accepts(&self, entity_type: &str) -> bool {
        self.placeholder_types.iter().all(|t| t == entity_type)
    }
}

/// An expert-labeled entity span inside a note.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub note_id: String,
    pub surface: String,
    #[serde(rename = "type")]
    pub entity_type: String,
    pub start: usize,
    pub end: usize,
}

impl AnnotationRecord {
    pub fn span(&self) -> CharSpan {
        CharSpan::new(self.start, self.end)
    }

    fn malformed(&self, reason: impl Into<String>) -> Error {
        Error::MalformedAnnotation {
            note_id: self.note_id.clone(),
            start: self.start,
            end: self.end,
            reason: reason.into(),
        }
    }

    /// Checks the record against the note it claims to annotate.
    pub fn check(&self, note: &ClinicalNote) -> Result<()> {
        if self.note_id != note.note_id() {
            return Err(self.malformed(format!("belongs to note `{}`", self.note_id)));
        }
        if self.start >= self.end {
            return Err(self.malformed("empty or inverted span"));
        }
        match note.slice(self.start, self.end) {
            Some(s) if s == self.surface => Ok(()),
            Some(s) => Err(self.malformed(format!("note text is `{s}`, surface is `{}`", self.surface))),
            None => Err(self.malformed("span lies outside the note")),
        }
    }
}

pub fn instantiate_template(template: &QuestionTemplate, annotation: &AnnotationRecord) -> Result<String> {
    if let Some(expected) = template
        .placeholder_types
        .iter()
        .find(|t| **t != annotation.entity_type)
    {
        return Err(Error::TypeMismatch {
            template_id: template.template_id.clone(),
            expected: expected.clone(),
            actual: annotation.entity_type.clone(),
        });
    }
    Ok(placeholder_re()
        .replace_all(&template.text, regex::NoExpand(&annotation.surface))
        .into_owned())
}

/// The trimmed physical line holding the annotation.
pub fn extract_evidence(note: &ClinicalNote, annotation: &AnnotationRecord) -> Result<AnswerSpan> {
    annotation.check(note)?;
    let line = note
        .line_of(annotation.start)
        .ok_or_else(|| annotation.malformed("starts on a newline"))?;
    let span = note.lines()[line];
    if annotation.end > span.end {
        return Err(annotation.malformed("spans a newline"));
    }
    let trimmed = trim_span(note.text(), note.char_index(), span);
    let text = note
        .slice(trimmed.start, trimmed.end)
        .expect("trimmed line lies inside the note");
    Ok(AnswerSpan::new(text, trimmed.start))
}

/// Deterministic id of the question generated from `template_id` for an entity in a note.
pub fn question_id(template_id: &str, note_id: &str, surface: &str) -> String {
    format!(
        "{note_id}-{template_id}-{}",
        seed::short_hash(&[template_id, note_id, &surface.to_lowercase()])
    )
}

/// Generates the QA pairs of one note.
///
/// Output order follows the first occurrence of each (template, entity)
/// pair, templates outermost.
pub fn generate_qa_pairs(
    note: &ClinicalNote,
    templates: &[QuestionTemplate],
    annotations: &[AnnotationRecord],
    max_answer_tokens: usize,
) -> Result<Vec<QAPair>> {
    let evidence: Vec<AnswerSpan> = annotations
        .iter()
        .map(|a| extract_evidence(note, a))
        .collect::<Result<_>>()?;

    let mut pairs: Vec<QAPair> = Vec::new();
    let mut by_key: HashMap<(String, String), usize> = HashMap::new();
    for template in templates {
        for (annotation, answer) in annotations.iter().zip(&evidence) {
            if !template.accepts(&annotation.entity_type) {
                continue;
            }
            let key = (template.template_id.clone(), annotation.surface.to_lowercase());
            let idx = match by_key.get(&key) {
                Some(&idx) => idx,
                None => {
                    pairs.push(QAPair {
                        question_id: question_id(&template.template_id, note.note_id(), &annotation.surface),
                        question: instantiate_template(template, annotation)?,
                        note_id: note.note_id().to_string(),
                        answers: Vec::new(),
                        template_id: Some(template.template_id.clone()),
                        entity_surface: Some(annotation.surface.clone()),
                    });
                    by_key.insert(key, pairs.len() - 1);
                    pairs.len() - 1
                }
            };
            let answers = &mut pairs[idx].answers;
            if !answers.contains(answer) {
                answers.push(answer.clone());
            }
        }
    }

    for qa in &mut pairs {
        qa.answers
            .retain(|a| whitespace_token_count(&a.text) <= max_answer_tokens);
    }
    pairs.retain(|qa| !qa.answers.is_empty());
    Ok(pairs)
}

pub fn load_templates(path: impl AsRef<Path>) -> Result<Vec<QuestionTemplate>> {
    let path = path.as_ref();
    let json = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&json).map_err(|e| Error::parse(path.display().to_string(), e))
}

pub fn load_annotations(path: impl AsRef<Path>) -> Result<Vec<AnnotationRecord>> {
    let path = path.as_ref();
    let json = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&json).map_err(|e| Error::parse(path.display().to_string(), e))
}
