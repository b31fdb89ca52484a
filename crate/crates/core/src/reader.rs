//! A deterministic line-ranking reader.
//!
//! Every non-blank line of the note is a candidate answer. A line scores
//! the Jaccard overlap of its normalized tokens with the question's, blended
//! in knowledge mode with the best cosine between fused vectors of linked
//! entity mentions on either side.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::augmentation::{link_entities, Lexicon};
use crate::dataset::{AnswerSpan, ClinicalNote};
use crate::evaluation::normalize_answer;
use crate::knowledge::{align_entities_to_tokens, cosine, kim_fuse, EmbeddingTable, KimParams, WordVectors};
use crate::text::{trim_span, whitespace_tokens};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReaderMode {
    Lexical,
    LexicalKnowledge,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieBreak {
    #[default]
    EarliestLine,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReaderConfig {
    mode: ReaderMode,
    embedding_weight: f64,
    tie_break: TieBreak,
}

impl ReaderConfig {
    pub fn lexical() -> Self {
        Self {
            mode: ReaderMode::Lexical,
            embedding_weight: 0.0,
            tie_break: TieBreak::EarliestLine,
        }
    }

    pub fn knowledge(embedding_weight: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&embedding_weight) {
            return Err(Error::InvalidArgument(format!(
                "embedding weight must lie in [0, 1], got {embedding_weight}"
            )));
        }
        Ok(Self {
            mode: ReaderMode::LexicalKnowledge,
            embedding_weight,
            tie_break: TieBreak::EarliestLine,
        })
    }

    pub fn mode(&self) -> ReaderMode {
        self.mode
    }

    pub fn embedding_weight(&self) -> f64 {
        self.embedding_weight
    }
}

/// Everything the knowledge term needs.
#[derive(Debug, Clone)]
pub struct KnowledgeResources {
    pub embeddings: EmbeddingTable,
    pub params: KimParams,
    pub lexicon: Lexicon,
    pub word_vectors: WordVectors,
}

impl KnowledgeResources {
    /// Fused vectors at the first token of each linked mention of `text`.
    pub fn mention_vectors(&self, text: &str) -> Result<Vec<Vec<f64>>> {
        let mentions: Vec<_> = link_entities(text, &self.lexicon)
            .into_iter()
            .filter(|m| self.embeddings.entity(&m.entity_id).is_some())
            .collect();
        if mentions.is_empty() {
            return Ok(Vec::new());
        }
        let tokens = whitespace_tokens(text);
        let words: Vec<Vec<f64>> = tokens.iter().map(|t| self.word_vectors.vector(&t.text)).collect();
        let entities = align_entities_to_tokens(&tokens, &mentions, &self.embeddings)?;
        let fused = kim_fuse(&words, &entities, &self.params)?;
        let firsts: BTreeSet<usize> = mentions
            .iter()
            .filter_map(|m| tokens.iter().position(|t| t.span.contains(m.start)))
            .collect();
        Ok(firsts.into_iter().map(|i| fused[i].clone()).collect())
    }
}

fn token_set(text: &str) -> BTreeSet<String> {
    normalize_answer(text).split_whitespace().map(str::to_string).collect()
}

pub fn jaccard(a: &BTreeSet<String>, b: &BTreeSet<String>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 0.0;
    }
    a.intersection(b).count() as f64 / union as f64
}

fn max_cosine(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .flat_map(|x| b.iter().map(move |y| cosine(x, y)))
        .fold(None, |best: Option<f64>, c| Some(best.map_or(c, |b| b.max(c))))
        .unwrap_or(0.0)
}

/// Scores of every candidate line, as `(answer, score)` in note order.
pub fn score_lines(
    question: &str,
    note: &ClinicalNote,
    config: &ReaderConfig,
    resources: Option<&KnowledgeResources>,
) -> Result<Vec<(AnswerSpan, f64)>> {
    let knowledge = match (config.mode, resources) {
        (ReaderMode::Lexical, None) => None,
        (ReaderMode::LexicalKnowledge, Some(r)) => Some(r),
        (ReaderMode::Lexical, Some(_)) => {
            return Err(Error::InvalidArgument(
                "lexical mode takes no knowledge resources".into(),
            ))
        }
        (ReaderMode::LexicalKnowledge, None) => {
            return Err(Error::InvalidArgument(
                "knowledge mode requires knowledge resources".into(),
            ))
        }
    };
    let lambda = config.embedding_weight;
    let question_tokens = token_set(question);
    let question_vectors = match knowledge {
        Some(k) if lambda > 0.0 => k.mention_vectors(question)?,
        _ => Vec::new(),
    };

    let mut scored = Vec::new();
    for &line in note.lines() {
        let span = trim_span(note.text(), note.char_index(), line);
        if span.is_empty() {
            continue;
        }
        let text = note.slice(span.start, span.end).expect("line inside note");
        let mut score = (1.0 - lambda) * jaccard(&question_tokens, &token_set(text));
        if let (Some(k), false) = (knowledge, question_vectors.is_empty()) {
            score += lambda * max_cosine(&question_vectors, &k.mention_vectors(text)?);
        }
        scored.push((AnswerSpan::new(text, span.start), score));
    }
    Ok(scored)
}

/// The best-scoring line of the note; ties go to the earliest line.
pub fn predict_span(
    question: &str,
    note: &ClinicalNote,
    config: &ReaderConfig,
    resources: Option<&KnowledgeResources>,
) -> Result<AnswerSpan> {
    let scored = score_lines(question, note, config, resources)?;
    let mut best: Option<(AnswerSpan, f64)> = None;
    for (span, score) in scored {
        if best.as_ref().is_none_or(|(_, b)| score > *b) {
            best = Some((span, score));
        }
    }
    best.map(|(s, _)| s)
        .ok_or_else(|| Error::EmptyInput(format!("note `{}` has no non-blank line", note.note_id())))
}
