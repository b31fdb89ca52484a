//! Synonym-substitution augmentation of questions.
//!
//! Questions are linked against a surface-form lexicon; one linked mention
//! that has knowledge-base synonyms is replaced by one of them. Questions
//! without such a mention are filtered out.

mod kb;
mod linker;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::QAPair;
use crate::{seed, Result};

pub use kb::{lookup_synonyms, parse_triples, EntityRecord, KnowledgeBase, Triple, DECLARED_RELATIONS};
pub use linker::{link_entities, EntityMention, Lexicon};

/// Provenance of one rewrite.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Substitution {
    pub question_id: String,
    pub original_question: String,
    pub entity_id: String,
    pub original: String,
    pub replacement: String,
    /// Character offset of the replaced mention in the original question.
    pub start: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AugmentedQuestion {
    pub qa: QAPair,
    pub substitution: Substitution,
}

/// Every `(mention, synonym)` substitution available for `question`, in
/// mention order then synonym order.
pub fn substitution_candidates(
    question: &str,
    kb: &KnowledgeBase,
    lexicon: &Lexicon,
) -> Result<Vec<(EntityMention, String)>> {
    let mut candidates = Vec::new();
    for mention in link_entities(question, lexicon) {
        if kb.entity(&mention.entity_id).is_none() {
            continue;
        }
        for synonym in lookup_synonyms(kb, &mention.entity_id)? {
            if synonym.to_lowercase() != mention.surface.to_lowercase() {
                candidates.push((mention.clone(), synonym));
            }
        }
    }
    Ok(candidates)
}

/// Rewrites the question by one seeded-uniform substitution, or filters it.
///
/// The draw uses a stream derived from `(seed, question_id)`. Answers and the
/// note reference are untouched; `entity_surface` follows the substitution
/// when it named the replaced mention.
pub fn augment_question(
    qa: &QAPair,
    kb: &KnowledgeBase,
    lexicon: &Lexicon,
    seed: u64,
) -> Result<Option<AugmentedQuestion>> {
    let candidates = substitution_candidates(&qa.question, kb, lexicon)?;
    if candidates.is_empty() {
        return Ok(None);
    }
    let pick = seed::derived_rng(seed, &qa.question_id).gen_range(0..candidates.len());
    let (mention, synonym) = &candidates[pick];

    let mut question = String::with_capacity(qa.question.len() + synonym.len());
    question.extend(qa.question.chars().take(mention.start));
    question.push_str(synonym);
    question.extend(qa.question.chars().skip(mention.end));

    let entity_surface = match &qa.entity_surface {
        Some(s) if s.to_lowercase() == mention.surface.to_lowercase() => Some(synonym.clone()),
        other => other.clone(),
    };
    Ok(Some(AugmentedQuestion {
        substitution: Substitution {
            question_id: qa.question_id.clone(),
            original_question: qa.question.clone(),
            entity_id: mention.entity_id.clone(),
            original: mention.surface.clone(),
            replacement: synonym.clone(),
            start: mention.start,
        },
        qa: QAPair {
            question,
            entity_surface,
            ..qa.clone()
        },
    }))
}
