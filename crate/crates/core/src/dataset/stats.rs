use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::text::whitespace_token_count;

/// Corpus statistics; token averages use whitespace tokenization of raw text.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub n_questions: usize,
    pub n_contexts: usize,
    pub n_templates: usize,
    pub avg_question_tokens: f64,
    pub avg_answer_tokens: f64,
    pub avg_context_tokens: f64,
    /// Share of QA pairs carrying an entity surface whose surface occurs,
    /// case-insensitively, in at least one of their answers.
    pub key_phrase_overlap_rate: f64,
}

fn mean(values: impl Iterator<Item = usize>) -> f64 {
    let (sum, n) = values.fold((0usize, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum as f64 / n as f64
    }
}

pub fn dataset_stats(dataset: &Dataset) -> StatsReport {
    let templates: BTreeSet<&str> = dataset
        .qa_pairs
        .iter()
        .filter_map(|qa| qa.template_id.as_deref())
        .collect();

    let mut with_surface = 0usize;
    let mut overlapping = 0usize;
    for qa in &dataset.qa_pairs {
        if let Some(surface) = &qa.entity_surface {
            with_surface += 1;
            let surface = surface.to_lowercase();
            if qa.answers.iter().any(|a| a.text.to_lowercase().contains(&surface)) {
                overlapping += 1;
            }
        }
    }

    StatsReport {
        n_questions: dataset.qa_pairs.len(),
        n_contexts: dataset.notes.len(),
        n_templates: templates.len(),
        avg_question_tokens: mean(dataset.qa_pairs.iter().map(|qa| whitespace_token_count(&qa.question))),
        avg_answer_tokens: mean(
            dataset
                .qa_pairs
                .iter()
                .flat_map(|qa| qa.answers.iter().map(|a| whitespace_token_count(&a.text))),
        ),
        avg_context_tokens: mean(dataset.notes.iter().map(|n| whitespace_token_count(n.text()))),
        key_phrase_overlap_rate: if with_surface == 0 {
            0.0
        } else {
            overlapping as f64 / with_surface as f64
        },
    }
}
