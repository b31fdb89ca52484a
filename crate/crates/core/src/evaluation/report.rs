use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{exact_match_score, token_f1_score};
use crate::dataset::Dataset;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuestionScore {
    pub em: f64,
    pub f1: f64,
}

/// Aggregates are means of the per-question scores, in percent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub exact_match: f64,
    pub f1: f64,
    pub n_evaluated: usize,
    pub per_question: BTreeMap<String, QuestionScore>,
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        let mut json = serde_json::to_string_pretty(self).expect("report serializes");
        json.push('\n');
        json
    }
}

/// Scores a prediction for every question of `dataset` against its gold answers.
///
/// Predictions for ids absent from the dataset are ignored.
pub fn evaluate_predictions(predictions: &BTreeMap<String, String>, dataset: &Dataset) -> Result<EvalReport> {
    let mut per_question = BTreeMap::new();
    for qa in &dataset.qa_pairs {
        let prediction = predictions
            .get(&qa.question_id)
            .ok_or_else(|| Error::MissingPrediction(qa.question_id.clone()))?;
        let golds = qa.answer_texts();
        let score = QuestionScore {
            em: exact_match_score(prediction, &golds)?,
            f1: token_f1_score(prediction, &golds)?,
        };
        per_question.insert(qa.question_id.clone(), score);
    }
    let n = per_question.len();
    let mean = |f: fn(&QuestionScore) -> f64| {
        if n == 0 {
            0.0
        } else {
            100.0 * per_question.values().map(f).sum::<f64>() / n as f64
        }
    };
    Ok(EvalReport {
        exact_match: mean(|s| s.em),
        f1: mean(|s| s.f1),
        n_evaluated: n,
        per_question,
    })
}

/// First answer of every QA pair, keyed by question id.
///
/// Scoring one annotation set's answers this way against another set gives
/// their agreement.
pub fn answers_as_predictions(dataset: &Dataset) -> BTreeMap<String, String> {
    dataset
        .qa_pairs
        .iter()
        .filter_map(|qa| qa.answers.first().map(|a| (qa.question_id.clone(), a.text.clone())))
        .collect()
}

pub fn load_predictions(path: impl AsRef<Path>) -> Result<BTreeMap<String, String>> {
    let path = path.as_ref();
    let json = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&json).map_err(|e| Error::parse(path.display().to_string(), e))
}

pub fn save_predictions(predictions: &BTreeMap<String, String>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut json = serde_json::to_string_pretty(predictions).expect("predictions serialize");
    json.push('\n');
    fs::write(path, json).map_err(|e| Error::io(path, e))
}
