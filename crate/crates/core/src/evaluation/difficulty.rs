use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use num::rational::BigRational;
use num::{BigInt, Zero};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Difficulty {
    Easy,
    Hard,
}

fn exact(x: f64, question_id: &str) -> Result<BigRational> {
    BigRational::from_float(x).ok_or_else(|| Error::InvalidArgument(format!("non-finite score for `{question_id}`")))
}

/// Labels a template Easy when its mean score is strictly above the mean
/// over all questions, Hard otherwise.
///
/// Means are compared in exact rational arithmetic, so equal inputs always tie.
pub fn partition_difficulty(
    per_question: &BTreeMap<String, f64>,
    template_of: &BTreeMap<String, String>,
) -> Result<BTreeMap<String, Difficulty>> {
    if per_question.is_empty() {
        return Err(Error::EmptyInput("no question scores".into()));
    }
    let mut total = BigRational::zero();
    let mut per_template: BTreeMap<&str, (BigRational, usize)> = BTreeMap::new();
    for (qid, &score) in per_question {
        let template = template_of.get(qid).ok_or_else(|| Error::UnknownId {
            kind: "template for question",
            id: qid.clone(),
        })?;
        let score = exact(score, qid)?;
        total += &score;
        let slot = per_template.entry(template).or_insert_with(|| (BigRational::zero(), 0));
        slot.0 += score;
        slot.1 += 1;
    }
    let overall = total / BigInt::from(per_question.len());
    Ok(per_template
        .into_iter()
        .map(|(template, (sum, n))| {
            let mean = sum / BigInt::from(n);
            let label = if mean > overall {
                Difficulty::Easy
            } else {
                Difficulty::Hard
            };
            (template.to_string(), label)
        })
        .collect())
}

/// Carries template labels back to their questions.
pub fn label_questions(
    labels: &BTreeMap<String, Difficulty>,
    template_of: &BTreeMap<String, String>,
) -> BTreeMap<String, Difficulty> {
    template_of
        .iter()
        .filter_map(|(qid, t)| labels.get(t).map(|d| (qid.clone(), *d)))
        .collect()
}

/// Reads a `question_id,score` CSV; a non-numeric first row is taken as a header.
pub fn load_scores(path: impl AsRef<Path>) -> Result<BTreeMap<String, f64>> {
    let path = path.as_ref();
    let context = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut scores = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (qid, score) = line
            .split_once(',')
            .ok_or_else(|| Error::parse(format!("{context}:{}", i + 1), "expected `question_id,score`"))?;
        let score = match score.trim().parse::<f64>() {
            Ok(s) => s,
            Err(_) if i == 0 => continue,
            Err(e) => return Err(Error::parse(format!("{context}:{}", i + 1), e)),
        };
        if scores.insert(qid.trim().to_string(), score).is_some() {
            return Err(Error::parse(
                format!("{context}:{}", i + 1),
                format!("duplicate question `{qid}`"),
            ));
        }
    }
    Ok(scores)
}

/// Reads a `question_id,template_id` CSV; a `question_id,...` first row is a header.
pub fn load_template_map(path: impl AsRef<Path>) -> Result<BTreeMap<String, String>> {
    let path = path.as_ref();
    let context = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut map = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (qid, template) = line
            .split_once(',')
            .ok_or_else(|| Error::parse(format!("{context}:{}", i + 1), "expected `question_id,template_id`"))?;
        let (qid, template) = (qid.trim(), template.trim());
        if i == 0 && qid == "question_id" {
            continue;
        }
        if map.insert(qid.to_string(), template.to_string()).is_some() {
            return Err(Error::parse(
                format!("{context}:{}", i + 1),
                format!("duplicate question `{qid}`"),
            ));
        }
    }
    Ok(map)
}
