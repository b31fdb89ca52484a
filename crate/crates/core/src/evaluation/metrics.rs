use std::collections::HashMap;
use std::sync::OnceLock;

use regex::Regex;

use crate::{Error, Result};

const PUNCTUATION: &str = r##"!"#$%&'()*+,-./:;<=>?@[\]^_`{|}~"##;

fn articles() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\b(a|an|the)\b").expect("valid article regex"))
}

/// Lowercase, drop ASCII punctuation, drop the articles a/an/the, collapse whitespace.
pub fn normalize_answer(text: &str) -> String {
    let lower = text.to_lowercase();
    let no_punct: String = lower.chars().filter(|c| !PUNCTUATION.contains(*c)).collect();
    let no_articles = articles().replace_all(&no_punct, " ");
    no_articles.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn check_golds(golds: &[impl AsRef<str>]) -> Result<()> {
    if golds.is_empty() {
        return Err(Error::EmptyInput("at least one gold answer is required".into()));
    }
    Ok(())
}

/// 1.0 when the normalized prediction equals some normalized gold, else 0.0.
pub fn exact_match_score(prediction: &str, golds: &[impl AsRef<str>]) -> Result<f64> {
    check_golds(golds)?;
    let p = normalize_answer(prediction);
    Ok(if golds.iter().any(|g| normalize_answer(g.as_ref()) == p) {
        1.0
    } else {
        0.0
    })
}

fn single_f1(prediction: &str, gold: &str) -> f64 {
    let p = normalize_answer(prediction);
    let g = normalize_answer(gold);
    let p: Vec<&str> = p.split_whitespace().collect();
    let g: Vec<&str> = g.split_whitespace().collect();
    match (p.is_empty(), g.is_empty()) {
        (true, true) => return 1.0,
        (true, false) | (false, true) => return 0.0,
        _ => {}
    }
    let mut bag: HashMap<&str, usize> = HashMap::new();
    for t in &g {
        *bag.entry(t).or_default() += 1;
    }
    let mut common = 0usize;
    for t in &p {
        if let Some(n) = bag.get_mut(t) {
            if *n > 0 {
                *n -= 1;
                common += 1;
            }
        }
    }
    2.0 * common as f64 / (p.len() + g.len()) as f64
}

/// Bag-of-tokens F1, maximized over golds.
pub fn token_f1_score(prediction: &str, golds: &[impl AsRef<str>]) -> Result<f64> {
    check_golds(golds)?;
    Ok(golds
        .iter()
        .map(|g| single_f1(prediction, g.as_ref()))
        .fold(0.0, f64::max))
}
