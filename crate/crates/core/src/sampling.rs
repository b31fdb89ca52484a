//! Seeded per-document subsampling of QA pairs.

use std::collections::HashMap;

use rand::seq::index;

use crate::dataset::Dataset;
use crate::{seed, Error, Result};

// Keeps products like 0.15 * 10 on the intended side of .5.
const ROUND_SLACK: f64 = 1e-9;

/// Number of QA pairs kept from a note holding `n`, rounding half up.
pub fn sample_size(rate: f64, n: usize) -> usize {
    ((rate * n as f64 + 0.5 + ROUND_SLACK).floor() as usize).min(n)
}

/// Keeps `round(rate * n)` QA pairs of every note, drawn uniformly without
/// replacement from a stream seeded by `(seed, note_id)`.
///
/// Notes are always retained; QA pairs keep their input order.
pub fn sample_questions(dataset: &Dataset, rate: f64, seed: u64) -> Result<Dataset> {
    if !(rate > 0.0 && rate <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "sampling rate must lie in (0, 1], got {rate}"
        )));
    }
    log::info!("sampling {:.2}% of QA pairs per note (seed {seed})", rate * 100.0);

    let mut by_note: HashMap<&str, Vec<usize>> = HashMap::new();
    for (i, qa) in dataset.qa_pairs.iter().enumerate() {
        by_note.entry(qa.note_id.as_str()).or_default().push(i);
    }
    let mut keep = vec![false; dataset.qa_pairs.len()];
    for (note_id, members) in &by_note {
        let k = sample_size(rate, members.len());
        let mut rng = seed::derived_rng(seed, note_id);
        for pick in index::sample(&mut rng, members.len(), k) {
            keep[members[pick]] = true;
        }
    }
    let qa_pairs = dataset
        .qa_pairs
        .iter()
        .zip(&keep)
        .filter(|(_, k)| **k)
        .map(|(qa, _)| qa.clone())
        .collect();
    Ok(Dataset::new(dataset.notes.clone(), qa_pairs))
}
