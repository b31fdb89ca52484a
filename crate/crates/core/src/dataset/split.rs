use std::collections::HashSet;

use rand::seq::SliceRandom;

use super::Dataset;
use crate::{seed, Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetSplit {
    pub train: Dataset,
    pub dev: Dataset,
    pub test: Dataset,
}

// Absorbs representation error such as 0.7 * 100 = 69.99999999999999.
const FLOOR_SLACK: f64 = 1e-9;

/// Note counts for a three-way split: floor for train and dev, remainder to test.
pub fn split_counts(n_notes: usize, ratios: (f64, f64, f64)) -> Result<(usize, usize, usize)> {
    let (r1, r2, r3) = ratios;
    if [r1, r2, r3].iter().any(|r| !r.is_finite() || *r <= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "split ratios must be positive, got {r1},{r2},{r3}"
        )));
    }
    if ((r1 + r2 + r3) - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "split ratios must sum to 1, got {}",
            r1 + r2 + r3
        )));
    }
    if n_notes < 3 {
        return Err(Error::InvalidArgument(format!(
            "need at least 3 notes to split, got {n_notes}"
        )));
    }
    let n = n_notes as f64;
    let train = (r1 * n + FLOOR_SLACK).floor() as usize;
    let dev = (r2 * n + FLOOR_SLACK).floor() as usize;
    let dev = dev.min(n_notes - train);
    Ok((train, dev, n_notes - train - dev))
}

/// Shuffles notes with `seed` and partitions them train/dev/test; QA pairs follow their note.
///
/// Within each part, notes and QA pairs keep their input order.
pub fn split_by_documents(dataset: &Dataset, ratios: (f64, f64, f64), seed: u64) -> Result<DatasetSplit> {
    let (n_train, n_dev, _) = split_counts(dataset.notes.len(), ratios)?;
    let mut order: Vec<usize> = (0..dataset.notes.len()).collect();
    order.shuffle(&mut seed::rng(seed));

    let mut part = vec![2u8; dataset.notes.len()];
    for (rank, &i) in order.iter().enumerate() {
        part[i] = if rank < n_train {
            0
        } else if rank < n_train + n_dev {
            1
        } else {
            2
        };
    }
    let select = |which: u8| {
        let notes: Vec<_> = dataset
            .notes
            .iter()
            .zip(&part)
            .filter(|(_, p)| **p == which)
            .map(|(n, _)| n.clone())
            .collect();
        let ids: HashSet<&str> = notes.iter().map(|n| n.note_id()).collect();
        let qa_pairs = dataset
            .qa_pairs
            .iter()
            .filter(|qa| ids.contains(qa.note_id.as_str()))
            .cloned()
            .collect();
        Dataset::new(notes, qa_pairs)
    };
    Ok(DatasetSplit {
        train: select(0),
        dev: select(1),
        test: select(2),
    })
}
