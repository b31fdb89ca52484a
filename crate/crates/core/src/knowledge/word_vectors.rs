use std::collections::HashMap;
use std::fs;
use std::path::Path;

use rand::Rng;

use super::l2_norm;
use crate::{seed, Error, Result};

/// Word vectors looked up by lowercase token with edge punctuation removed.
///
/// Tokens missing from the table get a unit vector drawn from a stream
/// seeded by `(seed, token)`, so every token has a stable vector.
#[derive(Debug, Clone, PartialEq)]
pub struct WordVectors {
    dim: usize,
    seed: u64,
    table: HashMap<String, Vec<f64>>,
}

pub fn word_key(token: &str) -> String {
    token.trim_matches(|c: char| !c.is_alphanumeric()).to_lowercase()
}

impl WordVectors {
    pub fn random(dim: usize, seed: u64) -> Self {
        Self {
            dim,
            seed,
            table: HashMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn insert(&mut self, token: &str, v: Vec<f64>) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "word vector `{token}` has {} components, expected {}",
                v.len(),
                self.dim
            )));
        }
        self.table.insert(word_key(token), v);
        Ok(())
    }

    pub fn vector(&self, token: &str) -> Vec<f64> {
        let key = word_key(token);
        if let Some(v) = self.table.get(&key) {
            return v.clone();
        }
        let mut rng = seed::derived_rng(self.seed, &key);
        let mut v: Vec<f64> = (0..self.dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let n = l2_norm(&v);
        if n > 0.0 {
            v.iter_mut().for_each(|x| *x /= n);
        }
        v
    }

    /// Reads `token<TAB>v1<TAB>...` rows; lines starting with `#` are skipped.
    pub fn load_tsv(path: impl AsRef<Path>, seed: u64) -> Result<Self> {
        let path = path.as_ref();
        let context = path.display().to_string();
        let tsv = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut out: Option<Self> = None;
        for (i, line) in tsv.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let mut cols = line.split('\t');
            let token = cols.next().unwrap_or_default();
            let v = cols
                .map(str::parse::<f64>)
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::parse(format!("{context}:{}", i + 1), e))?;
            out.get_or_insert_with(|| Self::random(v.len(), seed))
                .insert(token, v)?;
        }
        out.ok_or_else(|| Error::parse(context, "no word vectors"))
    }
}
