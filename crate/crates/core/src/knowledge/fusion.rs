//! Position-wise fusion of word and entity vectors,
//! `h_i = σ(W_c·w_i + W_e·e_i + b)`.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::EmbeddingTable;
use crate::augmentation::EntityMention;
use crate::text::Token;
use crate::{seed, Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Tanh,
    Relu,
    Identity,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Relu => x.max(0.0),
            Activation::Identity => x,
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Activation::Tanh => "tanh",
            Activation::Relu => "relu",
            Activation::Identity => "identity",
        })
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tanh" => Ok(Activation::Tanh),
            "relu" => Ok(Activation::Relu),
            "identity" => Ok(Activation::Identity),
            _ => Err(Error::InvalidArgument(format!("unknown activation `{s}`"))),
        }
    }
}

/// Fusion layer parameters. Matrices are row-major: `w_c` is `d × d1`,
/// `w_e` is `d × d2`, `b` has `d` entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KimParams {
    w_c: Vec<Vec<f64>>,
    w_e: Vec<Vec<f64>>,
    b: Vec<f64>,
    activation: Activation,
}

impl KimParams {
    pub fn new(w_c: Vec<Vec<f64>>, w_e: Vec<Vec<f64>>, b: Vec<f64>, activation: Activation) -> Result<Self> {
        let params = Self {
            w_c,
            w_e,
            b,
            activation,
        };
        params.validate()?;
        Ok(params)
    }

    fn validate(&self) -> Result<()> {
        let d = self.b.len();
        if d == 0 {
            return Err(Error::DimensionMismatch(
                "fusion output dimension must be at least 1".into(),
            ));
        }
        if self.w_c.len() != d || self.w_e.len() != d {
            return Err(Error::DimensionMismatch(format!(
                "W_c has {} rows and W_e has {} rows, b has {d} entries",
                self.w_c.len(),
                self.w_e.len()
            )));
        }
        for (name, m) in [("W_c", &self.w_c), ("W_e", &self.w_e)] {
            let cols = m[0].len();
            if m.iter().any(|row| row.len() != cols) {
                return Err(Error::DimensionMismatch(format!("{name} rows have unequal lengths")));
            }
        }
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        if !finite(&self.b) || !self.w_c.iter().chain(&self.w_e).all(|row| finite(row)) {
            return Err(Error::InvalidArgument("fusion parameters must be finite".into()));
        }
        Ok(())
    }

    /// Glorot-uniform weights and a zero bias.
    pub fn random(d: usize, d1: usize, d2: usize, activation: Activation, seed: u64) -> Result<Self> {
        let mut rng = seed::derived_rng(seed, "kim/init");
        let mut matrix = |cols: usize| -> Vec<Vec<f64>> {
            let bound = (6.0 / (d + cols) as f64).sqrt();
            (0..d)
                .map(|_| (0..cols).map(|_| rng.gen_range(-bound..=bound)).collect())
                .collect()
        };
        let w_c = matrix(d1);
        let w_e = matrix(d2);
        Self::new(w_c, w_e, vec![0.0; d], activation)
    }

    pub fn output_dim(&self) -> usize {
        self.b.len()
    }

    pub fn word_dim(&self) -> usize {
        self.w_c[0].len()
    }

    pub fn entity_dim(&self) -> usize {
        self.w_e[0].len()
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    fn fuse_one(&self, w: &[f64], e: &[f64]) -> Vec<f64> {
        let dot = |row: &[f64], v: &[f64]| row.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
        (0..self.output_dim())
            .map(|i| {
                self.activation
                    .apply(dot(&self.w_c[i], w) + dot(&self.w_e[i], e) + self.b[i])
            })
            .collect()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut json = serde_json::to_string_pretty(self).expect("params serialize");
        json.push('\n');
        fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let json = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let params: Self = serde_json::from_str(&json).map_err(|e| Error::parse(path.display().to_string(), e))?;
        params.validate()?;
        Ok(params)
    }
}

/// Fuses aligned word and entity vectors position by position.
pub fn kim_fuse(word_vecs: &[Vec<f64>], entity_vecs: &[Vec<f64>], params: &KimParams) -> Result<Vec<Vec<f64>>> {
    if word_vecs.len() != entity_vecs.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} word vectors but {} entity vectors",
            word_vecs.len(),
            entity_vecs.len()
        )));
    }
    word_vecs
        .iter()
        .zip(entity_vecs)
        .enumerate()
        .map(|(i, (w, e))| {
            if w.len() != params.word_dim() || e.len() != params.entity_dim() {
                return Err(Error::DimensionMismatch(format!(
                    "position {i}: word dim {} / entity dim {}, expected {} / {}",
                    w.len(),
                    e.len(),
                    params.word_dim(),
                    params.entity_dim()
                )));
            }
            Ok(params.fuse_one(w, e))
        })
        .collect()
}

/// Entity vector at the first token of each mention, zero elsewhere.
///
/// The first token of a mention is the token containing its start offset.
pub fn align_entities_to_tokens(
    tokens: &[Token],
    mentions: &[EntityMention],
    emb: &EmbeddingTable,
) -> Result<Vec<Vec<f64>>> {
    let mut out = vec![vec![0.0; emb.dim()]; tokens.len()];
    for m in mentions {
        let v = emb.entity_vector(&m.entity_id)?;
        if let Some(i) = tokens.iter().position(|t| t.span.contains(m.start)) {
            out[i] = v.to_vec();
        }
    }
    Ok(out)
}
