use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Norm {
    L1,
    #[default]
    L2,
}

impl Norm {
    pub fn distance(self, v: &[f64]) -> f64 {
        match self {
            Norm::L1 => v.iter().map(|x| x.abs()).sum(),
            Norm::L2 => super::l2_norm(v),
        }
    }
}

impl fmt::Display for Norm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Norm::L1 => "L1",
            Norm::L2 => "L2",
        })
    }
}

impl FromStr for Norm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "L1" => Ok(Norm::L1),
            "L2" => Ok(Norm::L2),
            _ => Err(Error::InvalidArgument(format!(
                "unknown norm `{s}` (expected L1 or L2)"
            ))),
        }
    }
}

/// Entity and relation vectors of one dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    norm: Norm,
    entities: BTreeMap<String, Vec<f64>>,
    relations: BTreeMap<String, Vec<f64>>,
}

impl EmbeddingTable {
    pub fn new(dim: usize, norm: Norm) -> Self {
        Self {
            dim,
            norm,
            entities: BTreeMap::new(),
            relations: BTreeMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn norm(&self) -> Norm {
        self.norm
    }

    fn check(&self, id: &str, v: &[f64]) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "vector `{id}` has {} components, table dim is {}",
                v.len(),
                self.dim
            )));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::integrity(id, "non-finite vector component"));
        }
        Ok(())
    }

    pub fn insert_entity(&mut self, id: impl Into<String>, v: Vec<f64>) -> Result<()> {
        let id = id.into();
        self.check(&id, &v)?;
        self.entities.insert(id, v);
        Ok(())
    }

    pub fn insert_relation(&mut self, id: impl Into<String>, v: Vec<f64>) -> Result<()> {
        let id = id.into();
        self.check(&id, &v)?;
        self.relations.insert(id, v);
        Ok(())
    }

    pub fn entity(&self, id: &str) -> Option<&[f64]> {
        self.entities.get(id).map(Vec::as_slice)
    }

    pub fn relation(&self, id: &str) -> Option<&[f64]> {
        self.relations.get(id).map(Vec::as_slice)
    }

    pub fn entity_vector(&self, id: &str) -> Result<&[f64]> {
        self.entity(id).ok_or_else(|| Error::UnknownId {
            kind: "entity",
            id: id.to_string(),
        })
    }

    pub fn relation_vector(&self, id: &str) -> Result<&[f64]> {
        self.relation(id).ok_or_else(|| Error::UnknownId {
            kind: "relation",
            id: id.to_string(),
        })
    }

    pub fn entities(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.entities.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    pub fn relations(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.relations.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    pub fn n_entities(&self) -> usize {
        self.entities.len()
    }

    pub fn n_relations(&self) -> usize {
        self.relations.len()
    }

    /// TSV with a one-line header (`#transe dim=.. norm=.. entities=.. relations=..`),
    /// then one `id<TAB>v1<TAB>...` row per entity, then per relation.
    pub fn to_tsv(&self) -> String {
        let mut out = format!(
            "#transe\tdim={}\tnorm={}\tentities={}\trelations={}\n",
            self.dim,
            self.norm,
            self.entities.len(),
            self.relations.len()
        );
        for (id, v) in self.entities.iter().chain(&self.relations) {
            out.push_str(id);
            for x in v {
                out.push('\t');
                out.push_str(&x.to_string());
            }
            out.push('\n');
        }
        out
    }

    pub fn from_tsv(tsv: &str, context: &str) -> Result<Self> {
        let mut lines = tsv.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::parse(context, "empty embedding file"))?;
        let fields: BTreeMap<&str, &str> = header
            .strip_prefix("#transe")
            .ok_or_else(|| Error::parse(context, "missing `#transe` header"))?
            .split('\t')
            .filter(|f| !f.is_empty())
            .filter_map(|f| f.split_once('='))
            .collect();
        let get = |key: &str| {
            fields
                .get(key)
                .copied()
                .ok_or_else(|| Error::parse(context, format!("header lacks `{key}`")))
        };
        let count = |key: &str| -> Result<usize> {
            get(key)?
                .parse()
                .map_err(|e| Error::parse(context, format!("bad `{key}`: {e}")))
        };
        let dim = count("dim")?;
        let n_entities = count("entities")?;
        let n_relations = count("relations")?;
        let mut table = Self::new(dim, get("norm")?.parse()?);

        let rows: Vec<&str> = lines.filter(|l| !l.trim().is_empty()).collect();
        if rows.len() != n_entities + n_relations {
            return Err(Error::parse(
                context,
                format!(
                    "header declares {} rows, found {}",
                    n_entities + n_relations,
                    rows.len()
                ),
            ));
        }
        for (i, row) in rows.iter().enumerate() {
            let mut cols = row.split('\t');
            let id = cols.next().unwrap_or_default().to_string();
            let v = cols
                .map(|c| c.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::parse(format!("{context}:{}", i + 2), e))?;
            if i < n_entities {
                table.insert_entity(id, v)?;
            } else {
                table.insert_relation(id, v)?;
            }
        }
        Ok(table)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_tsv()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let tsv = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_tsv(&tsv, &path.display().to_string())
    }
}
