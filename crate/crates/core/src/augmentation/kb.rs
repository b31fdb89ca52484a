use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Relation names a knowledge base may use.
pub const DECLARED_RELATIONS: &[&str] = &[
    "synonym_of",
    "abbreviation_of",
    "isa",
    "treats",
    "may_treat",
    "causes",
    "diagnoses",
    "part_of",
    "associated_with",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityRecord {
    pub entity_id: String,
    pub canonical: String,
    #[serde(default)]
    pub aliases: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Triple {
    pub head: String,
    pub relation: String,
    pub tail: String,
}

impl Triple {
    pub fn new(head: impl Into<String>, relation: impl Into<String>, tail: impl Into<String>) -> Self {
        Self {
            head: head.into(),
            relation: relation.into(),
            tail: tail.into(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KnowledgeBase {
    entities: BTreeMap<String, EntityRecord>,
    triples: Vec<Triple>,
}

impl KnowledgeBase {
    /// Builds a knowledge base, checking that entity ids are unique, triple
    /// endpoints resolve and relations are declared.
    pub fn new(entities: Vec<EntityRecord>, triples: Vec<Triple>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for e in entities {
            if map.contains_key(&e.entity_id) {
                return Err(Error::integrity(&e.entity_id, "duplicate entity id"));
            }
            map.insert(e.entity_id.clone(), e);
        }
        for t in &triples {
            for end in [&t.head, &t.tail] {
                if !map.contains_key(end) {
                    return Err(Error::integrity(
                        format!("{}\t{}\t{}", t.head, t.relation, t.tail),
                        format!("unknown entity `{end}`"),
                    ));
                }
            }
            if !DECLARED_RELATIONS.contains(&t.relation.as_str()) {
                return Err(Error::integrity(
                    format!("{}\t{}\t{}", t.head, t.relation, t.tail),
                    format!("undeclared relation `{}`", t.relation),
                ));
            }
        }
        Ok(Self { entities: map, triples })
    }

    pub fn entity(&self, entity_id: &str) -> Option<&EntityRecord> {
        self.entities.get(entity_id)
    }

    pub fn entities(&self) -> impl Iterator<Item = &EntityRecord> {
        self.entities.values()
    }

    pub fn entity_ids(&self) -> Vec<String> {
        self.entities.keys().cloned().collect()
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    pub fn relations(&self) -> BTreeSet<&str> {
        self.triples.iter().map(|t| t.relation.as_str()).collect()
    }

    /// Loads the JSON entity file and the TSV triple file.
    ///
    /// Duplicate aliases in the entity file are dropped, keeping first occurrences.
    pub fn load(entities_path: impl AsRef<Path>, triples_path: impl AsRef<Path>) -> Result<Self> {
        let entities_path = entities_path.as_ref();
        let json = fs::read_to_string(entities_path).map_err(|e| Error::io(entities_path, e))?;
        let mut entities: Vec<EntityRecord> =
            serde_json::from_str(&json).map_err(|e| Error::parse(entities_path.display().to_string(), e))?;
        for e in &mut entities {
            let mut seen = BTreeSet::new();
            e.aliases.retain(|a| seen.insert(a.clone()));
        }
        let triples_path = triples_path.as_ref();
        let tsv = fs::read_to_string(triples_path).map_err(|e| Error::io(triples_path, e))?;
        let triples = parse_triples(&tsv, &triples_path.display().to_string())?;
        Self::new(entities, triples)
    }
}

/// Parses `head<TAB>relation<TAB>tail` lines; blank lines and `#` comments are skipped.
pub fn parse_triples(tsv: &str, context: &str) -> Result<Vec<Triple>> {
    tsv.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|(i, line)| {
            let cols: Vec<&str> = line.split('\t').collect();
            match cols.as_slice() {
                [h, r, t] => Ok(Triple::new(h.trim(), r.trim(), t.trim())),
                _ => Err(Error::parse(
                    format!("{context}:{}", i + 1),
                    format!("expected 3 tab-separated columns, found {}", cols.len()),
                )),
            }
        })
        .collect()
}

/// Aliases of an entity other than its canonical form, deduplicated in order.
pub fn lookup_synonyms(kb: &KnowledgeBase, entity_id: &str) -> Result<Vec<String>> {
    let entity = kb.entity(entity_id).ok_or_else(|| Error::UnknownId {
        kind: "entity",
        id: entity_id.to_string(),
    })?;
    let mut seen = BTreeSet::new();
    Ok(entity
        .aliases
        .iter()
        .filter(|a| **a != entity.canonical && seen.insert(a.as_str()))
        .cloned()
        .collect())
}
