use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::KnowledgeBase;
use crate::{Error, Result};

/// A linked entity mention, in character offsets of the linked text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityMention {
    pub surface: String,
    pub entity_id: String,
    pub start: usize,
    pub end: usize,
}

/// Lowercase surface forms mapped to entity ids.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Lexicon {
    entries: HashMap<String, String>,
    max_chars: usize,
}

impl Lexicon {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a surface form; the first entity registered for a surface wins.
    pub fn insert(&mut self, surface: &str, entity_id: &str) {
        let key = surface.trim().to_lowercase();
        if key.is_empty() {
            return;
        }
        self.max_chars = self.max_chars.max(key.chars().count());
        self.entries.entry(key).or_insert_with(|| entity_id.to_string());
    }

    pub fn get(&self, surface: &str) -> Option<&str> {
        self.entries.get(surface).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Canonical names and aliases of every entity.
    pub fn from_kb(kb: &KnowledgeBase) -> Self {
        let mut lex = Self::new();
        for e in kb.entities() {
            lex.insert(&e.canonical, &e.entity_id);
            for alias in &e.aliases {
                lex.insert(alias, &e.entity_id);
            }
        }
        lex
    }

    /// Parses `surface<TAB>entity_id` lines.
    pub fn parse(tsv: &str, context: &str) -> Result<Self> {
        let mut lex = Self::new();
        for (i, line) in tsv.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            match line.split('\t').collect::<Vec<_>>().as_slice() {
                [surface, id] => lex.insert(surface, id.trim()),
                cols => {
                    return Err(Error::parse(
                        format!("{context}:{}", i + 1),
                        format!("expected 2 tab-separated columns, found {}", cols.len()),
                    ))
                }
            }
        }
        Ok(lex)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let tsv = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&tsv, &path.display().to_string())
    }
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric()
}

/// Greedy longest-match dictionary linking, left to right, case-insensitive.
///
/// Matches must start and end on token boundaries, i.e. must not be flanked
/// by alphanumeric characters.
pub fn link_entities(text: &str, lexicon: &Lexicon) -> Vec<EntityMention> {
    let chars: Vec<char> = text.chars().collect();
    let n = chars.len();
    let boundary_before = |i: usize| i == 0 || !is_word_char(chars[i - 1]) || !is_word_char(chars[i]);
    let boundary_after = |i: usize| i == n || !is_word_char(chars[i]) || !is_word_char(chars[i - 1]);

    let mut mentions = Vec::new();
    let mut i = 0;
    while i < n {
        if !is_word_char(chars[i]) || !boundary_before(i) {
            i += 1;
            continue;
        }
        let longest = (i + lexicon.max_chars).min(n);
        let found = (i + 1..=longest).rev().find_map(|end| {
            if !boundary_after(end) {
                return None;
            }
            let surface: String = chars[i..end].iter().collect();
            lexicon
                .get(&surface.to_lowercase())
                .map(|id| (end, surface, id.to_string()))
        });
        match found {
            Some((end, surface, entity_id)) => {
                mentions.push(EntityMention {
                    surface,
                    entity_id,
                    start: i,
                    end,
                });
                i = end;
            }
            None => i += 1,
        }
    }
    mentions
}
