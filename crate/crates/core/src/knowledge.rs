//! Offline item knowledge base: genres of items, one description sentence
//! per genre, and genre membership for sampling contrast items.
//!
//! The KB is a JSON snapshot file validated on load; all sampling is a pure
//! function of (KB, arguments, seed), so runs are reproducible offline.

use crate::types::{Domain, ItemId};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::io::Read;
use std::path::Path;
use thiserror::Error;

/// Genre names are plain lowercase strings, unique within a KB.
pub type GenreName = String;

/// One recommendable item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Item {
    pub id: ItemId,
    pub title: String,
    pub domain: Domain,
    pub genres: Vec<GenreName>,
}

/// One genre: a single description sentence plus its member items.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Genre {
    pub description: String,
    pub members: Vec<ItemId>,
}

#[derive(Debug, Deserialize, Serialize)]
struct KbFile {
    items: Vec<Item>,
    genres: BTreeMap<GenreName, Genre>,
}

#[derive(Debug, Error)]
pub enum KbError {
    #[error("failed to read knowledge base: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid knowledge base JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("dangling references in knowledge base: {}", offenders.join("; "))]
    Dangling { offenders: Vec<String> },
    #[error("unknown item `{0}`")]
    UnknownItem(ItemId),
    #[error("unknown genre `{0}`")]
    UnknownGenre(GenreName),
    #[error("no eligible genre outside the conversation and the target")]
    NoEligibleGenre,
    #[error("genre `{0}` has no members left to sample")]
    EmptyGenre(GenreName),
}

/// Validated, immutable item/genre store.
#[derive(Debug, Clone)]
pub struct KnowledgeBase {
    items: BTreeMap<ItemId, Item>,
    genres: BTreeMap<GenreName, Genre>,
}

impl KnowledgeBase {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, KbError> {
        let file = std::fs::File::open(path)?;
        Self::from_reader(file)
    }

    pub fn from_reader(reader: impl Read) -> Result<Self, KbError> {
        let file: KbFile = serde_json::from_reader(reader)?;
        Self::build(file)
    }

    fn build(file: KbFile) -> Result<Self, KbError> {
        let mut items = BTreeMap::new();
        let mut offenders = Vec::new();
        for item in file.items {
            if item.genres.is_empty() {
                offenders.push(format!("item {} lists no genres", item.id));
            }
            for genre in &item.genres {
                if !file.genres.contains_key(genre) {
                    offenders.push(format!("item {} lists unknown genre `{genre}`", item.id));
                }
            }
            if items.insert(item.id.clone(), item.clone()).is_some() {
                offenders.push(format!("duplicate item id {}", item.id));
            }
        }
        for (name, genre) in &file.genres {
            if genre.description.trim().is_empty() {
                offenders.push(format!("genre `{name}` has an empty description"));
            } else if !genre
                .description
                .trim_end()
                .ends_with(['.', '!', '?'])
            {
                offenders.push(format!(
                    "genre `{name}` description does not end with sentence punctuation"
                ));
            }
            for member in &genre.members {
                match items.get(member) {
                    None => offenders.push(format!(
                        "genre `{name}` lists unknown member {member}"
                    )),
                    Some(item) if !item.genres.contains(name) => offenders.push(format!(
                        "genre `{name}` lists member {member} that does not carry it"
                    )),
                    Some(_) => {}
                }
            }
        }
        if !offenders.is_empty() {
            return Err(KbError::Dangling { offenders });
        }
        Ok(KnowledgeBase {
            items,
            genres: file.genres,
        })
    }

    pub fn to_json(&self) -> String {
        let file = KbFile {
            items: self.items.values().cloned().collect(),
            genres: self.genres.clone(),
        };
        serde_json::to_string_pretty(&file).expect("KB serializes")
    }

    pub fn item(&self, id: &ItemId) -> Option<&Item> {
        self.items.get(id)
    }

    pub fn contains_item(&self, id: &ItemId) -> bool {
        self.items.contains_key(id)
    }

    /// Items in ascending id order.
    pub fn items(&self) -> impl Iterator<Item = &Item> {
        self.items.values()
    }

    pub fn genre(&self, name: &str) -> Option<&Genre> {
        self.genres.get(name)
    }

    /// Genre names in ascending order.
    pub fn genre_names(&self) -> impl Iterator<Item = &str> {
        self.genres.keys().map(String::as_str)
    }

    pub fn n_items(&self) -> usize {
        self.items.len()
    }

    pub fn n_genres(&self) -> usize {
        self.genres.len()
    }

    pub fn domains(&self) -> BTreeSet<Domain> {
        self.items.values().map(|i| i.domain).collect()
    }

    /// The item's primary genre (first listed).
    pub fn genre_of(&self, id: &ItemId) -> Result<&str, KbError> {
        let item = self
            .items
            .get(id)
            .ok_or_else(|| KbError::UnknownItem(id.clone()))?;
        Ok(item.genres[0].as_str())
    }

    /// Uniform seeded draw from the KB genres minus `conversation_genres`
    /// minus the target genre.
    pub fn contrast_genre<R: Rng>(
        &self,
        conversation_genres: &BTreeSet<GenreName>,
        target: &str,
        rng: &mut R,
    ) -> Result<&str, KbError> {
        let eligible: Vec<&str> = self
            .genres
            .keys()
            .map(String::as_str)
            .filter(|g| *g != target && !conversation_genres.contains(*g))
            .collect();
        if eligible.is_empty() {
            return Err(KbError::NoEligibleGenre);
        }
        Ok(eligible[rng.gen_range(0..eligible.len())])
    }

    /// Uniform seeded draw from the genre's members minus `exclude`.
    pub fn sample_item<R: Rng>(
        &self,
        genre: &str,
        exclude: &HashSet<ItemId>,
        rng: &mut R,
    ) -> Result<&Item, KbError> {
        let members = &self
            .genres
            .get(genre)
            .ok_or_else(|| KbError::UnknownGenre(genre.to_string()))?
            .members;
        let eligible: Vec<&ItemId> = members.iter().filter(|m| !exclude.contains(*m)).collect();
        if eligible.is_empty() {
            return Err(KbError::EmptyGenre(genre.to_string()));
        }
        let id = eligible[rng.gen_range(0..eligible.len())];
        Ok(&self.items[id])
    }

    /// Genre names mentioned verbatim (case-insensitive, word-bounded) in a
    /// piece of text.
    pub fn genres_mentioned_in(&self, text: &str) -> BTreeSet<GenreName> {
        let words: HashSet<String> = text
            .split(|c: char| !c.is_alphanumeric())
            .filter(|w| !w.is_empty())
            .map(str::to_lowercase)
            .collect();
        self.genres
            .keys()
            .filter(|g| words.contains(g.as_str()))
            .cloned()
            .collect()
    }
}
