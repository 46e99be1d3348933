//! Shared domain types used across the pipeline.

use serde::{Deserialize, Serialize};
use std::fmt;

/// Opaque item identifier.
///
/// REDIAL uses numeric movie ids (`@111` markers become `"111"`), OpenDialKG
/// identifies items by title. Both are carried as strings; ordering is
/// lexicographic and used only for deterministic tie-breaking.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ItemId(pub String);

impl ItemId {
    pub fn new(id: impl Into<String>) -> Self {
        ItemId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ItemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ItemId {
    fn from(s: &str) -> Self {
        ItemId(s.to_string())
    }
}

impl From<String> for ItemId {
    fn from(s: String) -> Self {
        ItemId(s)
    }
}

/// Recommendation domain of a dialogue or item.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    Movie,
    Book,
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Domain::Movie => f.write_str("movie"),
            Domain::Book => f.write_str("book"),
        }
    }
}

/// Dialogue role: the user asking for recommendations (seeker) or the
/// system/crowd-worker providing them (recommender).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Speaker {
    Seeker,
    Recommender,
}

impl fmt::Display for Speaker {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Speaker::Seeker => f.write_str("seeker"),
            Speaker::Recommender => f.write_str("recommender"),
        }
    }
}
