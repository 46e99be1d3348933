//! Synonym/antonym store with ordered senses.
//!
//! Entries are keyed case-insensitively on `(lemma, pos)` and loaded from a
//! TSV file with columns `lemma`, `pos`, `synonyms` (`|`-separated) and
//! `antonyms` (`|`-separated). List order is significant: rank 0 is the most
//! similar word and is what the rewrite scenarios use. A small bundled
//! lexicon covering the conversational movie/book register ships with the
//! crate and is the default.

use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;
use thiserror::Error;

const BUNDLED_LEXICON: &str = include_str!("lexicon/bundled.tsv");

/// Word class of a lexicon entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LexPos {
    Noun,
    Verb,
    Adjective,
    Adverb,
}

impl LexPos {
    fn parse(s: &str) -> Option<Self> {
        match s {
            "noun" | "n" => Some(LexPos::Noun),
            "verb" | "v" => Some(LexPos::Verb),
            "adjective" | "adj" | "a" => Some(LexPos::Adjective),
            "adverb" | "adv" | "r" => Some(LexPos::Adverb),
            _ => None,
        }
    }
}

impl fmt::Display for LexPos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LexPos::Noun => f.write_str("noun"),
            LexPos::Verb => f.write_str("verb"),
            LexPos::Adjective => f.write_str("adjective"),
            LexPos::Adverb => f.write_str("adverb"),
        }
    }
}

/// One lexicon row: a lemma with its ordered synonyms and antonyms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LexiconEntry {
    pub lemma: String,
    pub pos: LexPos,
    pub synonyms: Vec<String>,
    pub antonyms: Vec<String>,
}

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("line {line}: expected 2-4 tab-separated columns, got {got}")]
    BadColumns { line: usize, got: usize },
    #[error("line {line}: unknown part of speech `{pos}`")]
    BadPos { line: usize, pos: String },
    #[error("line {line}: duplicate entry for ({lemma}, {pos})")]
    Duplicate {
        line: usize,
        lemma: String,
        pos: LexPos,
    },
    #[error("failed to read lexicon: {0}")]
    Io(#[from] std::io::Error),
}

/// Case-insensitive `(lemma, pos)` keyed synonym/antonym store.
///
/// Lookups are total: unknown words yield `None`, never an error.
#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    entries: HashMap<(String, LexPos), LexiconEntry>,
}

impl Lexicon {
    /// The lexicon bundled with the crate (~200 conversational entries).
    pub fn bundled() -> Self {
        Self::from_reader(BUNDLED_LEXICON.as_bytes())
            .expect("bundled lexicon must parse")
    }

    /// Load a lexicon from a TSV file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, LexiconError> {
        let file = std::fs::File::open(path)?;
        Self::from_reader(file)
    }

    /// Parse the TSV format from any reader. Lines starting with `#` and
    /// blank lines are skipped.
    pub fn from_reader(reader: impl Read) -> Result<Self, LexiconError> {
        let mut entries = HashMap::new();
        for (idx, line) in BufReader::new(reader).lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            let trimmed = line.trim_end_matches(['\r', '\n']);
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            // Trailing empty columns may be dropped by editors; accept
            // 2 to 4 columns and treat the missing ones as empty lists.
            let cols: Vec<&str> = trimmed.split('\t').collect();
            if !(2..=4).contains(&cols.len()) {
                return Err(LexiconError::BadColumns {
                    line: lineno,
                    got: cols.len(),
                });
            }
            let lemma = cols[0].trim().to_lowercase();
            let pos = LexPos::parse(cols[1].trim()).ok_or_else(|| LexiconError::BadPos {
                line: lineno,
                pos: cols[1].trim().to_string(),
            })?;
            let entry = LexiconEntry {
                lemma: lemma.clone(),
                pos,
                synonyms: split_list(cols.get(2).copied().unwrap_or(""), &lemma),
                antonyms: split_list(cols.get(3).copied().unwrap_or(""), &lemma),
            };
            if entries.insert((lemma.clone(), pos), entry).is_some() {
                return Err(LexiconError::Duplicate {
                    line: lineno,
                    lemma,
                    pos,
                });
            }
        }
        Ok(Lexicon { entries })
    }

    /// Serialize back to the TSV format, rows sorted by (lemma, pos).
    pub fn to_tsv(&self) -> String {
        let mut keys: Vec<&(String, LexPos)> = self.entries.keys().collect();
        keys.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| pos_order(a.1).cmp(&pos_order(b.1))));
        let mut out = String::new();
        for key in keys {
            let e = &self.entries[key];
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\n",
                e.lemma,
                e.pos,
                e.synonyms.join("|"),
                e.antonyms.join("|")
            ));
        }
        out
    }

    pub fn entry(&self, lemma: &str, pos: LexPos) -> Option<&LexiconEntry> {
        self.entries.get(&(lemma.to_lowercase(), pos))
    }

    pub fn contains(&self, lemma: &str, pos: LexPos) -> bool {
        self.entries.contains_key(&(lemma.to_lowercase(), pos))
    }

    /// Rank-0 (most similar) synonym for `(lemma, pos)`, if any.
    pub fn synonym(&self, lemma: &str, pos: LexPos) -> Option<&str> {
        self.entry(lemma, pos)
            .and_then(|e| e.synonyms.first())
            .map(String::as_str)
    }

    /// Rank-0 antonym for `(lemma, pos)`, if any.
    pub fn antonym(&self, lemma: &str, pos: LexPos) -> Option<&str> {
        self.entry(lemma, pos)
            .and_then(|e| e.antonyms.first())
            .map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

fn pos_order(pos: LexPos) -> u8 {
    match pos {
        LexPos::Noun => 0,
        LexPos::Verb => 1,
        LexPos::Adjective => 2,
        LexPos::Adverb => 3,
    }
}

/// Split a `|`-separated word list, dropping empties, duplicates and the
/// lemma itself while preserving first-seen order.
fn split_list(raw: &str, lemma: &str) -> Vec<String> {
    let mut seen = Vec::new();
    for word in raw.split('|') {
        let w = word.trim().to_lowercase();
        if w.is_empty() || w == lemma || seen.contains(&w) {
            continue;
        }
        seen.push(w);
    }
    seen
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_row_with_ordered_lists() {
        let lex = Lexicon::from_reader("like\tverb\tenjoy|love\thate|dislike\n".as_bytes()).unwrap();
        let entry = lex.entry("like", LexPos::Verb).unwrap();
        assert_eq!(entry.synonyms, vec!["enjoy", "love"]);
        assert_eq!(entry.antonyms, vec!["hate", "dislike"]);
        assert_eq!(lex.synonym("like", LexPos::Verb), Some("enjoy"));
        assert_eq!(lex.antonym("like", LexPos::Verb), Some("hate"));
    }

    #[test]
    fn empty_file_gives_empty_lexicon() {
        let lex = Lexicon::from_reader("".as_bytes()).unwrap();
        assert!(lex.is_empty());
        assert_eq!(lex.synonym("like", LexPos::Verb), None);
        assert_eq!(lex.antonym("like", LexPos::Verb), None);
    }

    #[test]
    fn unknown_word_is_none_not_error() {
        let lex = Lexicon::bundled();
        assert_eq!(lex.synonym("xyzzy", LexPos::Noun), None);
        assert_eq!(lex.antonym("xyzzy", LexPos::Noun), None);
    }

    #[test]
    fn duplicate_key_is_load_error() {
        let err = Lexicon::from_reader(
            "like\tverb\tenjoy\thate\nLIKE\tverb\tlove\tdislike\n".as_bytes(),
        )
        .unwrap_err();
        assert!(matches!(err, LexiconError::Duplicate { line: 2, .. }));
    }

    #[test]
    fn bad_pos_reports_line_number() {
        let err =
            Lexicon::from_reader("like\tverb\tenjoy\thate\nfoo\tblah\tx\ty\n".as_bytes())
                .unwrap_err();
        match err {
            LexiconError::BadPos { line, pos } => {
                assert_eq!(line, 2);
                assert_eq!(pos, "blah");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn bundled_covers_core_rewrites() {
        let lex = Lexicon::bundled();
        assert_eq!(lex.synonym("like", LexPos::Verb), Some("enjoy"));
        assert_eq!(lex.synonym("horror", LexPos::Noun), Some("scary"));
        assert_eq!(lex.synonym("movie", LexPos::Noun), Some("film"));
        assert_eq!(lex.antonym("like", LexPos::Verb), Some("hate"));
        assert!(lex.len() >= 200);
    }

    #[test]
    fn bundled_antonyms_symmetric_for_like_hate() {
        let lex = Lexicon::bundled();
        assert_eq!(lex.antonym("hate", LexPos::Verb), Some("like"));
    }

    #[test]
    fn nouns_carry_no_antonyms_in_bundle() {
        let lex = Lexicon::bundled();
        assert_eq!(lex.antonym("movie", LexPos::Noun), None);
    }

    #[test]
    fn lemma_excluded_from_own_synonyms() {
        let lex = Lexicon::from_reader("big\tadjective\tbig|large|large\t\n".as_bytes()).unwrap();
        assert_eq!(
            lex.entry("big", LexPos::Adjective).unwrap().synonyms,
            vec!["large"]
        );
    }

    #[test]
    fn tsv_round_trip_is_byte_stable() {
        let lex = Lexicon::bundled();
        let first = lex.to_tsv();
        let reloaded = Lexicon::from_reader(first.as_bytes()).unwrap();
        assert_eq!(reloaded.to_tsv(), first);
    }
}
