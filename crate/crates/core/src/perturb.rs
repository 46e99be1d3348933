//! The four adversarial scenario generators and corpus-level batch
//! application.
//!
//! Category 1 rewrites keep the meaning of the user's answer (synonym
//! substitution, adding in-line details) and expect the recommender to make
//! the *same* prediction. Category 2 rewrites reverse the meaning (antonym /
//! negation, appending a contradiction) and expect a *different* prediction.
//!
//! Every generator is a pure function of (instance, lexicon, KB, seed): the
//! per-instance RNG is derived from the seed and the instance identity, so
//! results do not depend on batch or execution order.

use crate::corpus::{truncate_utterance, EvalInstance, Turn};
use crate::knowledge::{KbError, KnowledgeBase};
use crate::lexicon::{LexPos, Lexicon};
use crate::lingo::{self, Lingo, PosCategory, Tense, Token};
use crate::types::{Domain, ItemId};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::{BTreeSet, HashSet};
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use thiserror::Error;

/// The four adversarial scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Cat1Change,
    Cat1Add,
    Cat2Change,
    Cat2Add,
}

impl Scenario {
    pub const ALL: [Scenario; 4] = [
        Scenario::Cat1Change,
        Scenario::Cat1Add,
        Scenario::Cat2Change,
        Scenario::Cat2Add,
    ];

    pub fn expectation(self) -> Expectation {
        match self {
            Scenario::Cat1Change | Scenario::Cat1Add => Expectation::SamePrediction,
            Scenario::Cat2Change | Scenario::Cat2Add => Expectation::DifferentPrediction,
        }
    }

    pub fn is_cat1(self) -> bool {
        self.expectation() == Expectation::SamePrediction
    }

    /// Kebab-case name used in CLI flags and file names.
    pub fn slug(self) -> &'static str {
        match self {
            Scenario::Cat1Change => "cat1-change",
            Scenario::Cat1Add => "cat1-add",
            Scenario::Cat2Change => "cat2-change",
            Scenario::Cat2Add => "cat2-add",
        }
    }

    /// Row label in report tables.
    pub fn label(self) -> &'static str {
        match self {
            Scenario::Cat1Change => "Cat1-Change",
            Scenario::Cat1Add => "Cat1-Add",
            Scenario::Cat2Change => "Cat2-Change",
            Scenario::Cat2Add => "Cat2-Add",
        }
    }

    pub fn from_slug(s: &str) -> Option<Scenario> {
        match s {
            "cat1-change" | "cat1_change" => Some(Scenario::Cat1Change),
            "cat1-add" | "cat1_add" => Some(Scenario::Cat1Add),
            "cat2-change" | "cat2_change" => Some(Scenario::Cat2Change),
            "cat2-add" | "cat2_add" => Some(Scenario::Cat2Add),
            _ => None,
        }
    }
}

/// What a robust recommender is expected to do with the perturbed answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expectation {
    SamePrediction,
    DifferentPrediction,
}

/// How Cat2-Change builds the opposite sentence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cat2Mode {
    /// Replace the main verb by its antonym, tense preserved.
    Antonym,
    /// Insert `not` / do-support via [`Lingo::negate`].
    Negation,
    /// Try the antonym first, fall back to negation.
    Auto,
}

/// Why an instance produced no usable rewrite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SkipReason {
    NothingRewritable,
    NoVerb,
    AlreadyNegated,
    NoAntonym,
    NoKnowledgeBase,
    UnknownItem,
    NoEligibleGenre,
    EmptyGenre,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EditKind {
    Synonym,
    Antonym,
    Negation,
    DetailAppend,
    ContradictionAppend,
}

/// Provenance record for one rewrite step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edit {
    pub kind: EditKind,
    /// Byte span of the replaced text in the original answer; `None` for
    /// appended material.
    pub span: Option<(usize, usize)>,
    pub original: String,
    pub replacement: String,
}

/// A perturbed evaluation instance: the adversarial answer plus provenance.
///
/// `skipped` instances carry the original answer unchanged and are excluded
/// from adversarial aggregates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbedInstance {
    pub base: EvalInstance,
    pub scenario: Scenario,
    pub answer_adv: String,
    pub expectation: Expectation,
    pub edits: Vec<Edit>,
    pub skipped: Option<SkipReason>,
}

impl PerturbedInstance {
    pub fn is_skipped(&self) -> bool {
        self.skipped.is_some()
    }
}

/// Templates for the Cat2-Add contradictory sentence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContradictionTemplates {
    pub movie: String,
    pub book: String,
    pub generic: String,
}

impl Default for ContradictionTemplates {
    fn default() -> Self {
        ContradictionTemplates {
            movie: "But I'm not in the mood to watch it.".to_string(),
            book: "But I'm not in the mood to read it.".to_string(),
            generic: "But that is not what I want at all.".to_string(),
        }
    }
}

/// Verbs whose unnegated presence signals a desire for a mentioned item.
const DESIRE_VERBS: [&str; 5] = ["like", "love", "enjoy", "want", "prefer"];

/// How many words Cat1-Change rewrites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cat1Scope {
    /// Replace every rewritable verb and noun (default).
    ReplaceAll,
    /// Stop after the first successful replacement.
    SingleWord,
}

/// Scenario generator bundle: lexicon, rule engine, optional KB, templates.
pub struct Perturber<'a> {
    lingo: Lingo,
    lexicon: &'a Lexicon,
    kb: Option<&'a KnowledgeBase>,
    cat1_scope: Cat1Scope,
    cat2_mode: Cat2Mode,
    templates: ContradictionTemplates,
}

impl<'a> Perturber<'a> {
    pub fn new(lexicon: &'a Lexicon, kb: Option<&'a KnowledgeBase>) -> Self {
        Perturber {
            lingo: Lingo::new(),
            lexicon,
            kb,
            cat1_scope: Cat1Scope::ReplaceAll,
            cat2_mode: Cat2Mode::Auto,
            templates: ContradictionTemplates::default(),
        }
    }

    pub fn with_cat1_scope(mut self, scope: Cat1Scope) -> Self {
        self.cat1_scope = scope;
        self
    }

    pub fn with_cat2_mode(mut self, mode: Cat2Mode) -> Self {
        self.cat2_mode = mode;
        self
    }

    pub fn with_templates(mut self, templates: ContradictionTemplates) -> Self {
        self.templates = templates;
        self
    }

    pub fn lingo(&self) -> &Lingo {
        &self.lingo
    }

    /// Tokenize, protect mentioned-item titles, and tag the answer.
    fn prepare_answer(&self, turn: &Turn) -> Vec<Token> {
        let tokens = lingo::tokenize(&turn.text);
        let tokens = mark_protected(tokens, &self.titles_of(turn));
        self.lingo.tag(tokens, self.lexicon)
    }

    /// Title strings for the turn's mentioned items. Falls back to the raw
    /// id, which for title-keyed corpora (OpenDialKG) is the title itself.
    fn titles_of(&self, turn: &Turn) -> Vec<String> {
        turn.mentioned_items
            .iter()
            .map(|id| {
                self.kb
                    .and_then(|kb| kb.item(id))
                    .map(|item| item.title.clone())
                    .unwrap_or_else(|| id.0.clone())
            })
            .collect()
    }

    fn result(
        inst: &EvalInstance,
        scenario: Scenario,
        answer_adv: String,
        edits: Vec<Edit>,
    ) -> PerturbedInstance {
        PerturbedInstance {
            base: inst.clone(),
            scenario,
            answer_adv,
            expectation: scenario.expectation(),
            edits,
            skipped: None,
        }
    }

    fn skipped(inst: &EvalInstance, scenario: Scenario, reason: SkipReason) -> PerturbedInstance {
        PerturbedInstance {
            base: inst.clone(),
            scenario,
            answer_adv: inst.answer.text.clone(),
            expectation: scenario.expectation(),
            edits: Vec::new(),
            skipped: Some(reason),
        }
    }

    /// Cat1-Change: replace every non-protected verb and noun by its rank-0
    /// synonym, verbs re-inflected to their original tense. Words without
    /// synonyms are kept. Skips when nothing was replaced.
    pub fn cat1_change(&self, inst: &EvalInstance) -> PerturbedInstance {
        let tokens = self.prepare_answer(&inst.answer);
        let mut out = tokens.clone();
        let mut edits = Vec::new();
        for (i, tok) in tokens.iter().enumerate() {
            if tok.protected {
                continue;
            }
            let Some(tag) = tok.tag else { continue };
            let replacement = match tag.category {
                PosCategory::Verb => self.verb_synonym(tok, tag.tense.unwrap_or(Tense::Base)),
                PosCategory::Noun => self.noun_synonym(&tok.surface),
                _ => None,
            };
            if let Some(new_surface) = replacement {
                let new_surface = match_case(&tok.surface, &new_surface);
                if new_surface != tok.surface {
                    edits.push(Edit {
                        kind: EditKind::Synonym,
                        span: tok.span,
                        original: tok.surface.clone(),
                        replacement: new_surface.clone(),
                    });
                    out[i].surface = new_surface;
                    out[i].span = None;
                    if self.cat1_scope == Cat1Scope::SingleWord {
                        break;
                    }
                }
            }
        }
        if edits.is_empty() {
            return Self::skipped(inst, Scenario::Cat1Change, SkipReason::NothingRewritable);
        }
        Self::result(inst, Scenario::Cat1Change, lingo::detokenize(&out), edits)
    }

    fn verb_synonym(&self, tok: &Token, tense: Tense) -> Option<String> {
        let lemma = tok
            .lemma
            .clone()
            .unwrap_or_else(|| tok.surface.to_lowercase());
        let synonym = self.lexicon.synonym(&lemma, LexPos::Verb)?;
        Some(self.lingo.inflect(synonym, tense))
    }

    fn noun_synonym(&self, surface: &str) -> Option<String> {
        let lower = surface.to_lowercase();
        if let Some(syn) = self.lexicon.synonym(&lower, LexPos::Noun) {
            return Some(syn.to_string());
        }
        for candidate in singular_candidates(&lower) {
            if let Some(syn) = self.lexicon.synonym(&candidate, LexPos::Noun) {
                return Some(self.lingo.pluralize_noun(syn));
            }
        }
        None
    }

    /// Cat1-Add: append the target genre's description sentence plus a
    /// dislike sentence about a contrast-genre item.
    pub fn cat1_add<R: rand::Rng>(&self, inst: &EvalInstance, rng: &mut R) -> PerturbedInstance {
        let Some(kb) = self.kb else {
            return Self::skipped(inst, Scenario::Cat1Add, SkipReason::NoKnowledgeBase);
        };
        let Some(target) = inst.truth.first() else {
            return Self::skipped(inst, Scenario::Cat1Add, SkipReason::UnknownItem);
        };
        let target_genre = match kb.genre_of(target) {
            Ok(g) => g,
            Err(_) => return Self::skipped(inst, Scenario::Cat1Add, SkipReason::UnknownItem),
        };

        let mut conversation_genres: BTreeSet<String> = BTreeSet::new();
        let mut mentioned_items: HashSet<ItemId> = HashSet::new();
        for turn in &inst.context {
            conversation_genres.extend(kb.genres_mentioned_in(&turn.text));
            mentioned_items.extend(turn.mentioned_items.iter().cloned());
        }
        conversation_genres.extend(kb.genres_mentioned_in(&inst.answer.text));
        mentioned_items.extend(inst.answer.mentioned_items.iter().cloned());

        let contrast = match kb.contrast_genre(&conversation_genres, target_genre, rng) {
            Ok(g) => g,
            Err(KbError::NoEligibleGenre) => {
                return Self::skipped(inst, Scenario::Cat1Add, SkipReason::NoEligibleGenre)
            }
            Err(_) => return Self::skipped(inst, Scenario::Cat1Add, SkipReason::UnknownItem),
        };
        let contrast_item = match kb.sample_item(contrast, &mentioned_items, rng) {
            Ok(item) => item,
            Err(_) => return Self::skipped(inst, Scenario::Cat1Add, SkipReason::EmptyGenre),
        };

        let description = kb
            .genre(target_genre)
            .expect("target genre exists")
            .description
            .clone();
        let noun = match inst.domain {
            Domain::Movie => "movies",
            Domain::Book => "books",
        };
        let dislike = format!(
            "However, I do not like {contrast} genre {noun} like {}.",
            contrast_item.title
        );
        let appended = format!("{description} {dislike}");
        let answer_adv = format!("{} {}", inst.answer.text, appended);
        let edits = vec![Edit {
            kind: EditKind::DetailAppend,
            span: None,
            original: String::new(),
            replacement: appended,
        }];
        Self::result(inst, Scenario::Cat1Add, answer_adv, edits)
    }

    /// Cat2-Change: make the answer mean the opposite, by antonym
    /// substitution on the main verb or by negation.
    pub fn cat2_change(&self, inst: &EvalInstance) -> PerturbedInstance {
        let tokens = self.prepare_answer(&inst.answer);
        if tokens.iter().any(|t| is_negation_surface(&t.surface)) {
            return Self::skipped(inst, Scenario::Cat2Change, SkipReason::AlreadyNegated);
        }
        let Some((verb_idx, tag)) = lingo::main_verb(&tokens) else {
            return Self::skipped(inst, Scenario::Cat2Change, SkipReason::NoVerb);
        };

        if matches!(self.cat2_mode, Cat2Mode::Antonym | Cat2Mode::Auto) {
            let tok = &tokens[verb_idx];
            let lemma = tok
                .lemma
                .clone()
                .unwrap_or_else(|| tok.surface.to_lowercase());
            if let Some(antonym) = self.lexicon.antonym(&lemma, LexPos::Verb) {
                let tense = tag.tense.unwrap_or(Tense::Base);
                let replacement =
                    match_case(&tok.surface, &self.lingo.inflect(antonym, tense));
                let mut out = tokens.clone();
                let edit = Edit {
                    kind: EditKind::Antonym,
                    span: tok.span,
                    original: tok.surface.clone(),
                    replacement: replacement.clone(),
                };
                out[verb_idx].surface = replacement;
                out[verb_idx].span = None;
                return Self::result(
                    inst,
                    Scenario::Cat2Change,
                    lingo::detokenize(&out),
                    vec![edit],
                );
            }
            if self.cat2_mode == Cat2Mode::Antonym {
                return Self::skipped(inst, Scenario::Cat2Change, SkipReason::NoAntonym);
            }
        }

        match self.lingo.negate(&tokens) {
            Ok(negation) if !negation.already_negated => {
                let inserted: Vec<&str> = negation
                    .tokens
                    .iter()
                    .filter(|t| t.span.is_none())
                    .map(|t| t.surface.as_str())
                    .collect();
                let edit = Edit {
                    kind: EditKind::Negation,
                    span: tokens[verb_idx].span,
                    original: tokens[verb_idx].surface.clone(),
                    replacement: inserted.join(" "),
                };
                Self::result(
                    inst,
                    Scenario::Cat2Change,
                    lingo::detokenize(&negation.tokens),
                    vec![edit],
                )
            }
            Ok(_) => Self::skipped(inst, Scenario::Cat2Change, SkipReason::AlreadyNegated),
            Err(_) => Self::skipped(inst, Scenario::Cat2Change, SkipReason::NoVerb),
        }
    }

    /// Cat2-Add: append a contradictory sentence. When the answer expresses
    /// desire for a mentioned item, the domain template is used; otherwise a
    /// generic contradiction. Never skips.
    pub fn cat2_add(&self, inst: &EvalInstance) -> PerturbedInstance {
        let tokens = self.prepare_answer(&inst.answer);
        let template = if answer_expresses_desire(&tokens)
            && !inst.answer.mentioned_items.is_empty()
        {
            match inst.domain {
                Domain::Movie => &self.templates.movie,
                Domain::Book => &self.templates.book,
            }
        } else {
            &self.templates.generic
        };
        let answer_adv = format!("{} {}", inst.answer.text, template);
        let edits = vec![Edit {
            kind: EditKind::ContradictionAppend,
            span: None,
            original: String::new(),
            replacement: template.clone(),
        }];
        Self::result(inst, Scenario::Cat2Add, answer_adv, edits)
    }

    /// Apply one scenario to every instance. Output order equals input
    /// order; the per-instance RNG is derived from (seed, dialogue id, turn
    /// index) so batch composition cannot change any result. Final answers
    /// are truncated to the utterance word limit.
    pub fn perturb_corpus(
        &self,
        instances: &[EvalInstance],
        scenario: Scenario,
        seed: u64,
    ) -> Vec<PerturbedInstance> {
        instances
            .iter()
            .map(|inst| {
                let mut result = match scenario {
                    Scenario::Cat1Change => self.cat1_change(inst),
                    Scenario::Cat1Add => {
                        let mut rng = instance_rng(seed, inst);
                        self.cat1_add(inst, &mut rng)
                    }
                    Scenario::Cat2Change => self.cat2_change(inst),
                    Scenario::Cat2Add => self.cat2_add(inst),
                };
                result.answer_adv = truncate_utterance(&result.answer_adv);
                result
            })
            .collect()
    }
}

/// Deterministic per-instance RNG: ChaCha8 keyed by SHA-256 of
/// (seed, dialogue id, turn index).
pub fn instance_rng(seed: u64, inst: &EvalInstance) -> ChaCha8Rng {
    use rand::SeedableRng;
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update(inst.dialogue_id.as_bytes());
    hasher.update([0u8]);
    hasher.update((inst.turn_index as u64).to_le_bytes());
    let digest: [u8; 32] = hasher.finalize().into();
    ChaCha8Rng::from_seed(digest)
}

fn is_negation_surface(surface: &str) -> bool {
    let lower = surface.to_lowercase();
    lower == "not" || lower.ends_with("n't")
}

/// Desire detection: a desire-list verb, not under negation within its
/// sentence.
fn answer_expresses_desire(tokens: &[Token]) -> bool {
    let mut sentence_start = 0;
    for (i, tok) in tokens.iter().enumerate() {
        if lingo::is_punctuation(&tok.surface) && tok.surface != "," {
            sentence_start = i + 1;
            continue;
        }
        let Some(tag) = tok.tag else { continue };
        if tag.category != PosCategory::Verb {
            continue;
        }
        let lemma = tok
            .lemma
            .clone()
            .unwrap_or_else(|| tok.surface.to_lowercase());
        if !DESIRE_VERBS.contains(&lemma.as_str()) {
            continue;
        }
        let negated = tokens[sentence_start..i]
            .iter()
            .any(|t| is_negation_surface(&t.surface));
        if !negated {
            return true;
        }
    }
    false
}

/// Mark tokens that fall inside any mentioned-item title (case-insensitive
/// consecutive match).
fn mark_protected(mut tokens: Vec<Token>, titles: &[String]) -> Vec<Token> {
    let lowered: Vec<String> = tokens.iter().map(|t| t.surface.to_lowercase()).collect();
    for title in titles {
        let title_tokens: Vec<String> = lingo::tokenize(title)
            .into_iter()
            .map(|t| t.surface.to_lowercase())
            .collect();
        if title_tokens.is_empty() || title_tokens.len() > tokens.len() {
            continue;
        }
        for start in 0..=(tokens.len() - title_tokens.len()) {
            if lowered[start..start + title_tokens.len()] == title_tokens[..] {
                for tok in &mut tokens[start..start + title_tokens.len()] {
                    tok.protected = true;
                }
            }
        }
    }
    tokens
}

/// Preserve leading capitalization when substituting a word.
fn match_case(original: &str, replacement: &str) -> String {
    let starts_upper = original.chars().next().map(char::is_uppercase).unwrap_or(false);
    if !starts_upper {
        return replacement.to_string();
    }
    let mut chars = replacement.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

fn singular_candidates(word: &str) -> Vec<String> {
    let mut out = Vec::new();
    if let Some(stem) = word.strip_suffix("ies") {
        out.push(format!("{stem}y"));
    }
    if let Some(stem) = word.strip_suffix('s') {
        if !stem.is_empty() {
            out.push(stem.to_string());
        }
    }
    if let Some(stem) = word.strip_suffix("es") {
        out.push(stem.to_string());
    }
    out
}

// ---------------------------------------------------------------------------
// Perturbed-instance file format (JSON lines with a metadata header line)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbedHeader {
    pub schema: String,
    pub scenario: Scenario,
    pub seed: u64,
    pub cat2_mode: Cat2Mode,
    pub n_instances: usize,
    pub n_skipped: usize,
}

#[derive(Debug, Error)]
pub enum PerturbFileError {
    #[error("failed to read perturbed file: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: malformed JSON: {message}")]
    Parse { line: usize, message: String },
    #[error("missing header line")]
    MissingHeader,
    #[error("unsupported schema `{0}`")]
    BadSchema(String),
}

pub fn write_perturbed(
    header: &PerturbedHeader,
    instances: &[PerturbedInstance],
    mut writer: impl Write,
) -> Result<(), PerturbFileError> {
    let header_json = serde_json::to_string(header).expect("header serializes");
    writer.write_all(header_json.as_bytes())?;
    writer.write_all(b"\n")?;
    for inst in instances {
        let line = serde_json::to_string(inst).expect("instance serializes");
        writer.write_all(line.as_bytes())?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_perturbed(
    path: impl AsRef<Path>,
) -> Result<(PerturbedHeader, Vec<PerturbedInstance>), PerturbFileError> {
    read_perturbed_reader(std::fs::File::open(path)?)
}

pub fn read_perturbed_reader(
    reader: impl Read,
) -> Result<(PerturbedHeader, Vec<PerturbedInstance>), PerturbFileError> {
    let mut lines = BufReader::new(reader).lines();
    let header_line = lines.next().ok_or(PerturbFileError::MissingHeader)??;
    let header: PerturbedHeader =
        serde_json::from_str(&header_line).map_err(|e| PerturbFileError::Parse {
            line: 1,
            message: e.to_string(),
        })?;
    if header.schema != crate::schema::PERTURBED {
        return Err(PerturbFileError::BadSchema(header.schema));
    }
    let mut instances = Vec::new();
    for (idx, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        instances.push(serde_json::from_str(&line).map_err(|e| PerturbFileError::Parse {
            line: idx + 2,
            message: e.to_string(),
        })?);
    }
    Ok((header, instances))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::extract_instances;
    use crate::corpus::Dialogue;
    use crate::types::Speaker;

    fn kb() -> KnowledgeBase {
        let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures/toy_kb.json");
        KnowledgeBase::load(path).unwrap()
    }

    fn turn(speaker: Speaker, text: &str, mentioned: &[&str], truth: &[&str]) -> Turn {
        Turn {
            speaker,
            text: text.to_string(),
            mentioned_items: mentioned.iter().map(|m| ItemId::from(*m)).collect(),
            ground_truth: truth.iter().map(|m| ItemId::from(*m)).collect(),
        }
    }

    fn instance(answer: &str, mentioned: &[&str], truth: &[&str], domain: Domain) -> EvalInstance {
        let dlg = Dialogue {
            id: "d1".to_string(),
            domain,
            turns: vec![
                turn(Speaker::Seeker, answer, mentioned, &[]),
                turn(Speaker::Recommender, "here you go", truth, truth),
            ],
        };
        extract_instances(&[dlg]).remove(0)
    }

    #[test]
    fn cat1_change_synonym_rewrite_example() {
        let lexicon = Lexicon::bundled();
        let perturber = Perturber::new(&lexicon, None);
        let inst = instance("I like watching horror movies", &[], &["101"], Domain::Movie);
        let out = perturber.cat1_change(&inst);
        assert!(!out.is_skipped());
        assert_eq!(out.answer_adv, "I enjoy watching scary films");
        assert_eq!(out.expectation, Expectation::SamePrediction);
        assert_eq!(out.edits.len(), 3);
    }

    #[test]
    fn cat1_change_single_word_scope_stops_after_first_swap() {
        let lexicon = Lexicon::bundled();
        let perturber = Perturber::new(&lexicon, None).with_cat1_scope(Cat1Scope::SingleWord);
        let inst = instance("I like watching horror movies", &[], &["101"], Domain::Movie);
        let out = perturber.cat1_change(&inst);
        assert_eq!(out.answer_adv, "I enjoy watching horror movies");
        assert_eq!(out.edits.len(), 1);
    }

    #[test]
    fn cat1_change_preserves_tense() {
        let lexicon = Lexicon::bundled();
        let perturber = Perturber::new(&lexicon, None);
        let inst = instance("I liked horror movies", &[], &["101"], Domain::Movie);
        let out = perturber.cat1_change(&inst);
        assert_eq!(out.answer_adv, "I enjoyed scary films");
    }

    #[test]
    fn cat1_change_skips_title_only_answer() {
        let lexicon = Lexicon::bundled();
        let kb = kb();
        let perturber = Perturber::new(&lexicon, Some(&kb));
        let inst = instance("The Last Exorcism", &["101"], &["101"], Domain::Movie);
        let out = perturber.cat1_change(&inst);
        assert_eq!(out.skipped, Some(SkipReason::NothingRewritable));
        assert_eq!(out.answer_adv, "The Last Exorcism");
    }

    #[test]
    fn cat1_change_protected_title_survives() {
        let lexicon = Lexicon::bundled();
        let kb = kb();
        let perturber = Perturber::new(&lexicon, Some(&kb));
        // `The Fast and Furious` contains no rewritable word anyway, so use a
        // title whose words do have synonyms when unprotected.
        let inst = instance(
            "I like Grave Whispers a lot",
            &["103"],
            &["103"],
            Domain::Movie,
        );
        let out = perturber.cat1_change(&inst);
        assert!(out.answer_adv.contains("Grave Whispers"));
        assert!(out.answer_adv.starts_with("I enjoy"));
    }

    #[test]
    fn cat2_change_antonym_example() {
        let lexicon = Lexicon::bundled();
        let perturber = Perturber::new(&lexicon, None).with_cat2_mode(Cat2Mode::Antonym);
        let inst = instance("I like watching horror movies", &[], &["101"], Domain::Movie);
        let out = perturber.cat2_change(&inst);
        assert_eq!(out.answer_adv, "I hate watching horror movies");
        assert_eq!(out.expectation, Expectation::DifferentPrediction);
    }

    #[test]
    fn cat2_change_negation_example() {
        let lexicon = Lexicon::bundled();
        let perturber = Perturber::new(&lexicon, None).with_cat2_mode(Cat2Mode::Negation);
        let inst = instance("I like watching horror movies", &[], &["101"], Domain::Movie);
        let out = perturber.cat2_change(&inst);
        assert_eq!(out.answer_adv, "I do not like watching horror movies");
    }

    #[test]
    fn cat2_change_antonym_preserves_tense() {
        let lexicon = Lexicon::bundled();
        let perturber = Perturber::new(&lexicon, None).with_cat2_mode(Cat2Mode::Antonym);
        let inst = instance("I liked it a lot", &[], &["101"], Domain::Movie);
        let out = perturber.cat2_change(&inst);
        assert_eq!(out.answer_adv, "I hated it a lot");
    }

    #[test]
    fn cat2_change_skips_verbless_and_negated() {
        let lexicon = Lexicon::bundled();
        let perturber = Perturber::new(&lexicon, None);
        let verbless = instance("Horror movies!", &[], &["101"], Domain::Movie);
        assert_eq!(
            perturber.cat2_change(&verbless).skipped,
            Some(SkipReason::NoVerb)
        );
        let negated = instance("I do not like horror", &[], &["101"], Domain::Movie);
        assert_eq!(
            perturber.cat2_change(&negated).skipped,
            Some(SkipReason::AlreadyNegated)
        );
    }

    #[test]
    fn cat2_add_mood_template_example() {
        let lexicon = Lexicon::bundled();
        let perturber = Perturber::new(&lexicon, None);
        let inst = instance("I do like the Exorcist", &["the Exorcist"], &["101"], Domain::Movie);
        let out = perturber.cat2_add(&inst);
        assert_eq!(
            out.answer_adv,
            "I do like the Exorcist But I'm not in the mood to watch it."
        );
        assert!(!out.is_skipped());
    }

    #[test]
    fn cat2_add_book_domain_uses_read_template() {
        let lexicon = Lexicon::bundled();
        let perturber = Perturber::new(&lexicon, None);
        let inst = instance(
            "I love The Haunted Manuscript",
            &["The Haunted Manuscript"],
            &["b01"],
            Domain::Book,
        );
        let out = perturber.cat2_add(&inst);
        assert!(out
            .answer_adv
            .ends_with("But I'm not in the mood to read it."));
    }

    #[test]
    fn cat2_add_without_desire_uses_generic_template() {
        let lexicon = Lexicon::bundled();
        let perturber = Perturber::new(&lexicon, None);
        // hand-labeled: "hate" is not a desire verb
        let inst = instance("I hate that movie", &["103"], &["101"], Domain::Movie);
        let out = perturber.cat2_add(&inst);
        assert!(out.answer_adv.ends_with("But that is not what I want at all."));
        // hand-labeled: negated desire is not a desire
        let inst = instance("I don't want it", &["103"], &["101"], Domain::Movie);
        let out = perturber.cat2_add(&inst);
        assert!(out.answer_adv.ends_with("But that is not what I want at all."));
        // hand-labeled: desire without any mentioned item stays generic
        let inst = instance("I want something fun", &[], &["101"], Domain::Movie);
        let out = perturber.cat2_add(&inst);
        assert!(out.answer_adv.ends_with("But that is not what I want at all."));
    }

    #[test]
    fn cat1_add_skips_unknown_truth_item() {
        let lexicon = Lexicon::bundled();
        let kb = kb();
        let perturber = Perturber::new(&lexicon, Some(&kb));
        let inst = instance("I like horror", &[], &["nope"], Domain::Movie);
        let mut rng = instance_rng(1, &inst);
        let out = perturber.cat1_add(&inst, &mut rng);
        assert_eq!(out.skipped, Some(SkipReason::UnknownItem));
        assert_eq!(out.answer_adv, inst.answer.text);
    }

    #[test]
    fn toy_corpus_cat1_change_mostly_applies() {
        let corpus_path = concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/../../fixtures/corpus/toy_redial.jsonl"
        );
        let dialogues = crate::corpus::load_redial(corpus_path).unwrap();
        let instances = crate::corpus::extract_instances(&dialogues);
        assert!(instances.len() >= 20);
        let lexicon = Lexicon::bundled();
        let kb = kb();
        let perturber = Perturber::new(&lexicon, Some(&kb));
        let outputs = perturber.perturb_corpus(&instances, Scenario::Cat1Change, 42);
        assert_eq!(outputs.len(), instances.len());
        let applied = outputs.iter().filter(|o| !o.is_skipped()).count();
        assert!(applied >= 15, "only {applied} rewrites applied");
    }

    #[test]
    fn cat1_add_is_deterministic_per_seed() {
        let lexicon = Lexicon::bundled();
        let kb = kb();
        let perturber = Perturber::new(&lexicon, Some(&kb));
        let inst = instance("I like watching horror movies", &[], &["101"], Domain::Movie);
        let a = perturber.perturb_corpus(std::slice::from_ref(&inst), Scenario::Cat1Add, 42);
        let b = perturber.perturb_corpus(std::slice::from_ref(&inst), Scenario::Cat1Add, 42);
        assert_eq!(a, b);
        let c = perturber.perturb_corpus(&[inst], Scenario::Cat1Add, 43);
        assert_ne!(a, c);
    }

    #[test]
    fn cat1_add_appends_prefix_verbatim() {
        let lexicon = Lexicon::bundled();
        let kb = kb();
        let perturber = Perturber::new(&lexicon, Some(&kb));
        let inst = instance("I like watching horror movies", &[], &["101"], Domain::Movie);
        for seed in 0..20 {
            let mut rng = instance_rng(seed, &inst);
            let out = perturber.cat1_add(&inst, &mut rng);
            assert!(!out.is_skipped());
            assert!(out.answer_adv.starts_with(&inst.answer.text));
            assert!(out
                .answer_adv
                .contains("The horror genre is a genre that has been growing on me overtime."));
            assert!(out.answer_adv.contains("However, I do not like"));
            // contrast genre is never the target or a mentioned genre
            assert!(!out.answer_adv.contains("like horror genre movies"));
        }
    }

    #[test]
    fn seed_change_does_not_affect_non_random_scenarios() {
        let lexicon = Lexicon::bundled();
        let kb = kb();
        let perturber = Perturber::new(&lexicon, Some(&kb));
        let inst = instance("I like watching horror movies", &[], &["101"], Domain::Movie);
        for scenario in [Scenario::Cat1Change, Scenario::Cat2Change, Scenario::Cat2Add] {
            let a = perturber.perturb_corpus(std::slice::from_ref(&inst), scenario, 1);
            let b = perturber.perturb_corpus(std::slice::from_ref(&inst), scenario, 2);
            assert_eq!(a, b, "{scenario:?}");
        }
    }

    #[test]
    fn perturb_corpus_empty_input() {
        let lexicon = Lexicon::bundled();
        let perturber = Perturber::new(&lexicon, None);
        assert!(perturber
            .perturb_corpus(&[], Scenario::Cat1Change, 1)
            .is_empty());
    }

    #[test]
    fn perturbed_file_round_trip() {
        let lexicon = Lexicon::bundled();
        let kb = kb();
        let perturber = Perturber::new(&lexicon, Some(&kb));
        let inst = instance("I like watching horror movies", &[], &["101"], Domain::Movie);
        let outputs = perturber.perturb_corpus(&[inst], Scenario::Cat1Add, 42);
        let header = PerturbedHeader {
            schema: crate::schema::PERTURBED.to_string(),
            scenario: Scenario::Cat1Add,
            seed: 42,
            cat2_mode: Cat2Mode::Auto,
            n_instances: outputs.len(),
            n_skipped: outputs.iter().filter(|o| o.is_skipped()).count(),
        };
        let mut buf = Vec::new();
        write_perturbed(&header, &outputs, &mut buf).unwrap();
        let (header_back, outputs_back) = read_perturbed_reader(buf.as_slice()).unwrap();
        assert_eq!(header_back, header);
        assert_eq!(outputs_back, outputs);
    }

    #[test]
    fn expectation_matches_category() {
        assert_eq!(Scenario::Cat1Change.expectation(), Expectation::SamePrediction);
        assert_eq!(Scenario::Cat1Add.expectation(), Expectation::SamePrediction);
        assert_eq!(Scenario::Cat2Change.expectation(), Expectation::DifferentPrediction);
        assert_eq!(Scenario::Cat2Add.expectation(), Expectation::DifferentPrediction);
    }
}
