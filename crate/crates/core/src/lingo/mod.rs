//! Tokenization, lexicon-based POS tagging, verb-tense detection, inflection,
//! negation and detokenization — the rule engine behind all answer rewrites.
//!
//! The tagger is deterministic and fully offline: a fixed closed-class table
//! handles pronouns and auxiliaries, an irregular-verb table handles inflected
//! forms like `saw`/`went`, the lexicon supplies open-class words, and suffix
//! rules cover everything else (`-ing` → gerund, `-ed` → past, `-ly` →
//! adverb, default noun). Both tables ship as versioned TSV resources
//! embedded in the crate and can be overridden from disk.

use crate::lexicon::{LexPos, Lexicon};
use std::collections::HashMap;
use std::path::Path;
use thiserror::Error;

const CLOSED_CLASS_TSV: &str = include_str!("closed_class.tsv");
const IRREGULAR_VERBS_TSV: &str = include_str!("irregular_verbs.tsv");

/// Coarse part-of-speech category.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PosCategory {
    Noun,
    Verb,
    Auxiliary,
    Adjective,
    Adverb,
    Pronoun,
    Other,
}

/// Verb tense/form. Only verbs and auxiliaries carry one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Tense {
    Base,
    ThirdSingular,
    Past,
    Gerund,
    PastParticiple,
}

/// A category plus, for verbs and auxiliaries, the detected tense.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PosTag {
    pub category: PosCategory,
    pub tense: Option<Tense>,
}

impl PosTag {
    pub fn of(category: PosCategory) -> Self {
        debug_assert!(!matches!(
            category,
            PosCategory::Verb | PosCategory::Auxiliary
        ));
        PosTag {
            category,
            tense: None,
        }
    }

    pub fn verb(tense: Tense) -> Self {
        PosTag {
            category: PosCategory::Verb,
            tense: Some(tense),
        }
    }

    pub fn auxiliary(tense: Tense) -> Self {
        PosTag {
            category: PosCategory::Auxiliary,
            tense: Some(tense),
        }
    }

    pub fn is_verb(&self) -> bool {
        self.category == PosCategory::Verb
    }

    pub fn is_auxiliary(&self) -> bool {
        self.category == PosCategory::Auxiliary
    }
}

/// One token of an utterance.
///
/// `span` is byte offsets into the source text; synthesized tokens (inserted
/// by [`Lingo::negate`] and friends) carry `None`. `protected` marks tokens
/// inside a mentioned-item title, which no rewrite may touch. `lemma` is
/// filled by the tagger for verbs so later stages can re-inflect.
#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub surface: String,
    pub span: Option<(usize, usize)>,
    pub tag: Option<PosTag>,
    pub protected: bool,
    pub lemma: Option<String>,
}

impl Token {
    pub fn new(surface: impl Into<String>, span: Option<(usize, usize)>) -> Self {
        Token {
            surface: surface.into(),
            span,
            tag: None,
            protected: false,
            lemma: None,
        }
    }

    /// Synthesized word token with a known tag and no source span.
    fn synthesized(surface: &str, tag: PosTag) -> Self {
        Token {
            surface: surface.to_string(),
            span: None,
            tag: Some(tag),
            protected: false,
            lemma: None,
        }
    }
}

#[derive(Debug, Error)]
pub enum LingoError {
    #[error("no verb or auxiliary found in the sentence")]
    NoVerb,
    #[error("bad table resource at line {line}: {msg}")]
    Resource { line: usize, msg: String },
    #[error("failed to read table resource: {0}")]
    Io(#[from] std::io::Error),
}

fn is_terminal_punct(ch: char) -> bool {
    matches!(ch, '.' | ',' | '!' | '?')
}

/// True when the token surface is purely terminal punctuation.
pub fn is_punctuation(surface: &str) -> bool {
    !surface.is_empty() && surface.chars().all(is_terminal_punct)
}

/// Split text on whitespace, peeling terminal punctuation (`. , ! ?`) into
/// its own tokens. Contractions stay whole (`don't`, `I'm`).
pub fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut run_start: Option<usize> = None;
    for (i, ch) in text.char_indices() {
        if ch.is_whitespace() {
            if let Some(start) = run_start.take() {
                push_chunk(text, start, i, &mut tokens);
            }
        } else if run_start.is_none() {
            run_start = Some(i);
        }
    }
    if let Some(start) = run_start {
        push_chunk(text, start, text.len(), &mut tokens);
    }
    tokens
}

fn push_chunk(text: &str, start: usize, end: usize, out: &mut Vec<Token>) {
    let chunk = &text[start..end];
    let chars: Vec<(usize, char)> = chunk.char_indices().collect();
    let mut word_len = chars.len();
    while word_len > 0 && is_terminal_punct(chars[word_len - 1].1) {
        word_len -= 1;
    }
    if word_len > 0 {
        let word_end = if word_len == chars.len() {
            end
        } else {
            start + chars[word_len].0
        };
        out.push(Token::new(&text[start..word_end], Some((start, word_end))));
    }
    for &(off, ch) in &chars[word_len..] {
        let s = start + off;
        let e = s + ch.len_utf8();
        out.push(Token::new(&text[s..e], Some((s, e))));
    }
}

/// Join tokens with single spaces; punctuation attaches to the previous token.
pub fn detokenize(tokens: &[Token]) -> String {
    let mut out = String::new();
    for tok in tokens {
        if !out.is_empty() && !is_punctuation(&tok.surface) {
            out.push(' ');
        }
        out.push_str(&tok.surface);
    }
    out
}

/// First non-auxiliary verb; first auxiliary if the sentence has only those;
/// `None` when the sentence is verbless. Protected tokens (item-title
/// material) are not sentence structure and are skipped.
pub fn main_verb(tokens: &[Token]) -> Option<(usize, PosTag)> {
    let mut first_aux = None;
    for (i, tok) in tokens.iter().enumerate() {
        if tok.protected {
            continue;
        }
        match tok.tag {
            Some(tag) if tag.is_verb() => return Some((i, tag)),
            Some(tag) if tag.is_auxiliary() && first_aux.is_none() => {
                first_aux = Some((i, tag));
            }
            _ => {}
        }
    }
    first_aux
}

fn is_negation_marker(surface: &str) -> bool {
    let lower = surface.to_lowercase();
    lower == "not" || lower.ends_with("n't")
}

/// Result of [`Lingo::negate`]. `already_negated` flags inputs returned
/// unchanged because they carried a negation marker.
#[derive(Debug, Clone, PartialEq)]
pub struct Negation {
    pub tokens: Vec<Token>,
    pub already_negated: bool,
}

#[derive(Debug)]
struct VerbForms {
    third_singular: String,
    past: String,
    gerund: String,
    past_participle: String,
}

impl VerbForms {
    fn form(&self, tense: Tense) -> &str {
        match tense {
            Tense::Base => unreachable!("base form is the lemma"),
            Tense::ThirdSingular => &self.third_singular,
            Tense::Past => &self.past,
            Tense::Gerund => &self.gerund,
            Tense::PastParticiple => &self.past_participle,
        }
    }
}

/// The rule engine: closed-class table plus irregular-verb table.
#[derive(Debug)]
pub struct Lingo {
    closed_class: HashMap<String, PosTag>,
    irregular_by_lemma: HashMap<String, VerbForms>,
    irregular_by_form: HashMap<String, (String, Tense)>,
}

impl Default for Lingo {
    fn default() -> Self {
        Self::new()
    }
}

impl Lingo {
    /// Engine backed by the embedded table resources.
    pub fn new() -> Self {
        Self::from_tsv(CLOSED_CLASS_TSV, IRREGULAR_VERBS_TSV)
            .expect("embedded lingo tables must parse")
    }

    /// Engine backed by table files on disk (same TSV formats as the
    /// embedded resources).
    pub fn from_paths(
        closed_class: impl AsRef<Path>,
        irregular_verbs: impl AsRef<Path>,
    ) -> Result<Self, LingoError> {
        let closed = std::fs::read_to_string(closed_class)?;
        let irregular = std::fs::read_to_string(irregular_verbs)?;
        Self::from_tsv(&closed, &irregular)
    }

    pub fn from_tsv(closed_class: &str, irregular_verbs: &str) -> Result<Self, LingoError> {
        let mut closed = HashMap::new();
        for (lineno, line) in data_lines(closed_class) {
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 3 {
                return Err(LingoError::Resource {
                    line: lineno,
                    msg: format!("expected 3 columns, got {}", cols.len()),
                });
            }
            let tense = match cols[2] {
                "-" => None,
                t => Some(parse_tense(t).ok_or_else(|| LingoError::Resource {
                    line: lineno,
                    msg: format!("unknown tense `{t}`"),
                })?),
            };
            let category = parse_category(cols[1]).ok_or_else(|| LingoError::Resource {
                line: lineno,
                msg: format!("unknown category `{}`", cols[1]),
            })?;
            closed.insert(cols[0].to_lowercase(), PosTag { category, tense });
        }

        let mut rows = Vec::new();
        for (lineno, line) in data_lines(irregular_verbs) {
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 5 {
                return Err(LingoError::Resource {
                    line: lineno,
                    msg: format!("expected 5 columns, got {}", cols.len()),
                });
            }
            rows.push((
                cols[0].to_lowercase(),
                VerbForms {
                    third_singular: cols[1].to_lowercase(),
                    past: cols[2].to_lowercase(),
                    gerund: cols[3].to_lowercase(),
                    past_participle: cols[4].to_lowercase(),
                },
            ));
        }

        // Surface forms can collide across tenses (e.g. `beat` is both base
        // and past); register in tense-priority order and keep the first.
        let mut by_form: HashMap<String, (String, Tense)> = HashMap::new();
        for (lemma, _) in &rows {
            by_form
                .entry(lemma.clone())
                .or_insert_with(|| (lemma.clone(), Tense::Base));
        }
        for tense in [
            Tense::ThirdSingular,
            Tense::Past,
            Tense::Gerund,
            Tense::PastParticiple,
        ] {
            for (lemma, forms) in &rows {
                by_form
                    .entry(forms.form(tense).to_string())
                    .or_insert_with(|| (lemma.clone(), tense));
            }
        }

        Ok(Lingo {
            closed_class: closed,
            irregular_by_lemma: rows.into_iter().collect(),
            irregular_by_form: by_form,
        })
    }

    /// Fill tags (and verb lemmas) on tokens. Protected tokens are tagged
    /// too, but later stages never rewrite them.
    pub fn tag(&self, mut tokens: Vec<Token>, lexicon: &Lexicon) -> Vec<Token> {
        for tok in &mut tokens {
            let (tag, lemma) = self.classify(&tok.surface.to_lowercase(), lexicon);
            tok.tag = Some(tag);
            tok.lemma = lemma;
        }
        tokens
    }

    fn classify(&self, lower: &str, lexicon: &Lexicon) -> (PosTag, Option<String>) {
        if is_punctuation(lower) {
            return (PosTag::of(PosCategory::Other), None);
        }
        if let Some(tag) = self.closed_class.get(lower) {
            return (*tag, None);
        }
        if let Some((lemma, tense)) = self.irregular_by_form.get(lower) {
            return (PosTag::verb(*tense), Some(lemma.clone()));
        }
        for pos in [LexPos::Verb, LexPos::Noun, LexPos::Adjective, LexPos::Adverb] {
            if lexicon.contains(lower, pos) {
                return match pos {
                    LexPos::Verb => (PosTag::verb(Tense::Base), Some(lower.to_string())),
                    LexPos::Noun => (PosTag::of(PosCategory::Noun), None),
                    LexPos::Adjective => (PosTag::of(PosCategory::Adjective), None),
                    LexPos::Adverb => (PosTag::of(PosCategory::Adverb), None),
                };
            }
        }
        if lower.len() > 4 && lower.ends_with("ing") {
            let lemma = self.recover_lemma(lower, Tense::Gerund, lexicon);
            return (PosTag::verb(Tense::Gerund), Some(lemma));
        }
        if lower.len() > 3 && lower.ends_with("ed") {
            let lemma = self.recover_lemma(lower, Tense::Past, lexicon);
            return (PosTag::verb(Tense::Past), Some(lemma));
        }
        if lower.len() > 2 && lower.ends_with('s') && !lower.ends_with("ss") {
            if let Some(lemma) = self.validated_lemma(lower, Tense::ThirdSingular, lexicon) {
                return (PosTag::verb(Tense::ThirdSingular), Some(lemma));
            }
        }
        if lower.len() > 3 && lower.ends_with("ly") {
            return (PosTag::of(PosCategory::Adverb), None);
        }
        (PosTag::of(PosCategory::Noun), None)
    }

    fn is_known_verb_lemma(&self, word: &str, lexicon: &Lexicon) -> bool {
        self.irregular_by_lemma.contains_key(word) || lexicon.contains(word, LexPos::Verb)
    }

    /// Candidate base forms for an inflected surface, best guess first.
    fn lemma_candidates(surface: &str, tense: Tense) -> Vec<String> {
        let mut cands = Vec::new();
        match tense {
            Tense::Base => cands.push(surface.to_string()),
            Tense::ThirdSingular => {
                if let Some(stem) = surface.strip_suffix("ies") {
                    cands.push(format!("{stem}y"));
                }
                if let Some(stem) = surface.strip_suffix('s') {
                    cands.push(stem.to_string());
                }
                if let Some(stem) = surface.strip_suffix("es") {
                    cands.push(stem.to_string());
                }
            }
            Tense::Past | Tense::PastParticiple => {
                if let Some(stem) = surface.strip_suffix("ied") {
                    cands.push(format!("{stem}y"));
                }
                if let Some(stem) = surface.strip_suffix('d') {
                    cands.push(stem.to_string());
                }
                if let Some(stem) = surface.strip_suffix("ed") {
                    cands.push(stem.to_string());
                    if let Some(undoubled) = undouble(stem) {
                        cands.push(undoubled);
                    }
                }
            }
            Tense::Gerund => {
                if let Some(stem) = surface.strip_suffix("ing") {
                    cands.push(stem.to_string());
                    cands.push(format!("{stem}e"));
                    if let Some(undoubled) = undouble(stem) {
                        cands.push(undoubled);
                    }
                }
                if let Some(stem) = surface.strip_suffix("ying") {
                    cands.push(format!("{stem}ie"));
                }
            }
        }
        cands
    }

    fn validated_lemma(&self, surface: &str, tense: Tense, lexicon: &Lexicon) -> Option<String> {
        Self::lemma_candidates(surface, tense)
            .into_iter()
            .find(|c| !c.is_empty() && self.is_known_verb_lemma(c, lexicon))
    }

    /// Like [`Self::validated_lemma`] but falls back to an orthographic
    /// heuristic when no candidate is a known verb.
    fn recover_lemma(&self, surface: &str, tense: Tense, lexicon: &Lexicon) -> String {
        if let Some(found) = self.validated_lemma(surface, tense, lexicon) {
            return found;
        }
        match tense {
            Tense::Past | Tense::PastParticiple => {
                if let Some(stem) = surface.strip_suffix("ied") {
                    return format!("{stem}y");
                }
                let stem = surface.strip_suffix("ed").unwrap_or(surface);
                undouble(stem).unwrap_or_else(|| stem.to_string())
            }
            Tense::Gerund => {
                let stem = surface.strip_suffix("ing").unwrap_or(surface);
                undouble(stem).unwrap_or_else(|| stem.to_string())
            }
            Tense::ThirdSingular => {
                if let Some(stem) = surface.strip_suffix("ies") {
                    return format!("{stem}y");
                }
                surface.strip_suffix('s').unwrap_or(surface).to_string()
            }
            Tense::Base => surface.to_string(),
        }
    }

    /// Inflect a base-form verb. Irregular table first, then regular
    /// morphology (+s/+es, +ed, +ing with e-drop and consonant doubling).
    pub fn inflect(&self, lemma: &str, tense: Tense) -> String {
        let lower = lemma.to_lowercase();
        if tense == Tense::Base {
            return lower;
        }
        if let Some(forms) = self.irregular_by_lemma.get(&lower) {
            return forms.form(tense).to_string();
        }
        match tense {
            Tense::Base => unreachable!(),
            Tense::ThirdSingular => sibilant_plural(&lower),
            Tense::Past | Tense::PastParticiple => {
                if lower.ends_with('e') {
                    format!("{lower}d")
                } else if let Some(stem) = consonant_y_stem(&lower) {
                    format!("{stem}ied")
                } else if should_double(&lower) {
                    let last = lower.chars().last().unwrap();
                    format!("{lower}{last}ed")
                } else {
                    format!("{lower}ed")
                }
            }
            Tense::Gerund => {
                if lower.ends_with("ie") {
                    format!("{}ying", &lower[..lower.len() - 2])
                } else if lower.ends_with('e') && !lower.ends_with("ee") {
                    format!("{}ing", &lower[..lower.len() - 1])
                } else if should_double(&lower) {
                    let last = lower.chars().last().unwrap();
                    format!("{lower}{last}ing")
                } else {
                    format!("{lower}ing")
                }
            }
        }
    }

    /// Regular noun pluralization (same orthography as third-singular).
    pub fn pluralize_noun(&self, noun: &str) -> String {
        sibilant_plural(&noun.to_lowercase())
    }

    /// Insert exactly one negation. Copulas/auxiliaries take a trailing
    /// `not`; plain verbs take do-support matched to their tense, with the
    /// verb reduced to its base form. Inputs that already carry a negation
    /// marker come back unchanged with `already_negated` set.
    pub fn negate(&self, tokens: &[Token]) -> Result<Negation, LingoError> {
        if tokens.iter().any(|t| is_negation_marker(&t.surface)) {
            return Ok(Negation {
                tokens: tokens.to_vec(),
                already_negated: true,
            });
        }
        let (verb_idx, verb_tag) = main_verb(tokens).ok_or(LingoError::NoVerb)?;
        let first_aux = tokens.iter().position(|t| {
            !t.protected && t.tag.map(|tag| tag.is_auxiliary()).unwrap_or(false)
        });

        let mut out = tokens.to_vec();
        match first_aux {
            Some(aux_idx) if aux_idx <= verb_idx => {
                out.insert(
                    aux_idx + 1,
                    Token::synthesized("not", PosTag::of(PosCategory::Adverb)),
                );
            }
            _ => {
                let tense = verb_tag.tense.unwrap_or(Tense::Base);
                let (aux, aux_tense) = match tense {
                    Tense::ThirdSingular => ("does", Tense::ThirdSingular),
                    Tense::Past => ("did", Tense::Past),
                    _ => ("do", Tense::Base),
                };
                let lemma = out[verb_idx]
                    .lemma
                    .clone()
                    .unwrap_or_else(|| out[verb_idx].surface.to_lowercase());
                out[verb_idx].surface = lemma.clone();
                out[verb_idx].span = None;
                out[verb_idx].tag = Some(PosTag::verb(Tense::Base));
                out[verb_idx].lemma = Some(lemma);
                out.insert(
                    verb_idx,
                    Token::synthesized("not", PosTag::of(PosCategory::Adverb)),
                );
                out.insert(verb_idx, Token::synthesized(aux, PosTag::auxiliary(aux_tense)));
            }
        }
        Ok(Negation {
            tokens: out,
            already_negated: false,
        })
    }
}

fn data_lines(raw: &str) -> impl Iterator<Item = (usize, &str)> {
    raw.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse_category(s: &str) -> Option<PosCategory> {
    match s {
        "noun" => Some(PosCategory::Noun),
        "verb" => Some(PosCategory::Verb),
        "auxiliary" => Some(PosCategory::Auxiliary),
        "adjective" => Some(PosCategory::Adjective),
        "adverb" => Some(PosCategory::Adverb),
        "pronoun" => Some(PosCategory::Pronoun),
        "other" => Some(PosCategory::Other),
        _ => None,
    }
}

fn parse_tense(s: &str) -> Option<Tense> {
    match s {
        "base" => Some(Tense::Base),
        "third_singular" => Some(Tense::ThirdSingular),
        "past" => Some(Tense::Past),
        "gerund" => Some(Tense::Gerund),
        "past_participle" => Some(Tense::PastParticiple),
        _ => None,
    }
}

fn is_vowel(ch: char) -> bool {
    matches!(ch, 'a' | 'e' | 'i' | 'o' | 'u')
}

/// Strip one of a doubled final consonant pair (`stopp` → `stop`).
fn undouble(stem: &str) -> Option<String> {
    let chars: Vec<char> = stem.chars().collect();
    let n = chars.len();
    if n >= 2 && chars[n - 1] == chars[n - 2] && !is_vowel(chars[n - 1]) {
        Some(stem[..stem.len() - chars[n - 1].len_utf8()].to_string())
    } else {
        None
    }
}

fn consonant_y_stem(word: &str) -> Option<&str> {
    let chars: Vec<char> = word.chars().collect();
    let n = chars.len();
    if n >= 2 && chars[n - 1] == 'y' && !is_vowel(chars[n - 2]) {
        Some(&word[..word.len() - 1])
    } else {
        None
    }
}

fn sibilant_plural(word: &str) -> String {
    if let Some(stem) = consonant_y_stem(word) {
        return format!("{stem}ies");
    }
    let sibilant = word.ends_with('s')
        || word.ends_with('x')
        || word.ends_with('z')
        || word.ends_with("ch")
        || word.ends_with("sh")
        || word.ends_with('o');
    if sibilant {
        format!("{word}es")
    } else {
        format!("{word}s")
    }
}

/// Doubling rule for monosyllables ending consonant-vowel-consonant
/// (`stop` → `stopped`, but `visit` → `visited`, `look` → `looked`).
fn should_double(word: &str) -> bool {
    let chars: Vec<char> = word.chars().collect();
    let n = chars.len();
    if n < 2 {
        return false;
    }
    let last = chars[n - 1];
    if is_vowel(last) || !last.is_ascii_alphabetic() || matches!(last, 'w' | 'x' | 'y') {
        return false;
    }
    if !is_vowel(chars[n - 2]) {
        return false;
    }
    if n >= 3 && is_vowel(chars[n - 3]) {
        return false;
    }
    let groups = chars
        .iter()
        .fold((0usize, false), |(count, in_group), &c| {
            let v = is_vowel(c);
            (count + usize::from(v && !in_group), v)
        })
        .0;
    groups == 1
}
