//! Dialogue corpus loading and normalization.
//!
//! Two loaders (REDIAL JSON lines, OpenDialKG JSON) feed one normalized
//! dialogue model, which is also the on-disk contract for all downstream
//! stages: JSON lines, one dialogue per line, schema
//! `{id, domain, turns: [{speaker, text, mentioned_items, ground_truth}]}`.
//!
//! Mention markers are replaced inline by the item title so the rewrite
//! scenarios operate on natural text, while `mentioned_items` keeps the
//! machine-readable ids. Utterances are whitespace-normalized and truncated
//! to 256 words at load time.

use crate::types::{Domain, ItemId, Speaker};
use regex::Regex;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::sync::OnceLock;
use thiserror::Error;

/// Maximum words kept per utterance.
pub const MAX_UTTERANCE_WORDS: usize = 256;

/// Published sizes of the full dataset exports, used as format fixtures:
/// loading a complete export must preserve these counts.
pub mod stats {
    /// REDIAL: conversations and utterances in the full export.
    pub const REDIAL_DIALOGUES: usize = 10_006;
    pub const REDIAL_UTTERANCES: usize = 182_150;
    /// OpenDialKG: dialogues and utterances before task filtering.
    pub const OPENDIALKG_DIALOGUES: usize = 13_802;
    pub const OPENDIALKG_UTTERANCES: usize = 91_209;
}

/// One utterance. `ground_truth` is nonempty only on recommender turns that
/// constitute a recommendation point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Turn {
    pub speaker: Speaker,
    pub text: String,
    pub mentioned_items: Vec<ItemId>,
    pub ground_truth: Vec<ItemId>,
}

/// One normalized dialogue.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dialogue {
    pub id: String,
    pub domain: Domain,
    pub turns: Vec<Turn>,
}

/// One evaluation point: predict the items of the recommender turn at
/// `turn_index` from everything said before it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalInstance {
    pub dialogue_id: String,
    pub domain: Domain,
    pub turn_index: usize,
    /// All turns strictly before `turn_index`.
    pub context: Vec<Turn>,
    /// The latest seeker turn in the context (the user's last answer).
    pub answer: Turn,
    pub truth: Vec<ItemId>,
}

impl EvalInstance {
    /// Stable identifier used in score files and the adapter protocol.
    pub fn instance_id(&self) -> String {
        format!("{}:{}", self.dialogue_id, self.turn_index)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Valid,
    Test,
}

/// Dialogue-grouped 8:1:1 split assignment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitAssignment {
    pub instances: BTreeMap<String, Split>,
    pub dialogues: BTreeMap<String, Split>,
}

impl SplitAssignment {
    pub fn of_instance(&self, instance_id: &str) -> Option<Split> {
        self.instances.get(instance_id).copied()
    }

    pub fn dialogue_counts(&self) -> (usize, usize, usize) {
        let mut counts = (0, 0, 0);
        for split in self.dialogues.values() {
            match split {
                Split::Train => counts.0 += 1,
                Split::Valid => counts.1 += 1,
                Split::Test => counts.2 += 1,
            }
        }
        counts
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("failed to read corpus: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: malformed JSON: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: {message}")]
    Invalid { line: usize, message: String },
}

/// Keep at most 256 whitespace-delimited words, order preserved. Inputs at
/// or below the limit come back unchanged.
pub fn truncate_utterance(text: &str) -> String {
    let words: Vec<&str> = text.split_whitespace().collect();
    if words.len() <= MAX_UTTERANCE_WORDS {
        text.to_string()
    } else {
        words[..MAX_UTTERANCE_WORDS].join(" ")
    }
}

fn normalize_text(text: &str) -> String {
    truncate_utterance(&text.split_whitespace().collect::<Vec<_>>().join(" "))
}

// ---------------------------------------------------------------------------
// REDIAL loader
// ---------------------------------------------------------------------------

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum IdValue {
    Text(String),
    Number(i64),
}

impl IdValue {
    fn into_string(self) -> String {
        match self {
            IdValue::Text(s) => s,
            IdValue::Number(n) => n.to_string(),
        }
    }
}

#[derive(Debug, Deserialize)]
struct RedialMessage {
    text: String,
    #[serde(rename = "senderWorkerId")]
    sender_worker_id: i64,
}

#[derive(Debug, Deserialize)]
struct RedialConversation {
    #[serde(rename = "conversationId")]
    conversation_id: IdValue,
    #[serde(rename = "initiatorWorkerId")]
    initiator_worker_id: i64,
    messages: Vec<RedialMessage>,
    #[serde(rename = "movieMentions", default)]
    movie_mentions: BTreeMap<String, Option<String>>,
}

fn mention_marker_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"@(\d+)").expect("valid regex"))
}

/// Load a REDIAL JSON-lines export (one conversation object per line).
///
/// `@<id>` markers are mapped to `mentioned_items` and replaced in the text
/// by the movie title; markers whose id has no title are dropped with a
/// logged warning. All dialogues are movie-domain.
pub fn load_redial(path: impl AsRef<Path>) -> Result<Vec<Dialogue>, CorpusError> {
    load_redial_reader(std::fs::File::open(path)?)
}

pub fn load_redial_reader(reader: impl Read) -> Result<Vec<Dialogue>, CorpusError> {
    let mut dialogues = Vec::new();
    for (idx, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let conv: RedialConversation =
            serde_json::from_str(&line).map_err(|e| CorpusError::Parse {
                line: lineno,
                message: e.to_string(),
            })?;
        if conv.messages.is_empty() {
            log::warn!("redial line {lineno}: conversation with no messages skipped");
            continue;
        }
        dialogues.push(redial_to_dialogue(conv));
    }
    Ok(dialogues)
}

fn redial_to_dialogue(conv: RedialConversation) -> Dialogue {
    let id = conv.conversation_id.into_string();
    let turns = conv
        .messages
        .iter()
        .map(|msg| {
            let speaker = if msg.sender_worker_id == conv.initiator_worker_id {
                Speaker::Seeker
            } else {
                Speaker::Recommender
            };
            let mut mentioned = Vec::new();
            let replaced = mention_marker_re().replace_all(&msg.text, |caps: &regex::Captures| {
                let marker_id = &caps[1];
                match conv.movie_mentions.get(marker_id) {
                    Some(Some(title)) => {
                        let item = ItemId::new(marker_id);
                        if !mentioned.contains(&item) {
                            mentioned.push(item);
                        }
                        title.clone()
                    }
                    _ => {
                        log::warn!(
                            "dialogue {id}: unknown movie id @{marker_id}, mention dropped"
                        );
                        String::new()
                    }
                }
            });
            let ground_truth = if speaker == Speaker::Recommender {
                mentioned.clone()
            } else {
                Vec::new()
            };
            Turn {
                speaker,
                text: normalize_text(&replaced),
                mentioned_items: mentioned,
                ground_truth,
            }
        })
        .collect();
    Dialogue {
        id,
        domain: Domain::Movie,
        turns,
    }
}

// ---------------------------------------------------------------------------
// OpenDialKG loader
// ---------------------------------------------------------------------------

#[derive(Debug, Deserialize)]
struct OdkgMessage {
    sender: String,
    text: String,
    #[serde(default)]
    mentions: Vec<String>,
    #[serde(default)]
    recommendations: Vec<String>,
}

#[derive(Debug, Deserialize)]
struct OdkgDialogue {
    id: IdValue,
    #[serde(default)]
    task: Option<String>,
    #[serde(default)]
    domain: Option<String>,
    messages: Vec<OdkgMessage>,
}

/// Load an OpenDialKG-style JSON export: either one JSON array of dialogue
/// objects or JSON lines. Only recommendation-task dialogues with a
/// movie/book domain are retained; chit-chat is filtered out.
pub fn load_opendialkg(path: impl AsRef<Path>) -> Result<Vec<Dialogue>, CorpusError> {
    load_opendialkg_reader(std::fs::File::open(path)?)
}

pub fn load_opendialkg_reader(mut reader: impl Read) -> Result<Vec<Dialogue>, CorpusError> {
    let mut raw = String::new();
    reader.read_to_string(&mut raw)?;
    let trimmed = raw.trim_start();
    let parsed: Vec<OdkgDialogue> = if trimmed.starts_with('[') {
        serde_json::from_str(trimmed).map_err(|e| CorpusError::Parse {
            line: e.line(),
            message: e.to_string(),
        })?
    } else {
        let mut out = Vec::new();
        for (idx, line) in raw.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            out.push(
                serde_json::from_str(line).map_err(|e| CorpusError::Parse {
                    line: idx + 1,
                    message: e.to_string(),
                })?,
            );
        }
        out
    };
    Ok(parsed.into_iter().filter_map(odkg_to_dialogue).collect())
}

fn odkg_to_dialogue(dlg: OdkgDialogue) -> Option<Dialogue> {
    let id = dlg.id.into_string();
    let task = dlg.task.as_deref().unwrap_or("").to_lowercase();
    if !task.starts_with("recommend") {
        return None;
    }
    let domain = match dlg.domain.as_deref().map(str::to_lowercase).as_deref() {
        Some("movie") | Some("movies") => Domain::Movie,
        Some("book") | Some("books") => Domain::Book,
        other => {
            log::warn!("dialogue {id}: unsupported domain {other:?}, skipped");
            return None;
        }
    };
    if dlg.messages.is_empty() {
        return None;
    }
    let turns = dlg
        .messages
        .into_iter()
        .map(|msg| {
            let speaker = match msg.sender.to_lowercase().as_str() {
                "seeker" | "user" | "initiator" => Speaker::Seeker,
                _ => Speaker::Recommender,
            };
            let mut mentioned: Vec<ItemId> = Vec::new();
            for title in msg.mentions.iter().chain(msg.recommendations.iter()) {
                let item = ItemId::new(title.clone());
                if !mentioned.contains(&item) {
                    mentioned.push(item);
                }
            }
            let ground_truth = if speaker == Speaker::Recommender {
                msg.recommendations.iter().map(|t| ItemId::new(t.clone())).collect()
            } else {
                Vec::new()
            };
            Turn {
                speaker,
                text: normalize_text(&msg.text),
                mentioned_items: mentioned,
                ground_truth,
            }
        })
        .collect();
    Some(Dialogue { id, domain, turns })
}

// ---------------------------------------------------------------------------
// Normalized corpus I/O
// ---------------------------------------------------------------------------

/// Write dialogues in the normalized JSON-lines format.
pub fn write_corpus(dialogues: &[Dialogue], mut writer: impl Write) -> Result<(), CorpusError> {
    for dlg in dialogues {
        serde_json::to_writer(&mut writer, dlg).map_err(|e| CorpusError::Invalid {
            line: 0,
            message: e.to_string(),
        })?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

/// Read a normalized JSON-lines corpus.
pub fn read_corpus(path: impl AsRef<Path>) -> Result<Vec<Dialogue>, CorpusError> {
    read_corpus_reader(std::fs::File::open(path)?)
}

pub fn read_corpus_reader(reader: impl Read) -> Result<Vec<Dialogue>, CorpusError> {
    let mut dialogues: Vec<Dialogue> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (idx, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let dialogue: Dialogue = serde_json::from_str(&line).map_err(|e| CorpusError::Parse {
            line: idx + 1,
            message: e.to_string(),
        })?;
        if !seen.insert(dialogue.id.clone()) {
            log::warn!("line {}: duplicate dialogue id {}", idx + 1, dialogue.id);
        }
        dialogues.push(dialogue);
    }
    Ok(dialogues)
}

// ---------------------------------------------------------------------------
// Instance extraction and splitting
// ---------------------------------------------------------------------------

/// One instance per recommender turn with nonempty ground truth that is
/// preceded by at least one seeker turn. The context is every earlier turn;
/// the answer is the latest seeker turn in the context.
pub fn extract_instances(dialogues: &[Dialogue]) -> Vec<EvalInstance> {
    let mut instances = Vec::new();
    for dlg in dialogues {
        for (idx, turn) in dlg.turns.iter().enumerate() {
            if turn.speaker != Speaker::Recommender || turn.ground_truth.is_empty() {
                continue;
            }
            let context = &dlg.turns[..idx];
            let Some(answer) = context
                .iter()
                .rev()
                .find(|t| t.speaker == Speaker::Seeker)
            else {
                continue;
            };
            instances.push(EvalInstance {
                dialogue_id: dlg.id.clone(),
                domain: dlg.domain,
                turn_index: idx,
                context: context.to_vec(),
                answer: answer.clone(),
                truth: turn.ground_truth.clone(),
            });
        }
    }
    instances
}

/// Keep only instances whose turn index is the dialogue's last
/// recommendation point.
pub fn last_only(instances: Vec<EvalInstance>) -> Vec<EvalInstance> {
    let mut last: BTreeMap<String, usize> = BTreeMap::new();
    for inst in &instances {
        let entry = last.entry(inst.dialogue_id.clone()).or_insert(inst.turn_index);
        *entry = (*entry).max(inst.turn_index);
    }
    instances
        .into_iter()
        .filter(|inst| last[&inst.dialogue_id] == inst.turn_index)
        .collect()
}

/// 8:1:1 apportionment by largest remainder: deterministic, integral, and
/// within one of the exact ratio.
fn apportion(n: usize) -> (usize, usize, usize) {
    let weights = [8usize, 1, 1];
    let mut counts = [0usize; 3];
    let mut remainders = [0usize; 3];
    for (i, w) in weights.iter().enumerate() {
        counts[i] = n * w / 10;
        remainders[i] = n * w % 10;
    }
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&a, &b| remainders[b].cmp(&remainders[a]).then(a.cmp(&b)));
    let mut left = n - counts.iter().sum::<usize>();
    for &i in &order {
        if left == 0 {
            break;
        }
        counts[i] += 1;
        left -= 1;
    }
    (counts[0], counts[1], counts[2])
}

/// Deterministic dialogue-grouped split: all instances of one dialogue land
/// in the same part, and parts are 8:1:1 by dialogue count. A pure function
/// of the dialogue-id multiset and the seed.
pub fn split(instances: &[EvalInstance], seed: u64) -> SplitAssignment {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;

    let mut dialogue_ids: Vec<String> = instances
        .iter()
        .map(|i| i.dialogue_id.clone())
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    dialogue_ids.shuffle(&mut rng);

    let (n_train, n_valid, _) = apportion(dialogue_ids.len());
    let mut dialogues = BTreeMap::new();
    for (pos, id) in dialogue_ids.into_iter().enumerate() {
        let part = if pos < n_train {
            Split::Train
        } else if pos < n_train + n_valid {
            Split::Valid
        } else {
            Split::Test
        };
        dialogues.insert(id, part);
    }
    let instances_map = instances
        .iter()
        .map(|i| (i.instance_id(), dialogues[&i.dialogue_id]))
        .collect();
    SplitAssignment {
        instances: instances_map,
        dialogues,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const REDIAL_LINE: &str = r#"{"conversationId": "391", "initiatorWorkerId": 0, "respondentWorkerId": 1, "messages": [{"timeOffset": 0, "text": "Hi I am looking for a movie like @111", "senderWorkerId": 0, "messageId": 1}, {"timeOffset": 5, "text": "You should watch @222", "senderWorkerId": 1, "messageId": 2}], "movieMentions": {"111": "Super Troopers (2001)", "222": "Police Academy (1984)"}}"#;

    #[test]
    fn redial_fixture_maps_mentions_and_titles() {
        let dialogues = load_redial_reader(REDIAL_LINE.as_bytes()).unwrap();
        assert_eq!(dialogues.len(), 1);
        let dlg = &dialogues[0];
        assert_eq!(dlg.id, "391");
        assert_eq!(dlg.domain, Domain::Movie);
        assert_eq!(dlg.turns.len(), 2);
        assert_eq!(dlg.turns[0].speaker, Speaker::Seeker);
        assert_eq!(
            dlg.turns[0].text,
            "Hi I am looking for a movie like Super Troopers (2001)"
        );
        assert_eq!(dlg.turns[0].mentioned_items, vec![ItemId::from("111")]);
        assert!(dlg.turns[0].ground_truth.is_empty());
        assert_eq!(dlg.turns[1].ground_truth, vec![ItemId::from("222")]);
    }

    #[test]
    fn redial_empty_file_is_empty_list() {
        assert!(load_redial_reader("".as_bytes()).unwrap().is_empty());
    }

    #[test]
    fn redial_malformed_line_reports_line_number() {
        let input = format!("{REDIAL_LINE}\nnot json at all\n");
        let err = load_redial_reader(input.as_bytes()).unwrap_err();
        match err {
            CorpusError::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn redial_unknown_mention_is_dropped() {
        let line = r#"{"conversationId": 5, "initiatorWorkerId": 0, "messages": [{"text": "what about @999 then", "senderWorkerId": 0}], "movieMentions": {}}"#;
        let dialogues = load_redial_reader(line.as_bytes()).unwrap();
        assert_eq!(dialogues[0].turns[0].text, "what about then");
        assert!(dialogues[0].turns[0].mentioned_items.is_empty());
    }

    #[test]
    fn redial_text_is_lossless_after_mention_substitution() {
        let dialogues = load_redial_reader(REDIAL_LINE.as_bytes()).unwrap();
        let joined: Vec<&str> = dialogues[0].turns.iter().map(|t| t.text.as_str()).collect();
        assert_eq!(
            joined.join("\n"),
            "Hi I am looking for a movie like Super Troopers (2001)\nYou should watch Police Academy (1984)"
        );
    }

    const ODKG_FIXTURE: &str = r#"[
        {"id": "odkg_1", "task": "chit-chat", "domain": "movie", "messages": [
            {"sender": "user", "text": "Nice weather today"},
            {"sender": "assistant", "text": "Indeed it is"}
        ]},
        {"id": "odkg_2", "task": "recommendation", "domain": "book", "messages": [
            {"sender": "user", "text": "I loved The Hobbit", "mentions": ["The Hobbit"]},
            {"sender": "assistant", "text": "Try The Fellowship of the Ring", "recommendations": ["The Fellowship of the Ring"]}
        ]}
    ]"#;

    #[test]
    fn opendialkg_filters_chitchat() {
        let dialogues = load_opendialkg_reader(ODKG_FIXTURE.as_bytes()).unwrap();
        assert_eq!(dialogues.len(), 1);
        assert_eq!(dialogues[0].id, "odkg_2");
        assert_eq!(dialogues[0].domain, Domain::Book);
        assert_eq!(
            dialogues[0].turns[1].ground_truth,
            vec![ItemId::from("The Fellowship of the Ring")]
        );
    }

    fn seeker(text: &str) -> Turn {
        Turn {
            speaker: Speaker::Seeker,
            text: text.to_string(),
            mentioned_items: vec![],
            ground_truth: vec![],
        }
    }

    fn recommender(text: &str, truth: &[&str]) -> Turn {
        let items: Vec<ItemId> = truth.iter().map(|t| ItemId::from(*t)).collect();
        Turn {
            speaker: Speaker::Recommender,
            text: text.to_string(),
            mentioned_items: items.clone(),
            ground_truth: items,
        }
    }

    fn dialogue(id: &str, turns: Vec<Turn>) -> Dialogue {
        Dialogue {
            id: id.to_string(),
            domain: Domain::Movie,
            turns,
        }
    }

    #[test]
    fn extract_minimal_dialogue() {
        let dlg = dialogue("d1", vec![seeker("I want a movie"), recommender("try m1", &["m1"])]);
        let instances = extract_instances(&[dlg]);
        assert_eq!(instances.len(), 1);
        assert_eq!(instances[0].turn_index, 1);
        assert_eq!(instances[0].answer.text, "I want a movie");
        assert_eq!(instances[0].context.len(), 1);
        assert_eq!(instances[0].truth, vec![ItemId::from("m1")]);
    }

    #[test]
    fn extract_two_recommendation_points_nested_contexts() {
        let dlg = dialogue(
            "d1",
            vec![
                seeker("hello"),
                recommender("try m1", &["m1"]),
                seeker("nah, something scarier"),
                recommender("then m2", &["m2"]),
            ],
        );
        let instances = extract_instances(&[dlg]);
        assert_eq!(instances.len(), 2);
        assert_eq!(instances[0].context.len(), 1);
        assert_eq!(instances[1].context.len(), 3);
        assert_eq!(instances[1].answer.text, "nah, something scarier");
        assert!(instances[1].context.starts_with(&instances[0].context));
    }

    #[test]
    fn extract_skips_recommendation_without_preceding_seeker() {
        let dlg = dialogue("d1", vec![recommender("watch m1", &["m1"])]);
        assert!(extract_instances(&[dlg]).is_empty());
    }

    #[test]
    fn extract_count_bounded_by_recommender_turns() {
        let dlg = dialogue(
            "d1",
            vec![
                seeker("hi"),
                recommender("chit chat", &[]),
                recommender("try m1", &["m1"]),
            ],
        );
        let instances = extract_instances(&[dlg]);
        assert_eq!(instances.len(), 1);
        for inst in &instances {
            assert_eq!(inst.answer.speaker, Speaker::Seeker);
        }
    }

    #[test]
    fn last_only_keeps_final_recommendation_point() {
        let dlg = dialogue(
            "d1",
            vec![
                seeker("hello"),
                recommender("try m1", &["m1"]),
                seeker("more"),
                recommender("then m2", &["m2"]),
            ],
        );
        let instances = last_only(extract_instances(&[dlg]));
        assert_eq!(instances.len(), 1);
        assert_eq!(instances[0].turn_index, 3);
    }

    fn n_dialogue_instances(n: usize) -> Vec<EvalInstance> {
        (0..n)
            .flat_map(|i| {
                let dlg = dialogue(
                    &format!("d{i:03}"),
                    vec![seeker("hi"), recommender("try m1", &["m1"])],
                );
                extract_instances(&[dlg])
            })
            .collect()
    }

    #[test]
    fn split_ten_dialogues_is_8_1_1() {
        let assignment = split(&n_dialogue_instances(10), 42);
        assert_eq!(assignment.dialogue_counts(), (8, 1, 1));
    }

    #[test]
    fn split_is_deterministic_and_order_insensitive() {
        let mut instances = n_dialogue_instances(10);
        let first = split(&instances, 42);
        let second = split(&instances, 42);
        assert_eq!(first, second);
        instances.reverse();
        assert_eq!(split(&instances, 42), first);
        assert_ne!(split(&instances, 43), first);
    }

    #[test]
    fn split_nine_dialogues_is_7_1_1() {
        // Largest-remainder oracle: quotas 7.2/0.9/0.9, floors 7/0/0, the two
        // leftover seats go to the two largest remainders (valid, test).
        let assignment = split(&n_dialogue_instances(9), 42);
        assert_eq!(assignment.dialogue_counts(), (7, 1, 1));
    }

    #[test]
    fn apportion_matches_exact_rational_oracle() {
        for n in 0..200 {
            let (a, b, c) = apportion(n);
            assert_eq!(a + b + c, n);
            // within one seat of the exact quota n*w/10
            let quotas = [(n * 8) as f64 / 10.0, n as f64 / 10.0, n as f64 / 10.0];
            for (got, want) in [a, b, c].iter().zip(quotas) {
                assert!((*got as f64 - want).abs() < 1.0, "n={n}");
            }
        }
    }

    #[test]
    fn split_groups_whole_dialogues() {
        let dlg = dialogue(
            "d1",
            vec![
                seeker("hello"),
                recommender("try m1", &["m1"]),
                seeker("more"),
                recommender("then m2", &["m2"]),
            ],
        );
        let mut instances = extract_instances(&[dlg]);
        instances.extend(n_dialogue_instances(9));
        let assignment = split(&instances, 1);
        let a = assignment.of_instance("d1:1").unwrap();
        let b = assignment.of_instance("d1:3").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn truncate_below_limit_unchanged() {
        let text = "one two three four five six seven eight nine ten";
        assert_eq!(truncate_utterance(text), text);
    }

    #[test]
    fn truncate_at_boundary_unchanged() {
        let text = vec!["w"; 256].join(" ");
        assert_eq!(truncate_utterance(&text), text);
    }

    #[test]
    fn truncate_over_limit_keeps_first_256() {
        let words: Vec<String> = (0..300).map(|i| format!("w{i}")).collect();
        let out = truncate_utterance(&words.join(" "));
        let kept: Vec<&str> = out.split_whitespace().collect();
        assert_eq!(kept.len(), 256);
        assert_eq!(kept[0], "w0");
        assert_eq!(kept[255], "w255");
    }

    #[test]
    fn corpus_round_trip() {
        let dialogues = load_redial_reader(REDIAL_LINE.as_bytes()).unwrap();
        let mut buf = Vec::new();
        write_corpus(&dialogues, &mut buf).unwrap();
        let back = read_corpus_reader(buf.as_slice()).unwrap();
        assert_eq!(back, dialogues);
    }

    /// Format fixture against the complete REDIAL export (train + test
    /// files concatenated). Run with
    /// `CRSBENCH_REDIAL=/path/to/redial.jsonl cargo test -- --ignored`.
    #[test]
    #[ignore = "needs the full REDIAL export via CRSBENCH_REDIAL"]
    fn full_redial_export_statistics() {
        let path = std::env::var("CRSBENCH_REDIAL").expect("CRSBENCH_REDIAL not set");
        let dialogues = load_redial(path).unwrap();
        assert_eq!(dialogues.len(), stats::REDIAL_DIALOGUES);
        let utterances: usize = dialogues.iter().map(|d| d.turns.len()).sum();
        assert_eq!(utterances, stats::REDIAL_UTTERANCES);
    }

    /// Format fixture against a complete OpenDialKG export, counted before
    /// task filtering. Run with `CRSBENCH_OPENDIALKG=/path/to/export.json`.
    #[test]
    #[ignore = "needs the full OpenDialKG export via CRSBENCH_OPENDIALKG"]
    fn full_opendialkg_export_statistics() {
        let path = std::env::var("CRSBENCH_OPENDIALKG").expect("CRSBENCH_OPENDIALKG not set");
        let raw = std::fs::read_to_string(path).unwrap();
        let parsed: Vec<serde_json::Value> = if raw.trim_start().starts_with('[') {
            serde_json::from_str(&raw).unwrap()
        } else {
            raw.lines()
                .filter(|l| !l.trim().is_empty())
                .map(|l| serde_json::from_str(l).unwrap())
                .collect()
        };
        assert_eq!(parsed.len(), stats::OPENDIALKG_DIALOGUES);
        let utterances: usize = parsed
            .iter()
            .map(|d| d["messages"].as_array().map(Vec::len).unwrap_or(0))
            .sum();
        assert_eq!(utterances, stats::OPENDIALKG_UTTERANCES);
    }
}
