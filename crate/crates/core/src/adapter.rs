//! Uniform recommender interface.
//!
//! Any recommender reachable through one request/response schema can be
//! benchmarked: the builtin lexical-overlap baseline (desk-scale stand-in
//! for a trained model), an external process speaking the JSON line
//! protocol on stdin/stdout, or an HTTP endpoint accepting the same body at
//! `POST /recommend`.
//!
//! Line protocol (one UTF-8 JSON object per line):
//!
//! ```text
//! -> {"id": "d1:3", "context": [{"speaker": "seeker", "text": "..."}], "answer": "...", "k": 50}
//! <- {"id": "d1:3", "items": ["101", "104", ...]}
//! ```
//!
//! Responses are validated against the ranking invariants (matching id, no
//! duplicates, at most `k` items) regardless of source.

use crate::corpus::{truncate_utterance, EvalInstance};
use crate::knowledge::KnowledgeBase;
use crate::types::{ItemId, Speaker};
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc;
use std::time::Duration;
use thiserror::Error;

/// Largest cutoff served by default (`hit/mrr/ndcg@50`).
pub const DEFAULT_K_MAX: usize = 50;
/// Default timeout for external adapters.
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextTurn {
    pub speaker: Speaker,
    pub text: String,
}

/// One recommendation request: conversation context plus the (possibly
/// perturbed) user answer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecommendRequest {
    #[serde(rename = "id")]
    pub instance_id: String,
    pub context: Vec<ContextTurn>,
    pub answer: String,
    #[serde(rename = "k")]
    pub k_max: usize,
}

impl RecommendRequest {
    /// Build a request from an instance, always sending truncated text.
    ///
    /// The user's last answer appears both in `answer` and inside the
    /// context; `answer` (original or perturbed) replaces the answer turn's
    /// text in the context so the altered utterance is what the recommender
    /// sees in the conversation.
    pub fn from_instance(inst: &EvalInstance, answer: &str, k_max: usize) -> Self {
        let answer_turn = inst
            .context
            .iter()
            .rposition(|t| t.speaker == Speaker::Seeker);
        RecommendRequest {
            instance_id: inst.instance_id(),
            context: inst
                .context
                .iter()
                .enumerate()
                .map(|(i, t)| ContextTurn {
                    speaker: t.speaker,
                    text: truncate_utterance(if Some(i) == answer_turn {
                        answer
                    } else {
                        &t.text
                    }),
                })
                .collect(),
            answer: truncate_utterance(answer),
            k_max,
        }
    }

    fn combined_text(&self) -> String {
        let mut parts: Vec<&str> = self.context.iter().map(|t| t.text.as_str()).collect();
        parts.push(&self.answer);
        parts.join(" ")
    }
}

/// An ordered, duplicate-free ranking of item ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranking {
    #[serde(rename = "id")]
    pub instance_id: String,
    pub items: Vec<ItemId>,
}

#[derive(Debug, Error)]
pub enum AdapterError {
    #[error("protocol violation: {0}")]
    Protocol(String),
    #[error("adapter timed out after {0:?}")]
    Timeout(Duration),
    #[error("adapter process failure: {0}")]
    Child(String),
    #[error("http failure: {0}")]
    Http(String),
    #[error("adapter spec `{0}` is not builtin | cmd:... | http(s)://...")]
    BadSpec(String),
    #[error("builtin adapter requires a knowledge base")]
    MissingKb,
}

/// Check a response against the ranking invariants.
pub fn validate_ranking(ranking: &Ranking, request: &RecommendRequest) -> Result<(), AdapterError> {
    if ranking.instance_id != request.instance_id {
        return Err(AdapterError::Protocol(format!(
            "response id `{}` does not match request id `{}`",
            ranking.instance_id, request.instance_id
        )));
    }
    if ranking.items.len() > request.k_max {
        return Err(AdapterError::Protocol(format!(
            "ranking has {} items, more than k={}",
            ranking.items.len(),
            request.k_max
        )));
    }
    let mut seen = HashSet::new();
    for item in &ranking.items {
        if !seen.insert(item) {
            return Err(AdapterError::Protocol(format!(
                "duplicate item `{item}` in ranking"
            )));
        }
    }
    Ok(())
}

/// Anything that can answer recommendation requests.
pub trait Recommender {
    fn recommend(&mut self, request: &RecommendRequest) -> Result<Ranking, AdapterError>;
}

// ---------------------------------------------------------------------------
// Builtin lexical-overlap baseline
// ---------------------------------------------------------------------------

/// Deterministic baseline: scores every KB item by
/// `3 * |title tokens ∩ text tokens| + |item genres mentioned in text|`,
/// sending items whose genre is covered by a `do not like … <genre>`
/// pattern to the bottom. Ties break by ascending item id.
pub struct BuiltinOverlap<'a> {
    kb: &'a KnowledgeBase,
}

impl<'a> BuiltinOverlap<'a> {
    pub fn new(kb: &'a KnowledgeBase) -> Self {
        BuiltinOverlap { kb }
    }
}

fn word_set(text: &str) -> HashSet<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect()
}

impl Recommender for BuiltinOverlap<'_> {
    fn recommend(&mut self, request: &RecommendRequest) -> Result<Ranking, AdapterError> {
        let text = request.combined_text().to_lowercase();
        let words = word_set(&text);
        let disliked: HashSet<&str> = self
            .kb
            .genre_names()
            .filter(|genre| {
                text.split(['.', '!', '?']).any(|sentence| {
                    sentence
                        .find("do not like")
                        .map(|at| word_set(&sentence[at..]).contains(*genre))
                        .unwrap_or(false)
                })
            })
            .collect();

        let mut scored: Vec<(f64, &ItemId)> = self
            .kb
            .items()
            .map(|item| {
                let title_overlap = word_set(&item.title).intersection(&words).count();
                let genre_overlap = item
                    .genres
                    .iter()
                    .filter(|g| words.contains(g.as_str()))
                    .count();
                let score = if item.genres.iter().any(|g| disliked.contains(g.as_str())) {
                    f64::NEG_INFINITY
                } else {
                    3.0 * title_overlap as f64 + genre_overlap as f64
                };
                (score, &item.id)
            })
            .collect();
        scored.sort_by(|a, b| {
            b.0.partial_cmp(&a.0)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| a.1.cmp(b.1))
        });
        Ok(Ranking {
            instance_id: request.instance_id.clone(),
            items: scored
                .into_iter()
                .take(request.k_max)
                .map(|(_, id)| id.clone())
                .collect(),
        })
    }
}

// ---------------------------------------------------------------------------
// Subprocess adapter (JSON line protocol)
// ---------------------------------------------------------------------------

struct ChildProcess {
    child: Child,
    stdin: ChildStdin,
    lines: mpsc::Receiver<std::io::Result<String>>,
}

impl ChildProcess {
    fn spawn(command: &[String]) -> Result<Self, AdapterError> {
        let mut child = Command::new(&command[0])
            .args(&command[1..])
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| AdapterError::Child(format!("spawn {}: {e}", command[0])))?;
        let stdin = child
            .stdin
            .take()
            .ok_or_else(|| AdapterError::Child("child stdin unavailable".into()))?;
        let stdout = child
            .stdout
            .take()
            .ok_or_else(|| AdapterError::Child("child stdout unavailable".into()))?;
        let (tx, rx) = mpsc::channel();
        std::thread::spawn(move || {
            let reader = BufReader::new(stdout);
            for line in reader.lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(ChildProcess {
            child,
            stdin,
            lines: rx,
        })
    }

    fn kill(mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// Client for an external recommender speaking the line protocol. One child
/// process per adapter instance; the child is respawned after timeouts and
/// stream desyncs so one bad instance cannot poison the rest of the run.
pub struct SubprocessAdapter {
    command: Vec<String>,
    timeout: Duration,
    process: Option<ChildProcess>,
}

impl SubprocessAdapter {
    /// `command` is split on whitespace; no shell is involved.
    pub fn new(command: &str, timeout: Duration) -> Result<Self, AdapterError> {
        let parts: Vec<String> = command.split_whitespace().map(str::to_string).collect();
        if parts.is_empty() {
            return Err(AdapterError::BadSpec(command.to_string()));
        }
        Ok(SubprocessAdapter {
            command: parts,
            timeout,
            process: None,
        })
    }

    fn reset(&mut self) {
        if let Some(process) = self.process.take() {
            process.kill();
        }
    }
}

impl Recommender for SubprocessAdapter {
    fn recommend(&mut self, request: &RecommendRequest) -> Result<Ranking, AdapterError> {
        if self.process.is_none() {
            self.process = Some(ChildProcess::spawn(&self.command)?);
        }
        let process = self.process.as_mut().expect("spawned above");

        let line = serde_json::to_string(request).expect("request serializes");
        if let Err(e) = process
            .stdin
            .write_all(line.as_bytes())
            .and_then(|_| process.stdin.write_all(b"\n"))
            .and_then(|_| process.stdin.flush())
        {
            self.reset();
            return Err(AdapterError::Child(format!("write request: {e}")));
        }

        let response = match process.lines.recv_timeout(self.timeout) {
            Ok(Ok(line)) => line,
            Ok(Err(e)) => {
                self.reset();
                return Err(AdapterError::Child(format!("read response: {e}")));
            }
            Err(mpsc::RecvTimeoutError::Timeout) => {
                let timeout = self.timeout;
                self.reset();
                return Err(AdapterError::Timeout(timeout));
            }
            Err(mpsc::RecvTimeoutError::Disconnected) => {
                self.reset();
                return Err(AdapterError::Child("adapter closed stdout".into()));
            }
        };

        let ranking: Ranking = match serde_json::from_str(&response) {
            Ok(r) => r,
            Err(e) => {
                self.reset();
                return Err(AdapterError::Protocol(format!("malformed response: {e}")));
            }
        };
        if ranking.instance_id != request.instance_id {
            self.reset();
            return Err(AdapterError::Protocol(format!(
                "response id `{}` does not match request id `{}` (stream desync)",
                ranking.instance_id, request.instance_id
            )));
        }
        validate_ranking(&ranking, request)?;
        Ok(ranking)
    }
}

impl Drop for SubprocessAdapter {
    fn drop(&mut self) {
        self.reset();
    }
}

// ---------------------------------------------------------------------------
// HTTP adapter
// ---------------------------------------------------------------------------

/// Client for a recommender behind `POST <url>` with the same JSON bodies
/// as the line protocol.
pub struct HttpAdapter {
    client: reqwest::blocking::Client,
    url: String,
}

impl HttpAdapter {
    pub fn new(url: &str, timeout: Duration) -> Result<Self, AdapterError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| AdapterError::Http(e.to_string()))?;
        Ok(HttpAdapter {
            client,
            url: url.to_string(),
        })
    }
}

impl Recommender for HttpAdapter {
    fn recommend(&mut self, request: &RecommendRequest) -> Result<Ranking, AdapterError> {
        let response = self
            .client
            .post(&self.url)
            .json(request)
            .send()
            .map_err(|e| {
                if e.is_timeout() {
                    AdapterError::Timeout(DEFAULT_TIMEOUT)
                } else {
                    AdapterError::Http(e.to_string())
                }
            })?;
        if !response.status().is_success() {
            return Err(AdapterError::Http(format!(
                "status {} from {}",
                response.status(),
                self.url
            )));
        }
        let ranking: Ranking = response
            .json()
            .map_err(|e| AdapterError::Protocol(format!("malformed response: {e}")))?;
        validate_ranking(&ranking, request)?;
        Ok(ranking)
    }
}

// ---------------------------------------------------------------------------
// Adapter spec parsing
// ---------------------------------------------------------------------------

/// How to reach the recommender: `builtin`, `cmd:<command line>`, or an
/// `http(s)://` URL.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AdapterSpec {
    Builtin,
    Command(String),
    Http(String),
}

impl AdapterSpec {
    pub fn parse(spec: &str) -> Result<Self, AdapterError> {
        if spec == "builtin" {
            return Ok(AdapterSpec::Builtin);
        }
        if let Some(cmd) = spec.strip_prefix("cmd:") {
            if cmd.trim().is_empty() {
                return Err(AdapterError::BadSpec(spec.to_string()));
            }
            return Ok(AdapterSpec::Command(cmd.to_string()));
        }
        if spec.starts_with("http://") || spec.starts_with("https://") {
            return Ok(AdapterSpec::Http(spec.to_string()));
        }
        Err(AdapterError::BadSpec(spec.to_string()))
    }

    /// Instantiate one recommender. Each worker gets its own instance, so
    /// subprocess adapters never share a child.
    pub fn build<'a>(
        &self,
        kb: Option<&'a KnowledgeBase>,
        timeout: Duration,
    ) -> Result<Box<dyn Recommender + Send + 'a>, AdapterError> {
        match self {
            AdapterSpec::Builtin => {
                let kb = kb.ok_or(AdapterError::MissingKb)?;
                Ok(Box::new(BuiltinOverlap::new(kb)))
            }
            AdapterSpec::Command(cmd) => Ok(Box::new(SubprocessAdapter::new(cmd, timeout)?)),
            AdapterSpec::Http(url) => Ok(Box::new(HttpAdapter::new(url, timeout)?)),
        }
    }
}
