//! Evaluation driver: runs a recommender over original and adversarial
//! answers and produces paired per-instance scores.
//!
//! Work fans out across `workers` threads, each owning its own adapter
//! instance (so subprocess adapters never share a child process). Results
//! are keyed by job index and merged in input order, which makes the output
//! byte-identical regardless of worker count or completion order.
//!
//! Pairing rules: instances skipped at perturbation time are excluded from
//! both sides; an adapter failure on either side excludes the instance from
//! both sides and is recorded, never aborting the run.

use crate::adapter::{AdapterSpec, Ranking, RecommendRequest};
use crate::knowledge::KnowledgeBase;
use crate::metrics::{score, InstanceScore};
use crate::perturb::{PerturbedInstance, Scenario};
use serde::{Deserialize, Serialize};
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::sync::mpsc;
use std::time::Duration;
use thiserror::Error;

#[derive(Debug, Clone)]
pub struct EvalConfig {
    pub cutoffs: Vec<usize>,
    pub workers: usize,
    pub timeout: Duration,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            cutoffs: crate::metrics::DEFAULT_CUTOFFS.to_vec(),
            workers: 1,
            timeout: crate::adapter::DEFAULT_TIMEOUT,
        }
    }
}

impl EvalConfig {
    /// Largest configured cutoff; the `k` sent to adapters.
    pub fn k_max(&self) -> usize {
        self.cutoffs
            .iter()
            .copied()
            .max()
            .unwrap_or(crate::adapter::DEFAULT_K_MAX)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Original,
    Adversarial,
}

/// One adapter failure (the instance is excluded from both sides).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceFailure {
    pub instance_id: String,
    pub side: Side,
    pub error: String,
}

/// Paired evaluation output: same instance ids on both sides, input order.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedScores {
    pub original: Vec<InstanceScore>,
    pub adversarial: Vec<InstanceScore>,
    pub failures: Vec<InstanceFailure>,
    pub n_skipped: usize,
}

impl PairedScores {
    pub fn n_failed(&self) -> usize {
        let mut ids: Vec<&str> = self.failures.iter().map(|f| f.instance_id.as_str()).collect();
        ids.dedup();
        ids.len()
    }
}

/// Evaluate one perturbed batch: query the adapter with the original answer
/// and the adversarial answer for every non-skipped instance.
pub fn evaluate_pair(
    perturbed: &[PerturbedInstance],
    adapter: &AdapterSpec,
    kb: Option<&KnowledgeBase>,
    config: &EvalConfig,
) -> Result<PairedScores, crate::adapter::AdapterError> {
    let active: Vec<&PerturbedInstance> =
        perturbed.iter().filter(|p| !p.is_skipped()).collect();
    let n_skipped = perturbed.len() - active.len();
    let k_max = config.k_max();

    // Two jobs per instance: even = original, odd = adversarial.
    let requests: Vec<RecommendRequest> = active
        .iter()
        .flat_map(|p| {
            [
                RecommendRequest::from_instance(&p.base, &p.base.answer.text, k_max),
                RecommendRequest::from_instance(&p.base, &p.answer_adv, k_max),
            ]
        })
        .collect();

    let workers = config.workers.max(1);
    let mut results: Vec<Option<Result<Ranking, String>>> = vec![None; requests.len()];
    std::thread::scope(|scope| -> Result<(), crate::adapter::AdapterError> {
        let (tx, rx) = mpsc::channel::<(usize, Result<Ranking, String>)>();
        for worker in 0..workers {
            let tx = tx.clone();
            let requests = &requests;
            let mut recommender = adapter.build(kb, config.timeout)?;
            scope.spawn(move || {
                for (idx, request) in requests.iter().enumerate() {
                    if idx % workers != worker {
                        continue;
                    }
                    let outcome = recommender
                        .recommend(request)
                        .map_err(|e| e.to_string());
                    if tx.send((idx, outcome)).is_err() {
                        return;
                    }
                }
            });
        }
        drop(tx);
        for (idx, outcome) in rx {
            results[idx] = Some(outcome);
        }
        Ok(())
    })?;

    let mut original = Vec::new();
    let mut adversarial = Vec::new();
    let mut failures = Vec::new();
    for (i, inst) in active.iter().enumerate() {
        let orig = results[2 * i].take().expect("job completed");
        let adv = results[2 * i + 1].take().expect("job completed");
        match (orig, adv) {
            (Ok(orig_ranking), Ok(adv_ranking)) => {
                original.push(score(&inst.base.truth, &orig_ranking, &config.cutoffs));
                adversarial.push(score(&inst.base.truth, &adv_ranking, &config.cutoffs));
            }
            (orig, adv) => {
                for (side, outcome) in [(Side::Original, orig), (Side::Adversarial, adv)] {
                    if let Err(error) = outcome {
                        failures.push(InstanceFailure {
                            instance_id: inst.base.instance_id(),
                            side,
                            error,
                        });
                    }
                }
            }
        }
    }
    Ok(PairedScores {
        original,
        adversarial,
        failures,
        n_skipped,
    })
}

// ---------------------------------------------------------------------------
// Score file format (JSON lines with a metadata header line)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoresHeader {
    pub schema: String,
    pub scenario: Scenario,
    pub seed: u64,
    pub side: Side,
    pub adapter: String,
    pub cutoffs: Vec<usize>,
    pub n_scored: usize,
    pub n_failed: usize,
    pub n_skipped: usize,
}

#[derive(Debug, Error)]
pub enum ScoresFileError {
    #[error("failed to read scores file: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: malformed JSON: {message}")]
    Parse { line: usize, message: String },
    #[error("missing header line")]
    MissingHeader,
    #[error("unsupported schema `{0}`")]
    BadSchema(String),
}

pub fn write_scores(
    header: &ScoresHeader,
    scores: &[InstanceScore],
    mut writer: impl Write,
) -> Result<(), ScoresFileError> {
    writer.write_all(serde_json::to_string(header).expect("header serializes").as_bytes())?;
    writer.write_all(b"\n")?;
    for s in scores {
        writer.write_all(serde_json::to_string(s).expect("score serializes").as_bytes())?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_scores(
    path: impl AsRef<Path>,
) -> Result<(ScoresHeader, Vec<InstanceScore>), ScoresFileError> {
    read_scores_reader(std::fs::File::open(path)?)
}

pub fn read_scores_reader(
    reader: impl Read,
) -> Result<(ScoresHeader, Vec<InstanceScore>), ScoresFileError> {
    let mut lines = BufReader::new(reader).lines();
    let header_line = lines.next().ok_or(ScoresFileError::MissingHeader)??;
    let header: ScoresHeader =
        serde_json::from_str(&header_line).map_err(|e| ScoresFileError::Parse {
            line: 1,
            message: e.to_string(),
        })?;
    if header.schema != crate::schema::SCORES {
        return Err(ScoresFileError::BadSchema(header.schema));
    }
    let mut scores = Vec::new();
    for (idx, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        scores.push(serde_json::from_str(&line).map_err(|e| ScoresFileError::Parse {
            line: idx + 2,
            message: e.to_string(),
        })?);
    }
    Ok((header, scores))
}
