//! Adversarial robustness benchmark toolkit for conversational recommender
//! systems (CRSs).
//!
//! The library covers the full evaluation pipeline:
//!
//! 1. [`corpus`] loads REDIAL / OpenDialKG style dialogue exports, normalizes
//!    them into one dialogue model and extracts evaluation instances.
//! 2. [`perturb`] rewrites the user's last answer under four adversarial
//!    scenarios, backed by [`lingo`] (rule-based tagging and inflection),
//!    [`lexicon`] (synonyms / antonyms) and [`knowledge`] (offline item
//!    knowledge base).
//! 3. [`adapter`] sends original and perturbed answers to any recommender
//!    that speaks the JSON line protocol (builtin baseline, subprocess, or
//!    HTTP endpoint).
//! 4. [`metrics`] scores the returned rankings (hit / mrr / ndcg at
//!    configurable cutoffs) and [`report`] compares original vs. adversarial
//!    runs into a robustness report.
//!
//! Every stage is deterministic given its inputs and a seed, so benchmark
//! runs are reproducible byte for byte.

pub mod adapter;
pub mod corpus;
pub mod harness;
pub mod knowledge;
pub mod lexicon;
pub mod lingo;
pub mod metrics;
pub mod perturb;
pub mod report;
pub mod types;

pub use types::{Domain, ItemId, Speaker};

/// Schema versions of the file formats and wire protocols this crate reads
/// and writes. Bumped on any incompatible change.
pub mod schema {
    /// Normalized corpus JSON lines.
    pub const CORPUS: &str = "crsbench/corpus/v1";
    /// Perturbed-instance JSON lines (with metadata header line).
    pub const PERTURBED: &str = "crsbench/perturbed/v1";
    /// Per-instance score JSON lines (with metadata header line).
    pub const SCORES: &str = "crsbench/scores/v1";
    /// Robustness report JSON.
    pub const REPORT: &str = "crsbench/report/v1";
    /// Adapter request/response line protocol and HTTP body.
    pub const ADAPTER_PROTOCOL: &str = "crsbench/adapter/v1";
    /// Lexicon TSV resource format.
    pub const LEXICON_TSV: &str = "crsbench/lexicon-tsv/v1";
    /// Knowledge-base JSON snapshot format.
    pub const KB_JSON: &str = "crsbench/kb-json/v1";
}
