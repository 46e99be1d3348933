//! Ranking metrics: hit@k, mrr@k, ndcg@k and their corpus aggregation.
//!
//! Ground truth is binary and scored by best rank: `r` is the 1-based rank
//! of the first ground-truth item found in the ranking. Then per cutoff `k`:
//! hit = 1 iff r ≤ k, mrr = 1/r iff r ≤ k, ndcg = 1/log2(r+1) iff r ≤ k
//! (single-relevant-item nDCG with ideal DCG = 1). For every instance
//! hit@1 = mrr@1 = ndcg@1 and mrr@k ≤ ndcg@k ≤ hit@k.

use crate::adapter::Ranking;
use crate::types::ItemId;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

pub const DEFAULT_CUTOFFS: [usize; 3] = [1, 10, 50];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    Hit,
    Mrr,
    Ndcg,
}

impl MetricKind {
    pub const ALL: [MetricKind; 3] = [MetricKind::Hit, MetricKind::Mrr, MetricKind::Ndcg];

    pub fn name(self) -> &'static str {
        match self {
            MetricKind::Hit => "hit",
            MetricKind::Mrr => "mrr",
            MetricKind::Ndcg => "ndcg",
        }
    }
}

/// Table key for one metric/cutoff cell, e.g. `hit@10`.
pub fn metric_key(kind: MetricKind, k: usize) -> String {
    format!("{}@{k}", kind.name())
}

/// Per-instance metric values.
///
/// `rank` is the 1-based rank of the first ground-truth item, absent when
/// none appears in the ranking. `top1` carries the head of the ranking for
/// prediction-shift analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceScore {
    pub instance_id: String,
    pub rank: Option<usize>,
    pub top1: Option<ItemId>,
    pub values: BTreeMap<String, f64>,
}

impl InstanceScore {
    pub fn value(&self, kind: MetricKind, k: usize) -> f64 {
        self.values[&metric_key(kind, k)]
    }
}

/// Corpus-level means. `table` cells are `None` when no instance was scored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub n_instances: usize,
    pub n_failed: usize,
    pub table: BTreeMap<String, Option<f64>>,
}

impl MetricReport {
    pub fn value(&self, kind: MetricKind, k: usize) -> Option<f64> {
        self.table.get(&metric_key(kind, k)).copied().flatten()
    }
}

/// Score one ranking against the ground-truth items.
pub fn score(truth: &[ItemId], ranking: &Ranking, cutoffs: &[usize]) -> InstanceScore {
    let rank = ranking
        .items
        .iter()
        .position(|item| truth.contains(item))
        .map(|idx| idx + 1);
    let mut values = BTreeMap::new();
    for &k in cutoffs {
        let hit_at_k = matches!(rank, Some(r) if r <= k);
        let r = rank.unwrap_or(usize::MAX);
        values.insert(
            metric_key(MetricKind::Hit, k),
            if hit_at_k { 1.0 } else { 0.0 },
        );
        values.insert(
            metric_key(MetricKind::Mrr, k),
            if hit_at_k { 1.0 / r as f64 } else { 0.0 },
        );
        values.insert(
            metric_key(MetricKind::Ndcg, k),
            if hit_at_k {
                1.0 / ((r + 1) as f64).log2()
            } else {
                0.0
            },
        );
    }
    InstanceScore {
        instance_id: ranking.instance_id.clone(),
        rank,
        top1: ranking.items.first().cloned(),
        values,
    }
}

/// Arithmetic mean per metric/cutoff over scored instances. Failed
/// instances are counted separately and never enter the means.
pub fn aggregate(scores: &[InstanceScore], cutoffs: &[usize], n_failed: usize) -> MetricReport {
    let mut table = BTreeMap::new();
    for kind in MetricKind::ALL {
        for &k in cutoffs {
            let key = metric_key(kind, k);
            let mean = if scores.is_empty() {
                None
            } else {
                Some(scores.iter().map(|s| s.values[&key]).sum::<f64>() / scores.len() as f64)
            };
            table.insert(key, mean);
        }
    }
    MetricReport {
        n_instances: scores.len(),
        n_failed,
        table,
    }
}

/// CSV export: `instance_id, rank, <metric columns>`.
pub fn scores_to_csv(scores: &[InstanceScore], cutoffs: &[usize]) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["instance_id".to_string(), "rank".to_string()];
    for kind in MetricKind::ALL {
        for &k in cutoffs {
            header.push(metric_key(kind, k));
        }
    }
    writer.write_record(&header).expect("csv write");
    for s in scores {
        let mut row = vec![
            s.instance_id.clone(),
            s.rank.map(|r| r.to_string()).unwrap_or_default(),
        ];
        for kind in MetricKind::ALL {
            for &k in cutoffs {
                row.push(format!("{}", s.value(kind, k)));
            }
        }
        writer.write_record(&row).expect("csv write");
    }
    String::from_utf8(writer.into_inner().expect("csv flush")).expect("utf8")
}
