//! Original-vs-adversarial comparison: relative metric deltas, prediction
//! shift, and per-scenario verdicts.
//!
//! Category 1 scenarios preserve meaning, so any metric drop beyond the
//! tolerance means the recommender was fooled. Category 2 scenarios reverse
//! meaning, so a recommender whose top-1 prediction rarely changes is
//! insensitive to the user's stated preferences.

use crate::metrics::{aggregate, metric_key, InstanceScore, MetricKind, MetricReport};
use crate::perturb::{Expectation, Scenario};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

/// Verdict thresholds; explicit configuration with documented defaults.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// Relative drop beyond which a Cat1 scenario counts as fooling the
    /// system (default 0.05 = 5%).
    pub cat1_tolerance: f64,
    /// Minimum top-1 shift rate a Cat2 scenario must reach before the
    /// system counts as sensitive (default 0.5).
    pub cat2_shift_threshold: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            cat1_tolerance: 0.05,
            cat2_shift_threshold: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    FooledByCat1,
    RobustToCat1,
    InsensitiveToCat2,
    SensitiveToCat2,
}

/// One side of a comparison: per-instance scores plus their aggregation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredSide {
    pub report: MetricReport,
    pub scores: Vec<InstanceScore>,
}

impl ScoredSide {
    pub fn new(scores: Vec<InstanceScore>, cutoffs: &[usize], n_failed: usize) -> Self {
        ScoredSide {
            report: aggregate(&scores, cutoffs, n_failed),
            scores,
        }
    }
}

/// Comparison of one scenario against its paired original run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessReport {
    pub scenario: Scenario,
    pub expectation: Expectation,
    pub cutoffs: Vec<usize>,
    pub original: MetricReport,
    pub adversarial: MetricReport,
    /// Relative change (adv − orig) / orig per metric cell; `None` where the
    /// original mean is zero or undefined.
    pub delta: BTreeMap<String, Option<f64>>,
    /// Fraction of paired instances whose top-1 item changed.
    pub shift_rate: f64,
    pub verdict: Verdict,
    pub thresholds: Thresholds,
}

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("unpaired instances: {0} only in original, {1} only in adversarial (e.g. {2})",
            missing_from_adversarial.len(), missing_from_original.len(),
            missing_from_adversarial.iter().chain(missing_from_original.iter())
                .take(5).cloned().collect::<Vec<_>>().join(", "))]
    UnpairedInstances {
        missing_from_adversarial: Vec<String>,
        missing_from_original: Vec<String>,
    },
    #[error("failed to read scores: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid report JSON: {0}")]
    Json(#[from] serde_json::Error),
}

fn cutoffs_of(report: &MetricReport) -> Vec<usize> {
    let mut cutoffs: BTreeSet<usize> = report
        .table
        .keys()
        .filter_map(|key| key.split('@').nth(1)?.parse().ok())
        .collect();
    if cutoffs.is_empty() {
        cutoffs.extend(crate::metrics::DEFAULT_CUTOFFS);
    }
    cutoffs.into_iter().collect()
}

/// Compare paired original and adversarial runs of one scenario.
///
/// Both sides must cover the identical instance-id set; skipped and failed
/// instances are excluded from both sides upstream.
pub fn compare(
    original: &ScoredSide,
    adversarial: &ScoredSide,
    scenario: Scenario,
    thresholds: Thresholds,
) -> Result<RobustnessReport, ReportError> {
    let orig_ids: BTreeSet<&String> = original.scores.iter().map(|s| &s.instance_id).collect();
    let adv_ids: BTreeSet<&String> = adversarial.scores.iter().map(|s| &s.instance_id).collect();
    if orig_ids != adv_ids {
        return Err(ReportError::UnpairedInstances {
            missing_from_adversarial: orig_ids
                .difference(&adv_ids)
                .map(|s| s.to_string())
                .collect(),
            missing_from_original: adv_ids
                .difference(&orig_ids)
                .map(|s| s.to_string())
                .collect(),
        });
    }

    let cutoffs = cutoffs_of(&original.report);
    let mut delta = BTreeMap::new();
    for kind in MetricKind::ALL {
        for &k in &cutoffs {
            let key = metric_key(kind, k);
            let cell = match (original.report.value(kind, k), adversarial.report.value(kind, k)) {
                (Some(orig), Some(adv)) if orig > 0.0 => Some((adv - orig) / orig),
                _ => None,
            };
            delta.insert(key, cell);
        }
    }

    let adv_top1: BTreeMap<&String, &Option<crate::types::ItemId>> = adversarial
        .scores
        .iter()
        .map(|s| (&s.instance_id, &s.top1))
        .collect();
    let shifted = original
        .scores
        .iter()
        .filter(|s| adv_top1[&s.instance_id] != &s.top1)
        .count();
    let shift_rate = if original.scores.is_empty() {
        0.0
    } else {
        shifted as f64 / original.scores.len() as f64
    };

    let verdict = if scenario.is_cat1() {
        let fooled = delta
            .values()
            .flatten()
            .any(|d| *d < -thresholds.cat1_tolerance);
        if fooled {
            Verdict::FooledByCat1
        } else {
            Verdict::RobustToCat1
        }
    } else if shift_rate < thresholds.cat2_shift_threshold {
        Verdict::InsensitiveToCat2
    } else {
        Verdict::SensitiveToCat2
    };

    Ok(RobustnessReport {
        scenario,
        expectation: scenario.expectation(),
        cutoffs,
        original: original.report.clone(),
        adversarial: adversarial.report.clone(),
        delta,
        shift_rate,
        verdict,
        thresholds,
    })
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

fn fmt_cell(value: Option<f64>) -> String {
    match value {
        Some(v) => format!("{v:.4}"),
        None => "-".to_string(),
    }
}

fn metric_columns(cutoffs: &[usize]) -> Vec<String> {
    MetricKind::ALL
        .iter()
        .flat_map(|kind| cutoffs.iter().map(|k| metric_key(*kind, *k)))
        .collect()
}

fn table_row(label: &str, report: &MetricReport, cutoffs: &[usize]) -> String {
    let cells: Vec<String> = MetricKind::ALL
        .iter()
        .flat_map(|kind| cutoffs.iter().map(|k| fmt_cell(report.value(*kind, *k))))
        .collect();
    format!("| {label} | {} |", cells.join(" | "))
}

/// Markdown rendering: one table per category with an `Original` row and
/// one row per scenario, followed by verdict notes.
pub fn render_markdown(reports: &[RobustnessReport]) -> String {
    let mut out = String::new();
    out.push_str("# Robustness report\n");
    for (category, expectation) in [
        ("Cat1 (expecting the same prediction)", Expectation::SamePrediction),
        ("Cat2 (expecting a different prediction)", Expectation::DifferentPrediction),
    ] {
        let group: Vec<&RobustnessReport> = reports
            .iter()
            .filter(|r| r.expectation == expectation)
            .collect();
        if group.is_empty() {
            continue;
        }
        let cutoffs = &group[0].cutoffs;
        out.push_str(&format!("\n## {category}\n\n"));
        out.push_str(&format!("| Input Type | {} |\n", metric_columns(cutoffs).join(" | ")));
        out.push_str(&format!("|---|{}\n", "---|".repeat(cutoffs.len() * 3)));

        let shared_original = group
            .iter()
            .all(|r| r.original.table == group[0].original.table);
        if shared_original {
            out.push_str(&table_row("Original", &group[0].original, cutoffs));
            out.push('\n');
            for report in &group {
                out.push_str(&table_row(report.scenario.label(), &report.adversarial, cutoffs));
                out.push('\n');
            }
        } else {
            for report in &group {
                let label = format!("Original ({})", report.scenario.label());
                out.push_str(&table_row(&label, &report.original, cutoffs));
                out.push('\n');
                out.push_str(&table_row(report.scenario.label(), &report.adversarial, cutoffs));
                out.push('\n');
            }
        }

        for report in &group {
            let worst = report
                .delta
                .values()
                .flatten()
                .cloned()
                .fold(f64::INFINITY, f64::min);
            let worst = if worst.is_finite() {
                format!("{:+.1}%", worst * 100.0)
            } else {
                "n/a".to_string()
            };
            out.push_str(&format!(
                "\n- {}: verdict `{:?}`, worst relative delta {}, top-1 shift rate {:.3} (n={}, failed={})",
                report.scenario.label(),
                report.verdict,
                worst,
                report.shift_rate,
                report.adversarial.n_instances,
                report.adversarial.n_failed,
            ));
        }
        out.push('\n');
    }
    out
}

/// Lossless JSON rendering (round-trips through [`reports_from_json`]).
pub fn render_json(reports: &[RobustnessReport]) -> String {
    serde_json::to_string_pretty(reports).expect("report serializes")
}

pub fn reports_from_json(json: &str) -> Result<Vec<RobustnessReport>, ReportError> {
    Ok(serde_json::from_str(json)?)
}

/// CSV rendering: one row per (scenario, metric, cutoff).
pub fn render_csv(reports: &[RobustnessReport]) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer
        .write_record(["scenario", "metric", "k", "original", "adversarial", "delta"])
        .expect("csv write");
    for report in reports {
        for kind in MetricKind::ALL {
            for &k in &report.cutoffs {
                let key = metric_key(kind, k);
                writer
                    .write_record([
                        report.scenario.slug().to_string(),
                        kind.name().to_string(),
                        k.to_string(),
                        fmt_num(report.original.value(kind, k)),
                        fmt_num(report.adversarial.value(kind, k)),
                        fmt_num(report.delta.get(&key).copied().flatten()),
                    ])
                    .expect("csv write");
            }
        }
    }
    String::from_utf8(writer.into_inner().expect("csv flush")).expect("utf8")
}

fn fmt_num(value: Option<f64>) -> String {
    value.map(|v| v.to_string()).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adapter::Ranking;
    use crate::metrics::{score, DEFAULT_CUTOFFS};
    use crate::types::ItemId;

    fn scored(instance_id: &str, items: &[&str], truth: &[&str]) -> InstanceScore {
        let ranking = Ranking {
            instance_id: instance_id.to_string(),
            items: items.iter().map(|i| ItemId::from(*i)).collect(),
        };
        let truth: Vec<ItemId> = truth.iter().map(|i| ItemId::from(*i)).collect();
        score(&truth, &ranking, &DEFAULT_CUTOFFS)
    }

    fn side(scores: Vec<InstanceScore>) -> ScoredSide {
        ScoredSide::new(scores, &DEFAULT_CUTOFFS, 0)
    }

    #[test]
    fn identity_comparison_is_all_zero() {
        let scores = vec![
            scored("a:1", &["x", "y"], &["x"]),
            scored("b:1", &["y", "x"], &["x"]),
        ];
        let report = compare(
            &side(scores.clone()),
            &side(scores),
            Scenario::Cat2Add,
            Thresholds::default(),
        )
        .unwrap();
        assert_eq!(report.shift_rate, 0.0);
        for cell in report.delta.values().flatten() {
            assert_eq!(*cell, 0.0);
        }
        assert_eq!(report.verdict, Verdict::InsensitiveToCat2);
    }

    #[test]
    fn zero_original_yields_null_delta_not_infinity() {
        let orig = vec![scored("a:1", &["y"], &["x"])]; // all-zero metrics
        let adv = vec![scored("a:1", &["x"], &["x"])];
        let report = compare(&side(orig), &side(adv), Scenario::Cat1Change, Thresholds::default())
            .unwrap();
        for cell in report.delta.values() {
            assert!(cell.is_none());
        }
    }

    #[test]
    fn unpaired_ids_error_lists_mismatches() {
        let orig = vec![scored("a:1", &["x"], &["x"]), scored("b:1", &["x"], &["x"])];
        let adv = vec![scored("a:1", &["x"], &["x"])];
        let err = compare(&side(orig), &side(adv), Scenario::Cat1Add, Thresholds::default())
            .unwrap_err();
        match err {
            ReportError::UnpairedInstances {
                missing_from_adversarial,
                missing_from_original,
            } => {
                assert_eq!(missing_from_adversarial, vec!["b:1".to_string()]);
                assert!(missing_from_original.is_empty());
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn shift_rate_counts_top1_changes() {
        let orig = vec![
            scored("a:1", &["x", "y"], &["x"]),
            scored("b:1", &["x", "y"], &["x"]),
        ];
        let adv = vec![
            scored("a:1", &["y", "x"], &["x"]),
            scored("b:1", &["x", "y"], &["x"]),
        ];
        let report =
            compare(&side(orig), &side(adv), Scenario::Cat2Change, Thresholds::default()).unwrap();
        assert_eq!(report.shift_rate, 0.5);
        assert_eq!(report.verdict, Verdict::SensitiveToCat2);
    }

    #[test]
    fn cat1_fooled_verdict_uses_tolerance() {
        let orig = vec![scored("a:1", &["x"], &["x"]), scored("b:1", &["x"], &["x"])];
        let adv = vec![scored("a:1", &["y"], &["x"]), scored("b:1", &["x"], &["x"])];
        let report =
            compare(&side(orig), &side(adv), Scenario::Cat1Change, Thresholds::default()).unwrap();
        // hit@1 drops from 1.0 to 0.5: delta -0.5 < -0.05
        assert_eq!(report.verdict, Verdict::FooledByCat1);

        let loose = Thresholds {
            cat1_tolerance: 0.6,
            ..Thresholds::default()
        };
        let report = compare(
            &side(vec![scored("a:1", &["x"], &["x"]), scored("b:1", &["x"], &["x"])]),
            &side(vec![scored("a:1", &["y"], &["x"]), scored("b:1", &["x"], &["x"])]),
            Scenario::Cat1Change,
            loose,
        )
        .unwrap();
        assert_eq!(report.verdict, Verdict::RobustToCat1);
    }

    #[test]
    fn json_round_trip() {
        let orig = vec![scored("a:1", &["x", "y"], &["x"])];
        let adv = vec![scored("a:1", &["y", "x"], &["x"])];
        let report =
            compare(&side(orig), &side(adv), Scenario::Cat2Change, Thresholds::default()).unwrap();
        let json = render_json(std::slice::from_ref(&report));
        let back = reports_from_json(&json).unwrap();
        assert_eq!(back, vec![report]);
    }

    #[test]
    fn markdown_layout_one_category() {
        let orig = vec![scored("a:1", &["x", "y"], &["x"])];
        let change = compare(
            &side(orig.clone()),
            &side(vec![scored("a:1", &["y", "x"], &["x"])]),
            Scenario::Cat1Change,
            Thresholds::default(),
        )
        .unwrap();
        let add = compare(
            &side(orig),
            &side(vec![scored("a:1", &["x", "y"], &["x"])]),
            Scenario::Cat1Add,
            Thresholds::default(),
        )
        .unwrap();
        let md = render_markdown(&[change, add]);
        let table_rows: Vec<&str> = md
            .lines()
            .filter(|l| l.starts_with("| ") && !l.starts_with("| Input"))
            .collect();
        assert_eq!(table_rows.len(), 3, "{md}");
        assert!(table_rows[0].starts_with("| Original |"));
        assert!(table_rows[1].starts_with("| Cat1-Change |"));
        assert!(table_rows[2].starts_with("| Cat1-Add |"));
        // 9 metric cells per row with default cutoffs
        assert_eq!(table_rows[0].matches('|').count(), 11);
    }

    #[test]
    fn csv_row_count_is_scenarios_by_metrics_by_cutoffs() {
        let orig = vec![scored("a:1", &["x"], &["x"])];
        let reports: Vec<RobustnessReport> = [Scenario::Cat1Change, Scenario::Cat1Add]
            .into_iter()
            .map(|s| {
                compare(&side(orig.clone()), &side(orig.clone()), s, Thresholds::default())
                    .unwrap()
            })
            .collect();
        let csv = render_csv(&reports);
        let rows = csv.lines().count() - 1;
        assert_eq!(rows, 2 * 3 * 3);
    }
}
