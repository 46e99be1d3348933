//! Implementations of the four pipeline subcommands.

use crate::{Cat1ScopeArg, Cat2ModeArg, CliError, CorpusFormat, ScenarioArg, SplitFilter};
use crsbench_core::adapter::AdapterSpec;
use crsbench_core::corpus::{self, Dialogue, Split};
use crsbench_core::harness::{self, EvalConfig, ScoresHeader, Side};
use crsbench_core::knowledge::KnowledgeBase;
use crsbench_core::lexicon::Lexicon;
use crsbench_core::metrics::scores_to_csv;
use crsbench_core::perturb::{
    read_perturbed, write_perturbed, Cat1Scope, Cat2Mode, PerturbedHeader, Perturber, Scenario,
};
use crsbench_core::report::{compare, ScoredSide, Thresholds};
use crsbench_core::schema;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

impl From<corpus::CorpusError> for CliError {
    fn from(e: corpus::CorpusError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

fn data_err(e: impl std::fmt::Display) -> CliError {
    CliError::Data(e.to_string())
}

fn load_kb(path: Option<&Path>) -> Result<Option<KnowledgeBase>, CliError> {
    path.map(KnowledgeBase::load)
        .transpose()
        .map_err(data_err)
}

fn load_lexicon(path: Option<&Path>) -> Result<Lexicon, CliError> {
    match path {
        Some(p) => Lexicon::load(p).map_err(data_err),
        None => Ok(Lexicon::bundled()),
    }
}

// ---------------------------------------------------------------------------
// ingest
// ---------------------------------------------------------------------------

pub fn ingest(
    input: &Path,
    format: CorpusFormat,
    out: &Path,
    split: SplitFilter,
    split_seed: u64,
) -> Result<(), CliError> {
    let mut dialogues: Vec<Dialogue> = match format {
        CorpusFormat::Redial => corpus::load_redial(input)?,
        CorpusFormat::Opendialkg => corpus::load_opendialkg(input)?,
        CorpusFormat::Normalized => corpus::read_corpus(input)?,
    };
    if split != SplitFilter::All {
        let wanted = match split {
            SplitFilter::Train => Split::Train,
            SplitFilter::Valid => Split::Valid,
            SplitFilter::Test => Split::Test,
            SplitFilter::All => unreachable!(),
        };
        let instances = corpus::extract_instances(&dialogues);
        let assignment = corpus::split(&instances, split_seed);
        dialogues.retain(|d| assignment.dialogues.get(&d.id) == Some(&wanted));
    }
    if let Some(parent) = out.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut buf = Vec::new();
    corpus::write_corpus(&dialogues, &mut buf)?;
    fs::write(out, buf)?;
    println!(
        "ingested {} dialogues ({} instances) -> {}",
        dialogues.len(),
        corpus::extract_instances(&dialogues).len(),
        out.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// perturb
// ---------------------------------------------------------------------------

#[allow(clippy::too_many_arguments)]
pub fn perturb(
    corpus_path: &Path,
    scenario: ScenarioArg,
    seed: u64,
    lexicon_path: Option<&Path>,
    kb_path: Option<&Path>,
    cat2_mode: Cat2ModeArg,
    cat1_scope: Cat1ScopeArg,
    last_only: bool,
    out_dir: &Path,
) -> Result<(), CliError> {
    let scenarios: Vec<Scenario> = match scenario {
        ScenarioArg::Cat1Change => vec![Scenario::Cat1Change],
        ScenarioArg::Cat1Add => vec![Scenario::Cat1Add],
        ScenarioArg::Cat2Change => vec![Scenario::Cat2Change],
        ScenarioArg::Cat2Add => vec![Scenario::Cat2Add],
        ScenarioArg::All => Scenario::ALL.to_vec(),
    };
    if scenarios.contains(&Scenario::Cat1Add) && kb_path.is_none() {
        return Err(CliError::Usage(
            "--kb is required for the cat1-add scenario".to_string(),
        ));
    }

    let dialogues = corpus::read_corpus(corpus_path)?;
    let mut instances = corpus::extract_instances(&dialogues);
    if last_only {
        instances = corpus::last_only(instances);
    }

    let lexicon = load_lexicon(lexicon_path)?;
    let kb = load_kb(kb_path)?;
    let mode = match cat2_mode {
        Cat2ModeArg::Auto => Cat2Mode::Auto,
        Cat2ModeArg::Antonym => Cat2Mode::Antonym,
        Cat2ModeArg::Negation => Cat2Mode::Negation,
    };
    let scope = match cat1_scope {
        Cat1ScopeArg::All => Cat1Scope::ReplaceAll,
        Cat1ScopeArg::SingleWord => Cat1Scope::SingleWord,
    };
    let perturber = Perturber::new(&lexicon, kb.as_ref())
        .with_cat2_mode(mode)
        .with_cat1_scope(scope);

    fs::create_dir_all(out_dir)?;
    for scenario in scenarios {
        let outputs = perturber.perturb_corpus(&instances, scenario, seed);
        let header = PerturbedHeader {
            schema: schema::PERTURBED.to_string(),
            scenario,
            seed,
            cat2_mode: mode,
            n_instances: outputs.len(),
            n_skipped: outputs.iter().filter(|o| o.is_skipped()).count(),
        };
        let path = out_dir.join(format!("perturbed-{}.jsonl", scenario.slug()));
        let mut buf = Vec::new();
        write_perturbed(&header, &outputs, &mut buf).map_err(data_err)?;
        fs::write(&path, buf)?;
        println!(
            "{}: {} instances ({} skipped) -> {}",
            scenario.slug(),
            header.n_instances,
            header.n_skipped,
            path.display()
        );
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

#[allow(clippy::too_many_arguments)]
pub fn evaluate(
    perturbed_paths: &[PathBuf],
    adapter: &str,
    kb_path: Option<&Path>,
    cutoffs: &[usize],
    workers: usize,
    timeout_secs: u64,
    csv: bool,
    out_dir: &Path,
) -> Result<(), CliError> {
    let spec = AdapterSpec::parse(adapter).map_err(|e| CliError::Usage(e.to_string()))?;
    if spec == AdapterSpec::Builtin && kb_path.is_none() {
        return Err(CliError::Usage(
            "--kb is required for the builtin adapter".to_string(),
        ));
    }
    let mut cutoffs = cutoffs.to_vec();
    cutoffs.sort_unstable();
    cutoffs.dedup();
    if cutoffs.is_empty() {
        return Err(CliError::Usage("--cutoffs must be nonempty".to_string()));
    }
    let kb = load_kb(kb_path)?;
    let config = EvalConfig {
        cutoffs: cutoffs.clone(),
        workers,
        timeout: Duration::from_secs(timeout_secs),
    };
    fs::create_dir_all(out_dir)?;

    for path in perturbed_paths {
        let (header, instances) = read_perturbed(path).map_err(data_err)?;
        let paired = harness::evaluate_pair(&instances, &spec, kb.as_ref(), &config)
            .map_err(|e| CliError::Adapter(e.to_string()))?;

        for failure in &paired.failures {
            log::warn!(
                "instance {} ({:?} side) failed: {}",
                failure.instance_id,
                failure.side,
                failure.error
            );
        }

        for (side, scores) in [
            (Side::Original, &paired.original),
            (Side::Adversarial, &paired.adversarial),
        ] {
            let side_slug = match side {
                Side::Original => "original",
                Side::Adversarial => "adversarial",
            };
            let scores_header = ScoresHeader {
                schema: schema::SCORES.to_string(),
                scenario: header.scenario,
                seed: header.seed,
                side,
                adapter: adapter.to_string(),
                cutoffs: cutoffs.clone(),
                n_scored: scores.len(),
                n_failed: paired.n_failed(),
                n_skipped: paired.n_skipped,
            };
            let out_path =
                out_dir.join(format!("scores-{}-{side_slug}.jsonl", header.scenario.slug()));
            let mut buf = Vec::new();
            harness::write_scores(&scores_header, scores, &mut buf).map_err(data_err)?;
            fs::write(&out_path, buf)?;
            if csv {
                let csv_path = out_path.with_extension("csv");
                fs::write(&csv_path, scores_to_csv(scores, &cutoffs))?;
            }
        }
        println!(
            "{}: scored {} paired instances ({} failed, {} skipped) -> {}",
            header.scenario.slug(),
            paired.original.len(),
            paired.n_failed(),
            paired.n_skipped,
            out_dir.display()
        );
        if !paired.failures.is_empty() {
            eprintln!(
                "warning: {} adapter failures on {} instances; excluded from both sides",
                paired.failures.len(),
                paired.n_failed()
            );
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

pub fn report(
    scores_dir: &Path,
    out_dir: &Path,
    cat1_tolerance: f64,
    cat2_shift_threshold: f64,
) -> Result<(), CliError> {
    let thresholds = Thresholds {
        cat1_tolerance,
        cat2_shift_threshold,
    };
    let mut reports = Vec::new();
    for scenario in Scenario::ALL {
        let orig_path = scores_dir.join(format!("scores-{}-original.jsonl", scenario.slug()));
        let adv_path = scores_dir.join(format!("scores-{}-adversarial.jsonl", scenario.slug()));
        if !orig_path.exists() && !adv_path.exists() {
            continue;
        }
        if !orig_path.exists() || !adv_path.exists() {
            return Err(CliError::Data(format!(
                "unpaired score files for {}: need both {} and {}",
                scenario.slug(),
                orig_path.display(),
                adv_path.display()
            )));
        }
        let (orig_header, orig_scores) = harness::read_scores(&orig_path).map_err(data_err)?;
        let (adv_header, adv_scores) = harness::read_scores(&adv_path).map_err(data_err)?;
        let original = ScoredSide::new(orig_scores, &orig_header.cutoffs, orig_header.n_failed);
        let adversarial = ScoredSide::new(adv_scores, &adv_header.cutoffs, adv_header.n_failed);
        let report =
            compare(&original, &adversarial, scenario, thresholds).map_err(data_err)?;
        println!(
            "{}: verdict {:?}, shift rate {:.3}",
            scenario.slug(),
            report.verdict,
            report.shift_rate
        );
        reports.push(report);
    }
    if reports.is_empty() {
        return Err(CliError::Data(format!(
            "no score file pairs found in {}",
            scores_dir.display()
        )));
    }

    fs::create_dir_all(out_dir)?;
    fs::write(
        out_dir.join("report.json"),
        crsbench_core::report::render_json(&reports),
    )?;
    fs::write(
        out_dir.join("report.csv"),
        crsbench_core::report::render_csv(&reports),
    )?;
    fs::write(
        out_dir.join("report.md"),
        crsbench_core::report::render_markdown(&reports),
    )?;
    println!(
        "wrote report.json, report.csv, report.md -> {}",
        out_dir.display()
    );
    Ok(())
}
