//! `crsbench` — adversarial robustness benchmark runner for conversational
//! recommenders.
//!
//! Pipeline stages communicate via files so each stage is independently
//! runnable and resumable:
//!
//! ```text
//! crsbench ingest   --format redial raw.jsonl --out corpus.jsonl
//! crsbench perturb  --corpus corpus.jsonl --scenario all --seed 42 \
//!     --kb kb.json --out-dir out/
//! crsbench evaluate --perturbed out/perturbed-cat1-change.jsonl \
//!     --adapter builtin --kb kb.json --out-dir out/
//! crsbench report   --scores-dir out/ --out-dir out/
//! ```
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 adapter error.

mod commands;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

const LONG_VERSION: &str = concat!(
    env!("CARGO_PKG_VERSION"),
    "\nfile format schemas:",
    "\n  corpus           crsbench/corpus/v1",
    "\n  perturbed        crsbench/perturbed/v1",
    "\n  scores           crsbench/scores/v1",
    "\n  report           crsbench/report/v1",
    "\n  adapter protocol crsbench/adapter/v1",
    "\n  lexicon tsv      crsbench/lexicon-tsv/v1",
    "\n  kb json          crsbench/kb-json/v1",
);

#[derive(Parser)]
#[command(name = "crsbench", version, long_version = LONG_VERSION)]
#[command(about = "Adversarial robustness benchmark for conversational recommenders")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CorpusFormat {
    Redial,
    Opendialkg,
    /// Already-normalized corpus JSON lines (validated and rewritten).
    Normalized,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SplitFilter {
    All,
    Train,
    Valid,
    Test,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ScenarioArg {
    Cat1Change,
    Cat1Add,
    Cat2Change,
    Cat2Add,
    All,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Cat2ModeArg {
    Auto,
    Antonym,
    Negation,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Cat1ScopeArg {
    All,
    SingleWord,
}

#[derive(Subcommand)]
enum Command {
    /// Load a raw dialogue export and write the normalized corpus.
    Ingest {
        /// Input file (REDIAL JSON lines or OpenDialKG JSON).
        input: PathBuf,
        #[arg(long, value_enum)]
        format: CorpusFormat,
        /// Normalized corpus output path.
        #[arg(long)]
        out: PathBuf,
        /// Keep only dialogues of one 8:1:1 split part.
        #[arg(long, value_enum, default_value = "all")]
        split: SplitFilter,
        /// Seed for the split shuffle.
        #[arg(long, default_value_t = 42)]
        split_seed: u64,
    },
    /// Generate adversarial instances from a normalized corpus.
    Perturb {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, value_enum)]
        scenario: ScenarioArg,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Lexicon TSV; defaults to the bundled lexicon.
        #[arg(long, env = "CRSBENCH_LEXICON")]
        lexicon: Option<PathBuf>,
        /// Knowledge-base JSON snapshot (required for cat1-add).
        #[arg(long, env = "CRSBENCH_KB")]
        kb: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "auto")]
        cat2_mode: Cat2ModeArg,
        /// How many words cat1-change rewrites.
        #[arg(long, value_enum, default_value = "all")]
        cat1_scope: Cat1ScopeArg,
        /// Evaluate only each dialogue's last recommendation point.
        #[arg(long)]
        last_only: bool,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Run an adapter on original and perturbed answers, writing paired
    /// score files.
    Evaluate {
        /// Perturbed-instance files (repeatable).
        #[arg(long, required = true)]
        perturbed: Vec<PathBuf>,
        /// Adapter spec: `builtin`, `cmd:<command>`, or an http(s) URL.
        #[arg(long)]
        adapter: String,
        #[arg(long, env = "CRSBENCH_KB")]
        kb: Option<PathBuf>,
        /// Metric cutoffs, comma separated.
        #[arg(long, value_delimiter = ',', default_values_t = vec![1usize, 10, 50])]
        cutoffs: Vec<usize>,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        /// External adapter timeout in seconds.
        #[arg(long, default_value_t = 30)]
        timeout_secs: u64,
        /// Also export per-instance scores as CSV next to each JSONL file.
        #[arg(long)]
        csv: bool,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Pair original/adversarial score files and emit robustness reports.
    Report {
        /// Directory containing `scores-<scenario>-{original,adversarial}.jsonl`.
        #[arg(long)]
        scores_dir: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// Relative drop beyond which Cat1 counts as fooled.
        #[arg(long, default_value_t = 0.05)]
        cat1_tolerance: f64,
        /// Minimum top-1 shift rate for Cat2 sensitivity.
        #[arg(long, default_value_t = 0.5)]
        cat2_shift_threshold: f64,
    },
}

/// Command failures mapped to exit codes.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Adapter(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Adapter(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Adapter(m) => m,
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version are not errors
            if matches!(
                e.kind(),
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion
            ) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };
    let result = match cli.command {
        Command::Ingest {
            input,
            format,
            out,
            split,
            split_seed,
        } => commands::ingest(&input, format, &out, split, split_seed),
        Command::Perturb {
            corpus,
            scenario,
            seed,
            lexicon,
            kb,
            cat2_mode,
            cat1_scope,
            last_only,
            out_dir,
        } => commands::perturb(
            &corpus,
            scenario,
            seed,
            lexicon.as_deref(),
            kb.as_deref(),
            cat2_mode,
            cat1_scope,
            last_only,
            &out_dir,
        ),
        Command::Evaluate {
            perturbed,
            adapter,
            kb,
            cutoffs,
            workers,
            timeout_secs,
            csv,
            out_dir,
        } => commands::evaluate(
            &perturbed,
            &adapter,
            kb.as_deref(),
            &cutoffs,
            workers,
            timeout_secs,
            csv,
            &out_dir,
        ),
        Command::Report {
            scores_dir,
            out_dir,
            cat1_tolerance,
            cat2_shift_threshold,
        } => commands::report(&scores_dir, &out_dir, cat1_tolerance, cat2_shift_threshold),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", err.message());
            ExitCode::from(err.exit_code())
        }
    }
}
