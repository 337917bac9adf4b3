//! `maskmill` — masking-strategy toolkit for MLM data preparation.
//!
//! Subcommands: `mask` (run the corpus pipeline), `validate` (check input
//! records), `pmi-build` (build a PMI n-gram vocabulary), `stats` (recompute
//! masking statistics from an output file), and `analyze` (sweep-result
//! reports). Exit codes: 0 success, 1 validation or configuration error,
//! 2 I/O error.

use std::fmt;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use maskmill_core::analysis::{
    competitiveness, delta_report, load_results, write_competitiveness_csv, write_delta_csv,
    AnalysisError, Indicator,
};
use maskmill_core::pipeline::{self, stats_from_output, OnError, PipelineError, PipelineSettings};
use maskmill_core::pmi::{DEFAULT_MIN_COUNT, DEFAULT_TOP_K};
use maskmill_core::types::Strategy;

#[derive(Parser)]
#[command(
    name = "maskmill",
    version,
    about = "Masking strategies, PMI vocabularies, and sweep analysis for MLM data preparation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mask and corrupt a corpus, writing one output record per input record.
    Mask(Box<MaskArgs>),
    /// Check every input record against the sequence invariants.
    Validate(ValidateArgs),
    /// Build a PMI n-gram vocabulary from a corpus.
    PmiBuild(PmiBuildArgs),
    /// Recompute masking statistics from a masked output file.
    Stats(StatsArgs),
    /// Analyze sweep results.
    #[command(subcommand)]
    Analyze(AnalyzeCommand),
}

#[derive(Args)]
struct MaskArgs {
    /// Config file (flat key = value lines); flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Input corpus file (JSON Lines); repeatable.
    #[arg(long)]
    input: Vec<PathBuf>,
    /// Output file.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Masking strategy: uniform, whole-word, noun-verb, span, or pmi.
    #[arg(long, value_parser = Strategy::from_str)]
    strategy: Option<Strategy>,
    /// Target masking rate in [0, 1].
    #[arg(long)]
    rate: Option<f64>,
    /// Global seed keying every per-record random stream.
    #[arg(long)]
    seed: Option<u64>,
    /// PMI vocabulary file (required for the pmi strategy).
    #[arg(long)]
    pmi_vocab: Option<PathBuf>,
    /// Worker thread count.
    #[arg(long)]
    workers: Option<usize>,
    /// Write run statistics as JSON to this path.
    #[arg(long)]
    stats_out: Option<PathBuf>,
    /// What to do with a malformed input line: skip or abort.
    #[arg(long, value_parser = OnError::from_str)]
    on_error: Option<OnError>,
    /// Mask token text.
    #[arg(long)]
    mask_token: Option<String>,
    /// Probability a masked position becomes the mask token.
    #[arg(long)]
    mask_prob: Option<f64>,
    /// Probability a masked position becomes a random replacement.
    #[arg(long)]
    random_prob: Option<f64>,
    /// Probability a masked position keeps its token.
    #[arg(long)]
    keep_prob: Option<f64>,
    /// Replacement vocabulary file, one token per line.
    #[arg(long)]
    replacement_vocab: Option<PathBuf>,
    /// Span strategy geometric success probability.
    #[arg(long)]
    span_geometric_success: Option<f64>,
    /// Span strategy maximum span length.
    #[arg(long)]
    span_max_len: Option<usize>,
}

#[derive(Args)]
struct ValidateArgs {
    /// Input corpus files.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
}

#[derive(Args)]
struct PmiBuildArgs {
    /// Input corpus file (JSON Lines); repeatable.
    #[arg(long, required = true)]
    input: Vec<PathBuf>,
    /// Vocabulary output path.
    #[arg(long)]
    out: PathBuf,
    /// Longest n-gram to count (2..=5).
    #[arg(long, default_value_t = 5)]
    n_max: usize,
    /// Vocabulary size kept per n-gram length.
    #[arg(long, default_value_t = DEFAULT_TOP_K)]
    top_k: usize,
    /// Minimum occurrence count for an n-gram to be scored.
    #[arg(long, default_value_t = DEFAULT_MIN_COUNT)]
    min_count: u64,
    /// Worker thread count.
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

#[derive(Args)]
struct StatsArgs {
    /// Masked output file to aggregate.
    input: PathBuf,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum AnalyzeCommand {
    /// Per (task, strategy) score change between two masking rates, with SEM.
    Delta(DeltaArgs),
    /// Per (task, rate) probability that the reference strategy wins.
    Compete(CompeteArgs),
}

#[derive(Args)]
struct DeltaArgs {
    /// Results CSV with header task,strategy,rate,seed,score.
    #[arg(long)]
    input: PathBuf,
    /// Base masking rate.
    #[arg(long)]
    base: f64,
    /// Target masking rate.
    #[arg(long)]
    target: f64,
    /// Pair seeds across rates and report the SEM of per-seed differences.
    #[arg(long)]
    paired: bool,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompeteArgs {
    /// Results CSV with header task,strategy,rate,seed,score.
    #[arg(long)]
    input: PathBuf,
    /// Reference strategy name, e.g. uniform.
    #[arg(long)]
    reference: String,
    /// Pair side counted as a win: reference-wins or other-wins.
    #[arg(long, default_value = "reference-wins", value_parser = parse_indicator)]
    indicator: Indicator,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_indicator(value: &str) -> Result<Indicator, String> {
    match value.to_ascii_lowercase().as_str() {
        "reference-wins" => Ok(Indicator::ReferenceWins),
        "other-wins" => Ok(Indicator::OtherWins),
        other => Err(format!(
            "unknown indicator {other:?} (expected reference-wins or other-wins)"
        )),
    }
}

enum CliError {
    Pipeline(PipelineError),
    Analysis(AnalysisError),
    Io(io::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Pipeline(e) => e.exit_code() as u8,
            CliError::Analysis(e) => e.exit_code() as u8,
            CliError::Io(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Pipeline(e) => e.fmt(f),
            CliError::Analysis(e) => e.fmt(f),
            CliError::Io(e) => e.fmt(f),
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> CliError {
        CliError::Pipeline(e)
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> CliError {
        CliError::Analysis(e)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> CliError {
        CliError::Io(e)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(error) => {
            eprintln!("error: {error}");
            ExitCode::from(error.exit_code())
        }
    }
}

fn dispatch(command: Command) -> Result<ExitCode, CliError> {
    match command {
        Command::Mask(args) => run_mask(*args),
        Command::Validate(args) => run_validate(args),
        Command::PmiBuild(args) => run_pmi_build(args),
        Command::Stats(args) => run_stats(args),
        Command::Analyze(AnalyzeCommand::Delta(args)) => run_delta(args),
        Command::Analyze(AnalyzeCommand::Compete(args)) => run_compete(args),
    }
}

fn run_mask(args: MaskArgs) -> Result<ExitCode, CliError> {
    let base = match &args.config {
        Some(path) => PipelineSettings::parse_file(path)?,
        None => PipelineSettings::default(),
    };
    let flags = PipelineSettings {
        inputs: args.input,
        output: args.output,
        strategy: args.strategy,
        rate: args.rate,
        seed: args.seed,
        workers: args.workers,
        pmi_vocab: args.pmi_vocab,
        stats_out: args.stats_out,
        on_error: args.on_error,
        mask_token: args.mask_token,
        mask_prob: args.mask_prob,
        random_prob: args.random_prob,
        keep_prob: args.keep_prob,
        replacement_vocab: args.replacement_vocab,
        span_geometric_success: args.span_geometric_success,
        span_max_len: args.span_max_len,
    };
    let config = base.overlaid(flags).build()?;
    let stats = pipeline::run(&config)?;
    if stats.unknown_pos_tags > 0 {
        eprintln!(
            "warning: {} unknown POS tags mapped to OTHER",
            stats.unknown_pos_tags
        );
    }
    if stats.skipped_records > 0 {
        eprintln!(
            "warning: skipped {} malformed records",
            stats.skipped_records
        );
    }
    println!(
        "masked {} records ({} tokens, {} masked, mean rate {:.4}) -> {}",
        stats.records,
        stats.tokens,
        stats.masked_tokens,
        stats.mean_rate,
        config.output.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn run_validate(args: ValidateArgs) -> Result<ExitCode, CliError> {
    let report = pipeline::validate(&args.inputs)?;
    if report.is_clean() {
        println!("ok: {} records, no violations", report.records);
        return Ok(ExitCode::SUCCESS);
    }
    for violation in &report.violations {
        println!(
            "{}:{}: {}",
            violation.path.display(),
            violation.line,
            violation.message
        );
    }
    if report.total_violations as usize > report.violations.len() {
        println!(
            "... and {} more",
            report.total_violations as usize - report.violations.len()
        );
    }
    println!(
        "{} violations in {} records",
        report.total_violations, report.records
    );
    Ok(ExitCode::from(1))
}

fn run_pmi_build(args: PmiBuildArgs) -> Result<ExitCode, CliError> {
    let (vocab, records) = pipeline::pmi_build(
        &args.input,
        args.n_max,
        args.top_k,
        args.min_count,
        args.workers,
    )?;
    vocab.save(&args.out).map_err(PipelineError::Vocab)?;
    let sizes: Vec<String> = (2..=5)
        .map(|n| format!("{}-grams: {}", n, vocab.ranked(n).len()))
        .collect();
    println!(
        "counted {} records; kept {} ({}) -> {}",
        records,
        vocab.len(),
        sizes.join(", "),
        args.out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn run_stats(args: StatsArgs) -> Result<ExitCode, CliError> {
    let stats = stats_from_output(&args.input)?;
    match &args.out {
        Some(path) => {
            let mut out = BufWriter::new(File::create(path)?);
            writeln!(out, "{}", stats.to_json())?;
            out.flush()?;
        }
        None => println!("{}", stats.to_json()),
    }
    Ok(ExitCode::SUCCESS)
}

fn run_delta(args: DeltaArgs) -> Result<ExitCode, CliError> {
    let table = load_results(&args.input)?;
    let report = delta_report(&table, args.base, args.target, args.paired)?;
    match &args.out {
        Some(path) => report.save_csv(path)?,
        None => {
            let mut stdout = io::stdout().lock();
            write_delta_csv(&report, &mut stdout)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn run_compete(args: CompeteArgs) -> Result<ExitCode, CliError> {
    let table = load_results(&args.input)?;
    let report = competitiveness(&table, &args.reference, args.indicator)?;
    match &args.out {
        Some(path) => report.save_csv(path)?,
        None => {
            let mut stdout = io::stdout().lock();
            write_competitiveness_csv(&report, &mut stdout)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}
