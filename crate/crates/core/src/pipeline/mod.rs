//! Streaming corpus pipeline: read annotated JSON Lines records, mask and
//! corrupt each one, write output records, and aggregate masking statistics.
//!
//! The pipeline is a reader feeding N stateless workers through bounded
//! channels, with an order-restoring writer at the end. Per-record random
//! streams are keyed by `(global_seed, record id)`, so the output is a pure
//! function of the input bytes and the configuration: any worker count, any
//! machine, any run produces byte-identical files.

mod format;
mod stats;

pub use format::{parse_record, OutputRecord, ParsedRecord, RecordError};
pub use stats::{MaskingStats, StatsDelta};

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::atomic::{AtomicBool, Ordering};
use std::thread;

use crossbeam_channel::bounded;
use thiserror::Error;

use crate::corruption::{corrupt, load_replacement_vocab, CorruptionError, CorruptionPolicy};
use crate::pmi::{build_vocab, segment_by_ngrams, NgramCounts, PmiError, PmiVocabulary};
use crate::rng::{RandomStream, StreamPurpose};
use crate::strategies::{apply_strategy, SpanParams, StrategyContext, StrategyError};
use crate::types::{MaskingConfig, Strategy};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("{path}:{line}: {message}", path = .path.display())]
    Record {
        path: PathBuf,
        line: u64,
        message: String,
    },
    #[error("pmi vocabulary: {0}")]
    Vocab(#[from] PmiError),
    #[error("corruption policy: {0}")]
    Policy(#[from] CorruptionError),
}

impl PipelineError {
    /// Process exit code class: 2 for I/O failures, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Io(_)
            | PipelineError::Vocab(PmiError::Io(_))
            | PipelineError::Policy(CorruptionError::VocabIo(_)) => 2,
            _ => 1,
        }
    }
}

/// What to do with a malformed input line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OnError {
    /// Stop the run and report the line.
    #[default]
    Abort,
    /// Log the line to stderr, count it, and continue.
    Skip,
}

impl FromStr for OnError {
    type Err = String;

    fn from_str(s: &str) -> Result<OnError, String> {
        match s.to_ascii_lowercase().as_str() {
            "abort" => Ok(OnError::Abort),
            "skip" => Ok(OnError::Skip),
            other => Err(format!(
                "unknown on-error mode {other:?} (expected skip or abort)"
            )),
        }
    }
}

/// Fully-resolved pipeline configuration.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub inputs: Vec<PathBuf>,
    pub output: PathBuf,
    pub masking: MaskingConfig,
    pub corruption: CorruptionPolicy,
    pub pmi_vocab: Option<PathBuf>,
    pub span: Option<SpanParams>,
    pub workers: usize,
    pub stats_out: Option<PathBuf>,
    pub on_error: OnError,
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.inputs.is_empty() {
            return Err(PipelineError::Config("no input files".into()));
        }
        if self.workers < 1 {
            return Err(PipelineError::Config("workers must be at least 1".into()));
        }
        self.masking
            .validate()
            .map_err(|e| PipelineError::Config(e.to_string()))?;
        if let Some(span) = self.span {
            span.validate()
                .map_err(|e| PipelineError::Config(e.to_string()))?;
        }
        if self.masking.strategy == Strategy::Pmi && self.pmi_vocab.is_none() {
            return Err(PipelineError::Config(
                "pmi strategy requires a pmi_vocab path".into(),
            ));
        }
        self.corruption.validate()?;
        Ok(())
    }
}

/// Settings document: every field optional so a config file and CLI flags can
/// be overlaid before building the final [`PipelineConfig`].
///
/// The config file is a flat key-value document, one `key = value` pair per
/// line, `#` starting a comment. Keys: `input` (repeatable), `output`,
/// `strategy`, `rate`, `seed`, `workers`, `pmi_vocab`, `stats_out`,
/// `on_error` (`skip`/`abort`), `mask_token`, `mask_prob`, `random_prob`,
/// `keep_prob`, `replacement_vocab` (path), `span_geometric_success`,
/// `span_max_len`.
#[derive(Debug, Clone, Default)]
pub struct PipelineSettings {
    pub inputs: Vec<PathBuf>,
    pub output: Option<PathBuf>,
    pub strategy: Option<Strategy>,
    pub rate: Option<f64>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub pmi_vocab: Option<PathBuf>,
    pub stats_out: Option<PathBuf>,
    pub on_error: Option<OnError>,
    pub mask_token: Option<String>,
    pub mask_prob: Option<f64>,
    pub random_prob: Option<f64>,
    pub keep_prob: Option<f64>,
    pub replacement_vocab: Option<PathBuf>,
    pub span_geometric_success: Option<f64>,
    pub span_max_len: Option<usize>,
}

impl PipelineSettings {
    pub fn parse_file(path: impl AsRef<Path>) -> Result<PipelineSettings, PipelineError> {
        let text = std::fs::read_to_string(&path)?;
        PipelineSettings::parse_str(&text)
    }

    pub fn parse_str(text: &str) -> Result<PipelineSettings, PipelineError> {
        let mut settings = PipelineSettings::default();
        for (index, raw_line) in text.lines().enumerate() {
            let line = raw_line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |message: String| {
                PipelineError::Config(format!("config line {}: {message}", index + 1))
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| bad(format!("expected key = value, found {line:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            if value.is_empty() {
                return Err(bad(format!("empty value for key {key:?}")));
            }
            fn parsed<T: FromStr>(key: &str, value: &str) -> Result<T, String> {
                value
                    .parse()
                    .map_err(|_| format!("malformed {key} value {value:?}"))
            }
            match key {
                "input" => settings.inputs.push(PathBuf::from(value)),
                "output" => settings.output = Some(PathBuf::from(value)),
                "strategy" => settings.strategy = Some(parsed(key, value).map_err(bad)?),
                "rate" => settings.rate = Some(parsed(key, value).map_err(bad)?),
                "seed" => settings.seed = Some(parsed(key, value).map_err(bad)?),
                "workers" => settings.workers = Some(parsed(key, value).map_err(bad)?),
                "pmi_vocab" => settings.pmi_vocab = Some(PathBuf::from(value)),
                "stats_out" => settings.stats_out = Some(PathBuf::from(value)),
                "on_error" => {
                    settings.on_error = Some(OnError::from_str(value).map_err(bad)?);
                }
                "mask_token" => settings.mask_token = Some(value.to_string()),
                "mask_prob" => settings.mask_prob = Some(parsed(key, value).map_err(bad)?),
                "random_prob" => settings.random_prob = Some(parsed(key, value).map_err(bad)?),
                "keep_prob" => settings.keep_prob = Some(parsed(key, value).map_err(bad)?),
                "replacement_vocab" => settings.replacement_vocab = Some(PathBuf::from(value)),
                "span_geometric_success" => {
                    settings.span_geometric_success = Some(parsed(key, value).map_err(bad)?)
                }
                "span_max_len" => settings.span_max_len = Some(parsed(key, value).map_err(bad)?),
                other => return Err(bad(format!("unknown key {other:?}"))),
            }
        }
        Ok(settings)
    }

    /// Overlay `over` on top of `self`: any field set in `over` wins, and
    /// `over`'s inputs replace `self`'s when non-empty.
    pub fn overlaid(mut self, over: PipelineSettings) -> PipelineSettings {
        if !over.inputs.is_empty() {
            self.inputs = over.inputs;
        }
        macro_rules! take {
            ($($field:ident),* $(,)?) => {
                $(if over.$field.is_some() { self.$field = over.$field; })*
            };
        }
        take!(
            output,
            strategy,
            rate,
            seed,
            workers,
            pmi_vocab,
            stats_out,
            on_error,
            mask_token,
            mask_prob,
            random_prob,
            keep_prob,
            replacement_vocab,
            span_geometric_success,
            span_max_len,
        );
        self
    }

    /// Resolve defaults, load the replacement vocabulary if any, and build a
    /// validated [`PipelineConfig`].
    pub fn build(self) -> Result<PipelineConfig, PipelineError> {
        let output = self
            .output
            .ok_or_else(|| PipelineError::Config("no output path".into()))?;
        let strategy = self
            .strategy
            .ok_or_else(|| PipelineError::Config("no strategy".into()))?;
        let rate = self
            .rate
            .ok_or_else(|| PipelineError::Config("no masking rate".into()))?;

        let defaults = CorruptionPolicy::default();
        let replacement_vocab = match &self.replacement_vocab {
            Some(path) => load_replacement_vocab(path)?,
            None => Vec::new(),
        };
        let corruption = CorruptionPolicy {
            p_mask: self.mask_prob.unwrap_or(defaults.p_mask),
            p_random: self.random_prob.unwrap_or(defaults.p_random),
            p_keep: self.keep_prob.unwrap_or(defaults.p_keep),
            mask_token: self.mask_token.unwrap_or(defaults.mask_token),
            replacement_vocab,
        };
        let span = match (self.span_geometric_success, self.span_max_len) {
            (None, None) => None,
            (q, max_len) => {
                let defaults = SpanParams::default();
                Some(SpanParams {
                    geometric_success: q.unwrap_or(defaults.geometric_success),
                    max_len: max_len.unwrap_or(defaults.max_len),
                })
            }
        };

        let config = PipelineConfig {
            inputs: self.inputs,
            output,
            masking: MaskingConfig::new(strategy, rate, self.seed.unwrap_or(0)),
            corruption,
            pmi_vocab: self.pmi_vocab,
            span,
            workers: self.workers.unwrap_or(1),
            stats_out: self.stats_out,
            on_error: self.on_error.unwrap_or_default(),
        };
        config.validate()?;
        Ok(config)
    }
}

/// Mask and corrupt one input line. Pure in `(line, config)`: the masking and
/// corruption streams are derived from the record id, never from run state.
fn process_record(
    line: &str,
    masking: &MaskingConfig,
    ctx: &StrategyContext<'_>,
    policy: &CorruptionPolicy,
) -> Result<(String, StatsDelta), String> {
    let parsed = parse_record(line).map_err(|e| e.to_string())?;
    let seq = &parsed.seq;
    let mask = apply_strategy(seq, masking, ctx).map_err(|e| match e {
        StrategyError::Sequence(inner) => inner.to_string(),
        other => other.to_string(),
    })?;
    let mut delta = StatsDelta::for_record(seq, &mask, parsed.unknown_pos, masking.strategy);
    if masking.strategy == Strategy::Pmi {
        let vocab = ctx
            .pmi_vocab
            .expect("validated: pmi strategy has a vocabulary");
        let word_groups = seq.word_groups().map_err(|e| e.to_string())?;
        let segmentation = segment_by_ngrams(seq, vocab).map_err(|e| e.to_string())?;
        delta.set_pmi_group_sizes(&mask, &word_groups, &segmentation);
    }
    let mut rng = RandomStream::for_record(masking.global_seed, &seq.id, StreamPurpose::Corruption);
    let corrupted = corrupt(seq, &mask, policy, &mut rng).map_err(|e| e.to_string())?;
    let line = OutputRecord::new(corrupted, &mask).to_json_line();
    Ok((line, delta))
}

type WorkItem = (u64, usize, u64, String);
type RecordResult = Result<(String, StatsDelta), (usize, u64, String)>;

/// Run the pipeline: every input record yields exactly one output record, in
/// input order, regardless of worker count.
pub fn run(config: &PipelineConfig) -> Result<MaskingStats, PipelineError> {
    config.validate()?;
    let vocab = match &config.pmi_vocab {
        Some(path) => Some(PmiVocabulary::load(path)?),
        None => None,
    };
    let ctx = StrategyContext {
        pmi_vocab: vocab.as_ref(),
        span: config.span,
    };

    let out_file = File::create(&config.output)?;
    let mut writer = BufWriter::new(out_file);
    let mut stats = MaskingStats::new(Some(config.masking.strategy));

    let queue_cap = config.workers * 64;
    let (work_tx, work_rx) = bounded::<WorkItem>(queue_cap);
    let (result_tx, result_rx) = bounded::<(u64, RecordResult)>(queue_cap);
    let cancelled = AtomicBool::new(false);

    let run_error: Option<PipelineError> = thread::scope(|scope| {
        let reader_tx = work_tx.clone();
        let cancelled_ref = &cancelled;
        let reader = scope.spawn(move || -> Result<(), PipelineError> {
            let mut index = 0u64;
            for (file_idx, path) in config.inputs.iter().enumerate() {
                let file = BufReader::new(File::open(path)?);
                for (line_idx, line) in file.lines().enumerate() {
                    if cancelled_ref.load(Ordering::Relaxed) {
                        return Ok(());
                    }
                    let line = line?;
                    if reader_tx
                        .send((index, file_idx, line_idx as u64 + 1, line))
                        .is_err()
                    {
                        return Ok(());
                    }
                    index += 1;
                }
            }
            Ok(())
        });

        for _ in 0..config.workers {
            let work_rx = work_rx.clone();
            let result_tx = result_tx.clone();
            let ctx = &ctx;
            let masking = &config.masking;
            let policy = &config.corruption;
            let cancelled = &cancelled;
            scope.spawn(move || {
                while let Ok((index, file_idx, line_no, line)) = work_rx.recv() {
                    let result = if cancelled.load(Ordering::Relaxed) {
                        Err((file_idx, line_no, "cancelled".to_string()))
                    } else {
                        process_record(&line, masking, ctx, policy)
                            .map_err(|message| (file_idx, line_no, message))
                    };
                    if result_tx.send((index, result)).is_err() {
                        return;
                    }
                }
            });
        }
        // close our ends so the result channel drains once the workers finish
        drop(work_tx);
        drop(result_tx);
        drop(work_rx);

        let mut first_error: Option<PipelineError> = None;
        let mut pending: BTreeMap<u64, RecordResult> = BTreeMap::new();
        let mut next = 0u64;
        for (index, result) in result_rx {
            pending.insert(index, result);
            while let Some(result) = pending.remove(&next) {
                next += 1;
                if first_error.is_some() {
                    continue;
                }
                match result {
                    Ok((line, delta)) => {
                        if let Err(e) = writeln!(writer, "{line}") {
                            first_error = Some(e.into());
                            cancelled.store(true, Ordering::Relaxed);
                            continue;
                        }
                        stats.absorb(&delta);
                    }
                    Err((file_idx, line_no, message)) => {
                        let record_error = PipelineError::Record {
                            path: config.inputs[file_idx].clone(),
                            line: line_no,
                            message,
                        };
                        match config.on_error {
                            OnError::Skip => {
                                eprintln!("skipping {record_error}");
                                stats.skipped_records += 1;
                            }
                            OnError::Abort => {
                                first_error = Some(record_error);
                                cancelled.store(true, Ordering::Relaxed);
                            }
                        }
                    }
                }
            }
        }

        match reader.join().expect("reader thread panicked") {
            Err(e) if first_error.is_none() => Some(e),
            _ => first_error,
        }
    });

    if let Some(error) = run_error {
        return Err(error);
    }
    writer.flush()?;
    stats.finalize();
    if let Some(path) = &config.stats_out {
        let mut stats_file = BufWriter::new(File::create(path)?);
        writeln!(stats_file, "{}", stats.to_json())?;
        stats_file.flush()?;
    }
    Ok(stats)
}

/// One invariant violation found by [`validate`].
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub path: PathBuf,
    pub line: u64,
    pub message: String,
}

/// Validation outcome: total records seen and the first
/// [`MAX_REPORTED_VIOLATIONS`] violations.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub records: u64,
    pub total_violations: u64,
    pub violations: Vec<Violation>,
}

pub const MAX_REPORTED_VIOLATIONS: usize = 100;

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.total_violations == 0
    }
}

/// Check every record of the input files against the sequence invariants:
/// UTF-8 encoding, record schema, non-empty token texts, and the gapless
/// word-index order.
pub fn validate(inputs: &[PathBuf]) -> Result<ValidationReport, PipelineError> {
    let mut report = ValidationReport {
        records: 0,
        total_violations: 0,
        violations: Vec::new(),
    };
    for path in inputs {
        let mut reader = BufReader::new(File::open(path)?);
        let mut line_no = 0u64;
        let mut buffer = Vec::new();
        loop {
            buffer.clear();
            if reader.read_until(b'\n', &mut buffer)? == 0 {
                break;
            }
            line_no += 1;
            report.records += 1;
            if buffer.last() == Some(&b'\n') {
                buffer.pop();
                if buffer.last() == Some(&b'\r') {
                    buffer.pop();
                }
            }
            let message = match std::str::from_utf8(&buffer) {
                Err(_) => Some("encoding error: line is not valid UTF-8".to_string()),
                Ok(line) => parse_record(line).err().map(|e| e.to_string()),
            };
            if let Some(message) = message {
                report.total_violations += 1;
                if report.violations.len() < MAX_REPORTED_VIOLATIONS {
                    report.violations.push(Violation {
                        path: path.clone(),
                        line: line_no,
                        message,
                    });
                }
            }
        }
    }
    Ok(report)
}

/// Recompute aggregate masking statistics from an output file's mask fields.
pub fn stats_from_output(path: impl AsRef<Path>) -> Result<MaskingStats, PipelineError> {
    let path = path.as_ref();
    let reader = BufReader::new(File::open(path)?);
    let mut stats = MaskingStats::new(None);
    for (line_idx, line) in reader.lines().enumerate() {
        let line = line?;
        let record = OutputRecord::parse(&line).map_err(|e| PipelineError::Record {
            path: path.to_path_buf(),
            line: line_idx as u64 + 1,
            message: e.to_string(),
        })?;
        stats.records += 1;
        stats.tokens += record.mask.len() as u64;
        stats.masked_tokens += record.mask.iter().filter(|&&b| b != 0).count() as u64;
    }
    stats.finalize();
    Ok(stats)
}

/// Count n-grams across the input corpus with `workers` parallel counters and
/// build the PMI vocabulary. Additive merging makes the result independent of
/// worker count and input order; malformed records abort.
pub fn pmi_build(
    inputs: &[PathBuf],
    n_max: usize,
    top_k: usize,
    min_count: u64,
    workers: usize,
) -> Result<(PmiVocabulary, u64), PipelineError> {
    if inputs.is_empty() {
        return Err(PipelineError::Config("no input files".into()));
    }
    if !(2..=5).contains(&n_max) {
        return Err(PipelineError::Config(format!(
            "n_max {n_max} is outside 2..=5"
        )));
    }
    if top_k < 1 {
        return Err(PipelineError::Config("top_k must be at least 1".into()));
    }
    if workers < 1 {
        return Err(PipelineError::Config("workers must be at least 1".into()));
    }

    let (work_tx, work_rx) = bounded::<(usize, u64, String)>(workers * 64);
    let cancelled = AtomicBool::new(false);

    let (counts, records, first_error) = thread::scope(|scope| {
        let reader_tx = work_tx.clone();
        let cancelled_ref = &cancelled;
        let reader = scope.spawn(move || -> Result<u64, PipelineError> {
            let mut records = 0u64;
            for (file_idx, path) in inputs.iter().enumerate() {
                let file = BufReader::new(File::open(path)?);
                for (line_idx, line) in file.lines().enumerate() {
                    if cancelled_ref.load(Ordering::Relaxed) {
                        return Ok(records);
                    }
                    if reader_tx
                        .send((file_idx, line_idx as u64 + 1, line?))
                        .is_err()
                    {
                        return Ok(records);
                    }
                    records += 1;
                }
            }
            Ok(records)
        });

        let mut handles = Vec::new();
        for _ in 0..workers {
            let work_rx = work_rx.clone();
            let cancelled = &cancelled;
            handles.push(scope.spawn(move || -> Result<NgramCounts, PipelineError> {
                let mut local = NgramCounts::new(n_max);
                while let Ok((file_idx, line_no, line)) = work_rx.recv() {
                    if cancelled.load(Ordering::Relaxed) {
                        continue;
                    }
                    let as_record_error = |message: String| PipelineError::Record {
                        path: inputs[file_idx].clone(),
                        line: line_no,
                        message,
                    };
                    let words = parse_record(&line)
                        .map_err(|e| as_record_error(e.to_string()))
                        .and_then(|parsed| {
                            parsed
                                .seq
                                .word_surfaces()
                                .map_err(|e| as_record_error(e.to_string()))
                        });
                    match words {
                        Ok(words) => local.add_words(&words),
                        Err(e) => {
                            cancelled.store(true, Ordering::Relaxed);
                            return Err(e);
                        }
                    }
                }
                Ok(local)
            }));
        }
        drop(work_tx);
        drop(work_rx);

        let reader_result = reader.join().expect("reader thread panicked");
        let mut merged = NgramCounts::new(n_max);
        let mut first_error: Option<PipelineError> = None;
        for handle in handles {
            match handle.join().expect("counter thread panicked") {
                Ok(local) => merged.merge(local),
                Err(e) => {
                    first_error.get_or_insert(e);
                }
            }
        }
        let records = match reader_result {
            Ok(records) => records,
            Err(e) => {
                first_error.get_or_insert(e);
                0
            }
        };
        (merged, records, first_error)
    });

    if let Some(error) = first_error {
        return Err(error);
    }
    Ok((build_vocab(&counts, top_k, min_count), records))
}
