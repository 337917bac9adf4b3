//! Sweep-result analysis over downstream task scores.
//!
//! Input is a long-format CSV of `(task, strategy, rate, seed, score)` rows.
//! Two analyses are supported:
//!
//! - **delta report** — per (task, strategy), the change in mean score from a
//!   base masking rate to a target rate, with the standard error of that
//!   delta (per-rate SEMs combined in quadrature, or the SEM of per-seed
//!   differences in paired mode).
//! - **competitiveness** — per (task, rate), the empirical probability that a
//!   reference strategy outscores the others, over the cartesian product of
//!   reference and non-reference scores. Ties count as zero.
//!
//! Reports emit as plot-ready CSV with fixed formatting, byte-deterministic
//! for a given report.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("results line {line}: {reason}")]
    Malformed { line: u64, reason: String },
    #[error("duplicate result row at line {line}: ({task}, {strategy}, {rate}, {seed})")]
    DuplicateKey {
        task: String,
        strategy: String,
        rate: f64,
        seed: i64,
        line: u64,
    },
    #[error("missing result cells: {}", format_cells(.cells))]
    MissingCells { cells: Vec<(String, String, f64)> },
    #[error("no {reference:?} scores at (task {task:?}, rate {rate})")]
    MissingReference {
        reference: String,
        task: String,
        rate: f64,
    },
    #[error("no non-{reference:?} scores at (task {task:?}, rate {rate})")]
    NoOtherStrategies {
        reference: String,
        task: String,
        rate: f64,
    },
    #[error("paired mode needs matching seed sets for (task {task:?}, strategy {strategy:?}) at both rates")]
    PairedSeedMismatch { task: String, strategy: String },
}

impl AnalysisError {
    /// Process exit code class: 2 for I/O failures, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            AnalysisError::Io(_) => 2,
            _ => 1,
        }
    }
}

fn format_cells(cells: &[(String, String, f64)]) -> String {
    let items: Vec<String> = cells
        .iter()
        .map(|(task, strategy, rate)| format!("({task}, {strategy}, {rate})"))
        .collect();
    items.join(", ")
}

/// One downstream score observation.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub task: String,
    pub strategy: String,
    pub rate: f64,
    pub seed: i64,
    pub score: f64,
}

/// Uniqueness-validated table of sweep results.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    rows: Vec<ResultRow>,
}

impl ResultTable {
    /// Build a table, rejecting duplicate `(task, strategy, rate, seed)` keys.
    pub fn new(rows: Vec<ResultRow>) -> Result<ResultTable, AnalysisError> {
        let mut seen = BTreeSet::new();
        for (index, row) in rows.iter().enumerate() {
            let key = (
                row.task.clone(),
                row.strategy.clone(),
                row.rate.to_bits(),
                row.seed,
            );
            if !seen.insert(key) {
                return Err(AnalysisError::DuplicateKey {
                    task: row.task.clone(),
                    strategy: row.strategy.clone(),
                    rate: row.rate,
                    seed: row.seed,
                    // +2: one for the header, one for 1-based numbering
                    line: index as u64 + 2,
                });
            }
        }
        Ok(ResultTable { rows })
    }

    pub fn rows(&self) -> &[ResultRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

const RESULTS_HEADER: [&str; 5] = ["task", "strategy", "rate", "seed", "score"];

/// Read a results CSV with header `task,strategy,rate,seed,score`.
pub fn read_results(input: impl Read) -> Result<ResultTable, AnalysisError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(input);

    let headers = reader
        .headers()
        .map_err(|e| AnalysisError::Malformed {
            line: 1,
            reason: e.to_string(),
        })?
        .clone();
    if headers.iter().collect::<Vec<_>>() != RESULTS_HEADER {
        return Err(AnalysisError::Malformed {
            line: 1,
            reason: format!(
                "expected header {:?}, found {:?}",
                RESULTS_HEADER.join(","),
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }

    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| AnalysisError::Malformed {
            line: e.position().map(|p| p.line()).unwrap_or(0),
            reason: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let field = |i: usize, name: &str| -> Result<&str, AnalysisError> {
            record.get(i).ok_or_else(|| AnalysisError::Malformed {
                line,
                reason: format!("missing {name} field"),
            })
        };
        let parse_num = |value: &str, name: &str| -> Result<f64, AnalysisError> {
            value.parse().map_err(|_| AnalysisError::Malformed {
                line,
                reason: format!("malformed {name} value {value:?}"),
            })
        };
        let rate = parse_num(field(2, "rate")?, "rate")?;
        let seed: i64 = field(3, "seed")?
            .parse()
            .map_err(|_| AnalysisError::Malformed {
                line,
                reason: format!("malformed seed value {:?}", record.get(3).unwrap_or("")),
            })?;
        let score = parse_num(field(4, "score")?, "score")?;
        rows.push(ResultRow {
            task: field(0, "task")?.to_string(),
            strategy: field(1, "strategy")?.to_string(),
            rate,
            seed,
            score,
        });
    }
    ResultTable::new(rows)
}

/// [`read_results`] from a file path.
pub fn load_results(path: impl AsRef<Path>) -> Result<ResultTable, AnalysisError> {
    read_results(File::open(path)?)
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Standard error of the mean: sample standard deviation over sqrt(count).
/// Undefined for fewer than two observations.
fn sem(values: &[f64]) -> Option<f64> {
    if values.len() < 2 {
        return None;
    }
    let m = mean(values);
    let variance =
        values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (values.len() - 1) as f64;
    Some((variance / values.len() as f64).sqrt())
}

/// Score change for one (task, strategy) between the two rates.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaEntry {
    pub task: String,
    pub strategy: String,
    pub delta: f64,
    /// `None` when a cell has a single seed, leaving the SEM undefined.
    pub sem: Option<f64>,
}

/// Per (task, strategy) deltas, sorted by (task, strategy).
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaReport {
    pub base_rate: f64,
    pub target_rate: f64,
    pub paired: bool,
    pub entries: Vec<DeltaEntry>,
}

/// Change in mean score from `base_rate` to `target_rate` per (task, strategy).
///
/// Unpaired (default): `delta = mean(target) - mean(base)` and the SEM is the
/// quadrature combination of the two per-rate SEMs. Paired: seeds must match
/// across the two rates and the SEM is that of the per-seed differences.
/// Every (task, strategy) in the table must have both cells; missing ones are
/// reported together.
/// (task, strategy) -> rate bits -> (seed, score) observations.
type DeltaCells = BTreeMap<(String, String), BTreeMap<u64, Vec<(i64, f64)>>>;

pub fn delta_report(
    table: &ResultTable,
    base_rate: f64,
    target_rate: f64,
    paired: bool,
) -> Result<DeltaReport, AnalysisError> {
    let mut cells = DeltaCells::new();
    for row in table.rows() {
        cells
            .entry((row.task.clone(), row.strategy.clone()))
            .or_default()
            .entry(row.rate.to_bits())
            .or_default()
            .push((row.seed, row.score));
    }

    let mut missing = Vec::new();
    let mut entries = Vec::new();
    for ((task, strategy), by_rate) in &cells {
        let base = by_rate.get(&base_rate.to_bits());
        let target = by_rate.get(&target_rate.to_bits());
        if base.is_none() {
            missing.push((task.clone(), strategy.clone(), base_rate));
        }
        if target.is_none() {
            missing.push((task.clone(), strategy.clone(), target_rate));
        }
        let (Some(base), Some(target)) = (base, target) else {
            continue;
        };

        let (delta, delta_sem) = if paired {
            let base_by_seed: BTreeMap<i64, f64> = base.iter().copied().collect();
            let target_by_seed: BTreeMap<i64, f64> = target.iter().copied().collect();
            if base_by_seed.keys().ne(target_by_seed.keys()) {
                return Err(AnalysisError::PairedSeedMismatch {
                    task: task.clone(),
                    strategy: strategy.clone(),
                });
            }
            let diffs: Vec<f64> = base_by_seed
                .iter()
                .map(|(seed, b)| target_by_seed[seed] - b)
                .collect();
            (mean(&diffs), sem(&diffs))
        } else {
            let base_scores: Vec<f64> = base.iter().map(|(_, s)| *s).collect();
            let target_scores: Vec<f64> = target.iter().map(|(_, s)| *s).collect();
            let delta = mean(&target_scores) - mean(&base_scores);
            let delta_sem = match (sem(&base_scores), sem(&target_scores)) {
                (Some(b), Some(t)) => Some((b * b + t * t).sqrt()),
                _ => None,
            };
            (delta, delta_sem)
        };
        entries.push(DeltaEntry {
            task: task.clone(),
            strategy: strategy.clone(),
            delta,
            sem: delta_sem,
        });
    }
    if !missing.is_empty() {
        return Err(AnalysisError::MissingCells { cells: missing });
    }
    Ok(DeltaReport {
        base_rate,
        target_rate,
        paired,
        entries,
    })
}

/// Which side of a score pair counts toward the probability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Indicator {
    /// Count pairs where the reference strategy scores strictly higher.
    #[default]
    ReferenceWins,
    /// Count pairs where the other strategy scores strictly higher.
    OtherWins,
}

impl fmt::Display for Indicator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Indicator::ReferenceWins => f.write_str("reference-wins"),
            Indicator::OtherWins => f.write_str("other-wins"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompetitivenessEntry {
    pub task: String,
    pub rate: f64,
    pub p_hat: f64,
    /// Cartesian pair count behind `p_hat`.
    pub pairs: u64,
}

/// Per (task, rate) competitiveness of the reference strategy, sorted by
/// (task, rate).
#[derive(Debug, Clone, PartialEq)]
pub struct CompetitivenessReport {
    pub reference: String,
    pub indicator: Indicator,
    pub entries: Vec<CompetitivenessEntry>,
}

/// Empirical probability that the reference strategy beats the others.
///
/// Per (task, rate): with `U` the reference scores and `V` every other
/// strategy's scores, the probability is the fraction of the `|U| * |V|`
/// cartesian pairs where the indicator side is strictly greater. Ties
/// contribute zero. Every (task, rate) in the table must have scores on both
/// sides.
pub fn competitiveness(
    table: &ResultTable,
    reference: &str,
    indicator: Indicator,
) -> Result<CompetitivenessReport, AnalysisError> {
    // (task, rate bits) -> (reference scores, other scores)
    let mut cells: BTreeMap<(String, u64), (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for row in table.rows() {
        let cell = cells
            .entry((row.task.clone(), row.rate.to_bits()))
            .or_default();
        if row.strategy == reference {
            cell.0.push(row.score);
        } else {
            cell.1.push(row.score);
        }
    }

    let mut entries = Vec::new();
    for ((task, rate_bits), (reference_scores, other_scores)) in &cells {
        let rate = f64::from_bits(*rate_bits);
        if reference_scores.is_empty() {
            return Err(AnalysisError::MissingReference {
                reference: reference.to_string(),
                task: task.clone(),
                rate,
            });
        }
        if other_scores.is_empty() {
            return Err(AnalysisError::NoOtherStrategies {
                reference: reference.to_string(),
                task: task.clone(),
                rate,
            });
        }
        let mut wins = 0u64;
        for u in reference_scores {
            for x in other_scores {
                let won = match indicator {
                    Indicator::ReferenceWins => u > x,
                    Indicator::OtherWins => x > u,
                };
                if won {
                    wins += 1;
                }
            }
        }
        let pairs = (reference_scores.len() * other_scores.len()) as u64;
        entries.push(CompetitivenessEntry {
            task: task.clone(),
            rate,
            p_hat: wins as f64 / pairs as f64,
            pairs,
        });
    }
    Ok(CompetitivenessReport {
        reference: reference.to_string(),
        indicator,
        entries,
    })
}

fn csv_field(value: &str) -> String {
    if value.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", value.replace('"', "\"\""))
    } else {
        value.to_string()
    }
}

/// Write `task,strategy,delta,sem` rows, 6-decimal fixed, sorted by
/// (task, strategy); an undefined SEM prints as `NA`.
pub fn write_delta_csv(report: &DeltaReport, out: &mut impl Write) -> io::Result<()> {
    writeln!(out, "task,strategy,delta,sem")?;
    for entry in &report.entries {
        let sem = match entry.sem {
            Some(s) => format!("{s:.6}"),
            None => "NA".to_string(),
        };
        writeln!(
            out,
            "{},{},{:.6},{}",
            csv_field(&entry.task),
            csv_field(&entry.strategy),
            entry.delta,
            sem
        )?;
    }
    Ok(())
}

/// Write `task,rate,p_hat,pairs` rows, 6-decimal fixed, sorted by (task, rate).
pub fn write_competitiveness_csv(
    report: &CompetitivenessReport,
    out: &mut impl Write,
) -> io::Result<()> {
    writeln!(out, "task,rate,p_hat,pairs")?;
    for entry in &report.entries {
        writeln!(
            out,
            "{},{:.6},{:.6},{}",
            csv_field(&entry.task),
            entry.rate,
            entry.p_hat,
            entry.pairs
        )?;
    }
    Ok(())
}

impl DeltaReport {
    pub fn save_csv(&self, path: impl AsRef<Path>) -> io::Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        write_delta_csv(self, &mut out)?;
        out.flush()
    }
}

impl CompetitivenessReport {
    pub fn save_csv(&self, path: impl AsRef<Path>) -> io::Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        write_competitiveness_csv(self, &mut out)?;
        out.flush()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(task: &str, strategy: &str, rate: f64, seed: i64, score: f64) -> ResultRow {
        ResultRow {
            task: task.into(),
            strategy: strategy.into(),
            rate,
            seed,
            score,
        }
    }

    #[test]
    fn reads_a_valid_file() {
        let text = "task,strategy,rate,seed,score\n\
                    vqa,uniform,0.15,0,70.0\n\
                    vqa,uniform,0.15,1,71.0\n\
                    vqa,span,0.15,0,69.5\n";
        let table = read_results(text.as_bytes()).unwrap();
        assert_eq!(table.len(), 3);
        assert_eq!(table.rows()[2].strategy, "span");
    }

    #[test]
    fn empty_file_with_header_is_an_empty_table() {
        let table = read_results("task,strategy,rate,seed,score\n".as_bytes()).unwrap();
        assert!(table.is_empty());
    }

    #[test]
    fn rejects_duplicates_naming_the_row() {
        let text = "task,strategy,rate,seed,score\n\
                    vqa,uniform,0.15,0,70.0\n\
                    vqa,uniform,0.15,0,71.0\n";
        match read_results(text.as_bytes()) {
            Err(AnalysisError::DuplicateKey { line, seed, .. }) => {
                assert_eq!(line, 3);
                assert_eq!(seed, 0);
            }
            other => panic!("expected duplicate error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_malformed_numbers_with_line() {
        let text = "task,strategy,rate,seed,score\n\
                    vqa,uniform,0.15,0,70.0\n\
                    vqa,uniform,abc,0,70.0\n";
        match read_results(text.as_bytes()) {
            Err(AnalysisError::Malformed { line, reason }) => {
                assert_eq!(line, 3);
                assert!(reason.contains("rate"), "{reason}");
            }
            other => panic!("expected malformed error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_wrong_header() {
        assert!(matches!(
            read_results("a,b,c,d,e\n".as_bytes()),
            Err(AnalysisError::Malformed { line: 1, .. })
        ));
    }

    fn fixture_70s() -> ResultTable {
        ResultTable::new(vec![
            row("vqa", "uniform", 0.15, 0, 70.0),
            row("vqa", "uniform", 0.15, 1, 71.0),
            row("vqa", "uniform", 0.15, 2, 72.0),
            row("vqa", "uniform", 0.60, 0, 73.0),
            row("vqa", "uniform", 0.60, 1, 74.0),
            row("vqa", "uniform", 0.60, 2, 75.0),
        ])
        .unwrap()
    }

    #[test]
    fn delta_worked_example() {
        let report = delta_report(&fixture_70s(), 0.15, 0.60, false).unwrap();
        assert_eq!(report.entries.len(), 1);
        let entry = &report.entries[0];
        assert!((entry.delta - 3.0).abs() < 1e-9);
        // sd 1 at each rate, sem 1/sqrt(3) each, quadrature sqrt(2/3)
        assert!((entry.sem.unwrap() - 0.8164965809277261).abs() < 1e-12);
    }

    #[test]
    fn delta_of_identical_cells_is_zero() {
        let table = ResultTable::new(vec![
            row("t", "s", 0.15, 0, 5.0),
            row("t", "s", 0.15, 1, 7.0),
            row("t", "s", 0.60, 0, 5.0),
            row("t", "s", 0.60, 1, 7.0),
        ])
        .unwrap();
        let report = delta_report(&table, 0.15, 0.60, false).unwrap();
        assert_eq!(report.entries[0].delta, 0.0);
        let per_rate_sem = sem(&[5.0, 7.0]).unwrap();
        let expected = (2.0 * per_rate_sem * per_rate_sem).sqrt();
        assert!((report.entries[0].sem.unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn single_seed_leaves_sem_undefined() {
        let table = ResultTable::new(vec![
            row("t", "s", 0.15, 0, 5.0),
            row("t", "s", 0.60, 0, 8.0),
        ])
        .unwrap();
        let report = delta_report(&table, 0.15, 0.60, false).unwrap();
        assert!((report.entries[0].delta - 3.0).abs() < 1e-12);
        assert_eq!(report.entries[0].sem, None);
    }

    #[test]
    fn missing_cells_are_listed() {
        let table = ResultTable::new(vec![
            row("t", "s", 0.15, 0, 5.0),
            row("t", "other", 0.60, 0, 8.0),
        ])
        .unwrap();
        match delta_report(&table, 0.15, 0.60, false) {
            Err(AnalysisError::MissingCells { cells }) => {
                assert_eq!(cells.len(), 2);
                assert!(cells.contains(&("t".into(), "other".into(), 0.15)));
                assert!(cells.contains(&("t".into(), "s".into(), 0.60)));
            }
            other => panic!("expected missing-cell error, got {other:?}"),
        }
    }

    #[test]
    fn paired_mode_uses_per_seed_differences() {
        // per-seed diffs all 3.0: paired sem is 0, unpaired is not
        let report = delta_report(&fixture_70s(), 0.15, 0.60, true).unwrap();
        assert!((report.entries[0].delta - 3.0).abs() < 1e-12);
        assert_eq!(report.entries[0].sem, Some(0.0));

        let mismatched = ResultTable::new(vec![
            row("t", "s", 0.15, 0, 5.0),
            row("t", "s", 0.15, 1, 6.0),
            row("t", "s", 0.60, 0, 8.0),
            row("t", "s", 0.60, 2, 9.0),
        ])
        .unwrap();
        assert!(matches!(
            delta_report(&mismatched, 0.15, 0.60, true),
            Err(AnalysisError::PairedSeedMismatch { .. })
        ));
    }

    #[test]
    fn competitiveness_worked_examples() {
        let table = ResultTable::new(vec![
            row("t", "uniform", 0.6, 0, 10.0),
            row("t", "span", 0.6, 0, 8.0),
            row("t", "pmi", 0.6, 0, 12.0),
        ])
        .unwrap();
        let report = competitiveness(&table, "uniform", Indicator::ReferenceWins).unwrap();
        assert_eq!(report.entries[0].p_hat, 0.5);
        assert_eq!(report.entries[0].pairs, 2);

        let table = ResultTable::new(vec![
            row("t", "uniform", 0.6, 0, 2.0),
            row("t", "uniform", 0.6, 1, 3.0),
            row("t", "span", 0.6, 0, 1.0),
            row("t", "span", 0.6, 1, 2.0),
            row("t", "pmi", 0.6, 0, 4.0),
            row("t", "pmi", 0.6, 1, 5.0),
        ])
        .unwrap();
        let report = competitiveness(&table, "uniform", Indicator::ReferenceWins).unwrap();
        assert_eq!(report.entries[0].p_hat, 0.375);
        assert_eq!(report.entries[0].pairs, 8);
    }

    #[test]
    fn competitiveness_dominance_is_one() {
        let table = ResultTable::new(vec![
            row("t", "uniform", 0.6, 0, 99.0),
            row("t", "span", 0.6, 0, 1.0),
            row("t", "pmi", 0.6, 0, 2.0),
        ])
        .unwrap();
        let report = competitiveness(&table, "uniform", Indicator::ReferenceWins).unwrap();
        assert_eq!(report.entries[0].p_hat, 1.0);
    }

    #[test]
    fn competitiveness_requires_both_sides() {
        let only_reference = ResultTable::new(vec![row("t", "uniform", 0.6, 0, 1.0)]).unwrap();
        assert!(matches!(
            competitiveness(&only_reference, "uniform", Indicator::ReferenceWins),
            Err(AnalysisError::NoOtherStrategies { .. })
        ));
        let no_reference = ResultTable::new(vec![row("t", "span", 0.6, 0, 1.0)]).unwrap();
        assert!(matches!(
            competitiveness(&no_reference, "uniform", Indicator::ReferenceWins),
            Err(AnalysisError::MissingReference { .. })
        ));
    }

    #[test]
    fn csv_emission_is_deterministic_and_sorted() {
        let table = ResultTable::new(vec![
            row("b", "s2", 0.15, 0, 1.0),
            row("b", "s2", 0.60, 0, 2.0),
            row("a", "s1", 0.15, 0, 3.0),
            row("a", "s1", 0.60, 0, 5.0),
            row("a", "s2", 0.15, 0, 3.0),
            row("a", "s2", 0.60, 0, 4.0),
        ])
        .unwrap();
        let report = delta_report(&table, 0.15, 0.60, false).unwrap();
        let mut first = Vec::new();
        write_delta_csv(&report, &mut first).unwrap();
        let mut second = Vec::new();
        write_delta_csv(&report, &mut second).unwrap();
        assert_eq!(first, second);
        let text = String::from_utf8(first).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(
            lines,
            vec![
                "task,strategy,delta,sem",
                "a,s1,2.000000,NA",
                "a,s2,1.000000,NA",
                "b,s2,1.000000,NA",
            ]
        );
    }

    #[test]
    fn empty_report_emits_header_only() {
        let report = DeltaReport {
            base_rate: 0.15,
            target_rate: 0.6,
            paired: false,
            entries: Vec::new(),
        };
        let mut out = Vec::new();
        write_delta_csv(&report, &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "task,strategy,delta,sem\n");

        let report = CompetitivenessReport {
            reference: "uniform".into(),
            indicator: Indicator::ReferenceWins,
            entries: Vec::new(),
        };
        let mut out = Vec::new();
        write_competitiveness_csv(&report, &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "task,rate,p_hat,pairs\n");
    }

    #[test]
    fn csv_fields_with_commas_are_quoted() {
        assert_eq!(csv_field("Flickr Image R@1"), "Flickr Image R@1");
        assert_eq!(csv_field("a,b"), "\"a,b\"");
        assert_eq!(csv_field("a\"b"), "\"a\"\"b\"");
    }
}
